"""Pool posts by author to estimate what each user is interested in."""
import numpy as np

from interestnet import Hyperparams, top_users, train, user_similarity
from interestnet.evaluation import match_topics, total_variation
from interestnet.synthgen import generate_uipm

corpus, truth = generate_uipm(K=5, W=50, U=200, docs_per_user=10, tokens_per_doc=20,
                              alpha=0.1, beta=0.01, seed=2)
est = train(corpus, "uipm", Hyperparams(K=5, alpha=0.1, beta=0.01), sweeps=300, seed=2)

perm, dist = match_topics(est.phi, truth.phi)
theta = est.theta[:, perm]
print(f"topic TV {dist.mean():.4f}, user-mixture TV {total_variation(theta, truth.theta).mean():.4f}")

# who talks most about the first true topic?
k = int(perm[0])
for uid, share in top_users(est, k, 5):
    print(f"  {uid:>5}  {share:.3f} of topic tokens")

sim = user_similarity(est)
np.fill_diagonal(sim, 0)
a, b = np.unravel_index(sim.argmax(), sim.shape)
print(f"most similar pair: {est.user_ids[a]} and {est.user_ids[b]} (cosine {sim[a, b]:.3f})")
