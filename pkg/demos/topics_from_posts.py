"""Recover the topics behind a batch of short posts.

We sample 2000 posts from five known topics, fit the document model, and
line the fitted topics up against the true ones.
"""
import numpy as np

from interestnet import Hyperparams, match_topics, top_words, train
from interestnet.synthgen import generate_ipm

corpus, truth = generate_ipm(K=5, W=50, M=2000, tokens_per_doc=20, alpha=0.1, beta=0.01, seed=1)
print(f"{corpus.M} posts, {corpus.N} tokens, vocabulary of {corpus.W}")

# priors matched to the generator; the library default would be alpha = 50/K
est = train(corpus, "ipm", Hyperparams(K=5, alpha=0.1, beta=0.01), sweeps=300, seed=1)

perm, dist = match_topics(est.phi, truth.phi)
for j, (i, d) in enumerate(zip(perm, dist)):
    words = ", ".join(w for w, _ in top_words(est, int(i), 5))
    print(f"true topic {j} <- fitted {i}  TV={d:.3f}  [{words}]")
print(f"mean total variation {dist.mean():.4f}")

# each post's mixture is a row of theta
print("post 0 mixture:", np.round(est.theta[0, perm], 3))
