"""Find communities from who mentions whom, alongside topics.

Users are planted in four blocks; 90% of posts mention members of the
author's own block. The community model recovers the blocks.
"""
from collections import Counter

from interestnet import (Hyperparams, assign_communities, community_sweep, mention_similarity_report,
                         train)
from interestnet.evaluation import best_permutation_accuracy
from interestnet.synthgen import generate_cipm

corpus, truth = generate_cipm(K=5, W=50, U=200, C=4, docs_per_user=10, tokens_per_doc=20,
                              mentions_per_doc=3, alpha=0.1, beta=0.01, gamma=0.1, delta=0.1,
                              seed=0, epsilon=0.1)
hp = Hyperparams(K=5, C=4, alpha=0.1, beta=0.01, gamma=0.1)
# three chains, keep the most probable; guards against a chain that merges two blocks
est = train(corpus, "cipm", hp, sweeps=300, seed=0, chains=3)

argmax = assign_communities(est, "argmax")
acc = best_permutation_accuracy([argmax[u] for u in corpus.user_ids], truth.blocks, 4)
print(f"argmax accuracy against planted blocks: {acc:.3f}")
print("community sizes:", dict(sorted(Counter(argmax.values()).items())))

# threshold mode: every community with membership >= 1/C
multi = assign_communities(est, "threshold")
print("users in more than one community:", sum(len(s) > 1 for s in multi.values()))

print("\nuser  dominant-topic  share   (first five members of community 0)")
for uid, topic, share in mention_similarity_report(est, 0)[:5]:
    print(f"{uid:>5}  {topic:>14}  {share:.3f}")

print("\nmemberships as C grows")
for row in community_sweep(corpus, [2, 4, 8], K=5, alpha=0.1, sweeps=100, seed=0):
    print(f"  C={row.value:<2} users assigned {row.users_assigned}, memberships {row.memberships}")
