"""Pick the number of topics by held-out perplexity.

Perplexity drops steeply until K reaches the true topic count and then
flattens out.
"""
import io

from interestnet import k_sweep
from interestnet.synthgen import generate_ipm

corpus, _ = generate_ipm(K=10, W=100, M=1000, tokens_per_doc=30, alpha=0.1, beta=0.01, seed=5)
result = k_sweep(corpus, "ipm", [2, 5, 10, 15, 20], alpha=0.1, sweeps=200, seed=5)
for row in result.rows:
    bar = "#" * int(row.perplexity * 3)
    print(f"K={row.value:<3} {row.perplexity:7.3f} {bar}")
print(f"uniform-model ceiling is W = {corpus.W}")

buf = io.StringIO()
result.write_csv(buf, record_time=False)
print("\n" + buf.getvalue())
