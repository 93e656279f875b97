"""Characterize a mention network: components, node roles, degree tail."""
import io

import numpy as np

from interestnet import build_graph, degree_distribution, fit_power_law, graph_metrics, largest_connected_component
from interestnet.graph import degrees, graph_from_edges, node_metrics, write_node_metrics_csv
from interestnet.synthgen import generate_cipm, preferential_attachment_edges, to_records

# a mention graph built from posts
corpus, _ = generate_cipm(K=3, W=30, U=60, C=3, docs_per_user=3, tokens_per_doc=5, mentions_per_doc=1,
                          alpha=0.1, beta=0.05, gamma=0.1, delta=0.3, seed=3)
graph = build_graph(to_records(corpus))
lcc = largest_connected_component(graph)
print(f"{graph.n_nodes} users, {graph.n_directed_edges} directed edges; LCC has {lcc.n_nodes} users")
print(graph_metrics(lcc))

rows = sorted(node_metrics(lcc), key=lambda r: -r.degree)[:5]
buf = io.StringIO()
write_node_metrics_csv(rows, buf)
print("\nbusiest users\n" + buf.getvalue())

# degree tail of a growth network
g = graph_from_edges(preferential_attachment_edges(5000, 2, seed=1))
dist = degree_distribution(g)
for d, tail in dist.ccdf[:6]:
    print(f"P(degree >= {d:>2}) = {tail:.3f}")
fit = fit_power_law(degrees(g))
print(f"power-law fit: alpha={fit.alpha:.2f} from xmin={fit.xmin} ({fit.n_tail} nodes), KS={fit.ks_distance:.3f}")
print(f"max degree {degrees(g).max()}, median {np.median(degrees(g)):.0f}")
