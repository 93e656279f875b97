"""Mention graph construction and network statistics.

Nodes are users; every mention in a post is one directed edge event
(mentioner -> mentioned by default), accumulated into edge weights.
All distance-based metrics use the unweighted undirected view, where two
users are adjacent if either mentioned the other.
"""
from __future__ import annotations

import csv
import math
from collections import Counter, deque
from dataclasses import astuple, dataclass, field
from typing import Iterable, Sequence
from xml.sax.saxutils import quoteattr

import numpy as np
from scipy.optimize import minimize_scalar
from numba import njit
from scipy.special import zeta

from .corpus import Corpus, InteractionRecord

DIRECTIONS = ("mentioner", "mentioned")

NODE_METRIC_COLUMNS = (
    "User Id",
    "Degree",
    "Clustering Coefficient",
    "Eccentricity",
    "Average Neighbor Degree",
    "Betweenness Centrality",
    "Closeness Centrality",
)


class DisconnectedGraphError(ValueError):
    """A metric that needs a connected graph got a disconnected one."""


@dataclass
class InteractionGraph:
    """Users plus a multiset of directed mention edges stored as weights."""

    node_ids: tuple[str, ...]
    edges: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_directed_edges(self) -> int:
        return len(self.edges)

    @property
    def undirected_edges(self) -> dict[tuple[int, int], int]:
        out: dict[tuple[int, int], int] = {}
        for (a, b), w in self.edges.items():
            key = (a, b) if a < b else (b, a)
            out[key] = out.get(key, 0) + w
        return out

    @property
    def n_edges(self) -> int:
        return len(self.undirected_edges)

    def neighbors(self) -> list[list[int]]:
        """Sorted undirected adjacency lists."""
        adj = [set() for _ in range(self.n_nodes)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return [sorted(s) for s in adj]

    def subgraph(self, nodes: Iterable[int]) -> "InteractionGraph":
        keep = sorted(set(nodes))
        remap = {old: new for new, old in enumerate(keep)}
        edges = {(remap[a], remap[b]): w for (a, b), w in self.edges.items() if a in remap and b in remap}
        return InteractionGraph(tuple(self.node_ids[i] for i in keep), edges)


def _add_edge(edges, node_index, node_ids, src, dst, direction):
    if src == dst:
        return
    if direction == "mentioned":
        src, dst = dst, src
    for uid in (src, dst):
        if uid not in node_index:
            node_index[uid] = len(node_ids)
            node_ids.append(uid)
    key = (node_index[src], node_index[dst])
    edges[key] = edges.get(key, 0) + 1


def _check_direction(direction):
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


def build_graph(records: Iterable[InteractionRecord], direction: str = "mentioner",
                include_isolates: bool = True) -> InteractionGraph:
    """Mention graph of a batch of records.

    ``direction="mentioner"`` points each edge from the author to the
    mentioned user; ``"mentioned"`` reverses it. Self-mentions are dropped.
    With ``include_isolates`` authors who mention nobody still get a node.
    """
    _check_direction(direction)
    node_index: dict[str, int] = {}
    node_ids: list[str] = []
    edges: dict[tuple[int, int], int] = {}
    for rec in records:
        if include_isolates and rec.author_id not in node_index:
            node_index[rec.author_id] = len(node_ids)
            node_ids.append(rec.author_id)
        for m in rec.mentions:
            _add_edge(edges, node_index, node_ids, rec.author_id, m, direction)
    return InteractionGraph(tuple(node_ids), edges)


def graph_from_corpus(corpus: Corpus, direction: str = "mentioner") -> InteractionGraph:
    """Mention graph over the corpus user table (documents that survived cleaning)."""
    _check_direction(direction)
    edges: dict[tuple[int, int], int] = {}
    for d in corpus.docs:
        for x in d.mention_indices:
            if x == d.author_index:
                continue
            key = (d.author_index, x) if direction == "mentioner" else (x, d.author_index)
            edges[key] = edges.get(key, 0) + 1
    return InteractionGraph(corpus.user_ids, edges)


def graph_from_edges(edges: Iterable[tuple[int, int]], n_nodes: int | None = None) -> InteractionGraph:
    """Graph on integer nodes ``0..n-1`` named by their index."""
    edges = list(edges)
    if n_nodes is None:
        n_nodes = 1 + max((max(e) for e in edges), default=-1)
    weights: dict[tuple[int, int], int] = {}
    for a, b in edges:
        if a != b:
            weights[(a, b)] = weights.get((a, b), 0) + 1
    return InteractionGraph(tuple(str(i) for i in range(n_nodes)), weights)


# ---------------------------------------------------------------------------
# degree distributions and power-law fit


@dataclass(frozen=True)
class DegreeDistribution:
    histogram: dict[int, int]
    ccdf: list[tuple[int, float]]


def degrees(graph: InteractionGraph, mode: str = "total") -> np.ndarray:
    """Unweighted in-, out- or undirected degree per node."""
    n = graph.n_nodes
    if mode == "in":
        return np.bincount([b for _, b in graph.edges], minlength=n)
    if mode == "out":
        return np.bincount([a for a, _ in graph.edges], minlength=n)
    if mode == "total":
        return np.array([len(nb) for nb in graph.neighbors()], dtype=np.int64)
    raise ValueError(f"mode must be 'in', 'out' or 'total', got {mode!r}")


def degree_distribution(graph: InteractionGraph, mode: str = "total") -> DegreeDistribution:
    """Degree histogram and the fraction of nodes with degree at least each value."""
    deg = degrees(graph, mode)
    hist = dict(sorted(Counter(deg.tolist()).items()))
    n = len(deg)
    ccdf = []
    remaining = n
    for d, count in hist.items():
        ccdf.append((d, remaining / n))
        remaining -= count
    return DegreeDistribution(hist, ccdf)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    xmin: int
    n_tail: int
    alpha_approx: float
    ks_distance: float


def _power_law_mle(tail: np.ndarray, xmin: int) -> tuple[float, float]:
    n = len(tail)
    log_sum = float(np.log(tail).sum())
    approx = 1.0 + n / float(np.log(tail / (xmin - 0.5)).sum())
    res = minimize_scalar(lambda a: n * math.log(zeta(a, xmin)) + a * log_sum,
                          bounds=(1.0 + 1e-6, 50.0), method="bounded", options={"xatol": 1e-10})
    return float(res.x), approx


def _ks_distance(tail: np.ndarray, alpha: float, xmin: int) -> float:
    values, counts = np.unique(tail, return_counts=True)
    empirical = 1.0 - np.concatenate(([0], np.cumsum(counts)[:-1])) / len(tail)  # P(X >= v)
    model = zeta(alpha, values) / zeta(alpha, xmin)
    return float(np.abs(empirical - model).max())


def fit_power_law(data: Sequence[int], xmin: int | None = None) -> PowerLawFit:
    """Discrete power-law fit ``P(d) ∝ d**-alpha`` for ``d >= xmin``.

    The exponent maximizes the exact discrete likelihood (Hurwitz zeta
    normalization). ``alpha_approx`` reports the closed-form
    ``1 + n / Σ ln(d / (xmin - 0.5))``, which is accurate only for larger
    ``xmin``. Without ``xmin`` every observed value is tried and the one
    minimizing the Kolmogorov-Smirnov distance of the tail wins.
    """
    d = np.asarray(data, dtype=np.float64)
    d = d[d >= 1]
    if xmin is None:
        best = None
        for candidate in np.unique(d).astype(int):
            tail = d[d >= candidate]
            if len(tail) < 2 or np.all(tail == tail[0]):
                continue
            fit = fit_power_law(tail, int(candidate))
            if best is None or fit.ks_distance < best.ks_distance:
                best = fit
        if best is None:
            raise ValueError("no candidate xmin leaves a non-degenerate tail")
        return best
    if xmin < 1:
        raise ValueError("xmin must be >= 1")
    tail = d[d >= xmin]
    if len(tail) < 2:
        raise ValueError("need at least 2 observations >= xmin")
    if np.all(tail == tail[0]):
        raise ValueError("degenerate tail: all observations are equal")
    alpha, approx = _power_law_mle(tail, xmin)
    return PowerLawFit(alpha, int(xmin), len(tail), approx, _ks_distance(tail, alpha, xmin))


# ---------------------------------------------------------------------------
# components and shortest paths


def connected_components(graph: InteractionGraph) -> list[list[int]]:
    """Undirected components, each sorted, ordered by smallest member."""
    adj = graph.neighbors()
    seen = np.zeros(graph.n_nodes, dtype=bool)
    comps = []
    for s in range(graph.n_nodes):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def largest_connected_component(graph: InteractionGraph) -> InteractionGraph:
    """Node-induced subgraph of the largest component; ties go to the one with the smallest node."""
    comps = connected_components(graph)
    if not comps:
        return graph
    best = max(comps, key=len)  # max keeps the first of equal-sized components
    return graph.subgraph(best)


def bfs_distances(adj: list[list[int]], source: int) -> np.ndarray:
    dist = np.full(len(adj), -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def _csr(adj: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(len(adj) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(nb) for nb in adj])
    indices = np.array([w for nb in adj for w in nb], dtype=np.int64)
    return indptr, indices


@njit(cache=True)
def _all_sources(indptr, indices):
    """One BFS per source: Brandes dependencies, eccentricity and distance sum.

    The backward pass finds predecessors as neighbors one level closer to
    the source, which is exact for unweighted graphs.
    """
    n = len(indptr) - 1
    score = np.zeros(n)
    ecc = np.zeros(n, dtype=np.int64)
    dist_sum = np.zeros(n, dtype=np.int64)
    reached = np.zeros(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.int64)
    sigma = np.empty(n)
    dep = np.empty(n)
    for s in range(n):
        dist[:] = -1
        sigma[:] = 0.0
        dep[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head, tail = 0, 1
        while head < tail:
            v = order[head]
            head += 1
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        reached[s] = tail
        ecc[s] = dist[order[tail - 1]]
        total = 0
        for i in range(tail):
            total += dist[order[i]]
        dist_sum[s] = total
        for i in range(tail - 1, 0, -1):
            w = order[i]
            for j in range(indptr[w], indptr[w + 1]):
                v = indices[j]
                if dist[v] == dist[w] - 1:
                    dep[v] += sigma[v] / sigma[w] * (1.0 + dep[w])
            score[w] += dep[w]
    return score, ecc, dist_sum, reached


def betweenness(adj: list[list[int]]) -> np.ndarray:
    """Unnormalized undirected betweenness by Brandes' accumulation.

    Each unordered pair is counted once.
    """
    return _all_sources(*_csr(adj))[0] / 2.0


def _require_connected(graph: InteractionGraph, adj) -> None:
    if graph.n_nodes == 0:
        raise DisconnectedGraphError("graph has no nodes")
    if np.any(bfs_distances(adj, 0) < 0):
        raise DisconnectedGraphError("graph is disconnected; pass its largest connected component")


def _triangles(adj: list[list[int]]) -> np.ndarray:
    sets = [set(nb) for nb in adj]
    tri = np.zeros(len(adj), dtype=np.int64)
    for v, nb in enumerate(adj):
        t = 0
        for i, a in enumerate(nb):
            sa = sets[a]
            for b in nb[i + 1:]:
                if b in sa:
                    t += 1
        tri[v] = t
    return tri


@dataclass(frozen=True)
class NodeMetrics:
    user_id: str
    degree: int
    clustering_coefficient: float
    eccentricity: int
    average_neighbor_degree: float
    betweenness_centrality: float
    closeness_centrality: float


def node_metrics(graph: InteractionGraph) -> list[NodeMetrics]:
    """Per-node degree, clustering, eccentricity, neighbor degree and centralities.

    Betweenness is normalized by the number of pairs not involving the node,
    ``(n-1)(n-2)/2``; closeness is ``(n-1)`` over the summed distances.
    Raises DisconnectedGraphError unless the undirected view is connected.
    """
    adj = graph.neighbors()
    _require_connected(graph, adj)
    n = graph.n_nodes
    deg = np.array([len(nb) for nb in adj], dtype=np.int64)
    tri = _triangles(adj)
    btw, ecc, dist_sum, _ = _all_sources(*_csr(adj))
    btw = btw / 2.0
    pair_norm = (n - 1) * (n - 2) / 2.0
    out = []
    for v in range(n):
        total = int(dist_sum[v])
        k = int(deg[v])
        out.append(NodeMetrics(
            user_id=graph.node_ids[v],
            degree=k,
            clustering_coefficient=2.0 * int(tri[v]) / (k * (k - 1)) if k >= 2 else 0.0,
            eccentricity=int(ecc[v]),
            average_neighbor_degree=float(deg[adj[v]].mean()) if k else 0.0,
            betweenness_centrality=float(btw[v] / pair_norm) if n > 2 else 0.0,
            closeness_centrality=(n - 1) / total if total > 0 else 0.0,
        ))
    return out


@dataclass(frozen=True)
class GraphMetrics:
    nodes: int
    edges: int
    density: float
    radius: int
    diameter: int
    transitivity: float


def graph_metrics(graph: InteractionGraph) -> GraphMetrics:
    n = graph.n_nodes
    if n < 2:
        raise ValueError("density is undefined for fewer than 2 nodes")
    adj = graph.neighbors()
    _require_connected(graph, adj)
    ecc = _all_sources(*_csr(adj))[1].tolist()
    E = sum(len(nb) for nb in adj) // 2
    triples = sum(len(nb) * (len(nb) - 1) // 2 for nb in adj)
    tri_total = int(_triangles(adj).sum())  # each triangle appears once per corner
    return GraphMetrics(
        nodes=n,
        edges=E,
        density=2.0 * E / (n * (n - 1)),
        radius=min(ecc),
        diameter=max(ecc),
        transitivity=tri_total / triples if triples else 0.0,
    )


# ---------------------------------------------------------------------------
# exports


def write_node_metrics_csv(rows: Sequence[NodeMetrics], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(NODE_METRIC_COLUMNS)
    for r in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in astuple(r)])


def write_edges_csv(graph: InteractionGraph, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("src_id", "dst_id", "weight"))
    for (a, b), w in sorted(graph.edges.items()):
        writer.writerow((graph.node_ids[a], graph.node_ids[b], w))


def write_graphml(graph: InteractionGraph, fh) -> None:
    fh.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    fh.write('<graphml xmlns="http://graphml.graphdrawing.org/xmlns">\n')
    fh.write('  <key id="weight" for="edge" attr.name="weight" attr.type="int"/>\n')
    fh.write('  <graph id="mentions" edgedefault="directed">\n')
    for uid in graph.node_ids:
        fh.write(f"    <node id={quoteattr(uid)}/>\n")
    for (a, b), w in sorted(graph.edges.items()):
        fh.write(f"    <edge source={quoteattr(graph.node_ids[a])} target={quoteattr(graph.node_ids[b])}>"
                 f'<data key="weight">{w}</data></edge>\n')
    fh.write("  </graph>\n</graphml>\n")
