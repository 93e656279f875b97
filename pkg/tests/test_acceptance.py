"""End-to-end acceptance criteria.

Each test checks one criterion at its stated tolerance and records a
PASS/FAIL line; the lines are printed together at the end of the pytest
run (and directly when this file is executed as a script).
"""
import hashlib
import json
import time
from pathlib import Path

import numpy as np
import pytest

from interestnet.cipm import assign_communities, community_threshold
from interestnet.cli import main as cli_main
from interestnet.corpus import InteractionRecord, build_corpus
from interestnet.estimate import ModelEstimate
from interestnet.evaluation import (best_permutation_accuracy, k_sweep, match_topics, perplexity,
                                    total_variation)
from interestnet.graph import (NODE_METRIC_COLUMNS, degree_distribution, fit_power_law, graph_from_edges,
                               graph_metrics, node_metrics)
from interestnet.models import init_state, train
from interestnet.sampler import CountMatrices, Hyperparams
from interestnet.synthgen import (generate_cipm, generate_ipm, generate_uipm, preferential_attachment_edges,
                                  sample_discrete_power_law)

import oracles
from conftest import random_corpus

RESULTS: dict[int, str] = {}


def report(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} ({detail})"
    RESULTS[number] = line
    print(line)
    assert passed, line


def test_c01_ipm_recovery():
    t0 = time.perf_counter()
    corpus, truth = generate_ipm(5, 50, 2000, 20, 0.1, 0.01, seed=1)
    est = train(corpus, "ipm", Hyperparams(K=5, alpha=0.1, beta=0.01), sweeps=500, seed=1)
    _, dist = match_topics(est.phi, truth.phi)
    secs = time.perf_counter() - t0
    report(1, "document-model topic recovery", dist.mean() <= 0.10 and secs <= 60,
           f"mean TV(phi)={dist.mean():.4f} <= 0.10, {secs:.1f}s <= 60s")


def test_c02_uipm_recovery():
    t0 = time.perf_counter()
    corpus, truth = generate_uipm(5, 50, 200, 10, 20, 0.1, 0.01, seed=2)
    est = train(corpus, "uipm", Hyperparams(K=5, alpha=0.1, beta=0.01), sweeps=500, seed=2)
    perm, dist = match_topics(est.phi, truth.phi)
    theta_tv = total_variation(est.theta[:, perm], truth.theta).mean()
    secs = time.perf_counter() - t0
    report(2, "user-model topic and mixture recovery", dist.mean() <= 0.10 and theta_tv <= 0.15 and secs <= 120,
           f"mean TV(phi)={dist.mean():.4f} <= 0.10, mean TV(theta)={theta_tv:.4f} <= 0.15, {secs:.1f}s")


def test_c03_cipm_community_recovery():
    t0 = time.perf_counter()
    corpus, truth = generate_cipm(5, 50, 200, 4, 10, 20, 3, 0.1, 0.01, 0.1, 0.1, seed=3, epsilon=0.1)
    hp = Hyperparams(K=5, C=4, alpha=0.1, beta=0.01, gamma=0.1, delta=0.1)
    est = train(corpus, "cipm", hp, sweeps=500, seed=3)
    assigned = assign_communities(est, "argmax")
    acc = best_permutation_accuracy([assigned[u] for u in corpus.user_ids], truth.blocks, 4)
    secs = time.perf_counter() - t0
    report(3, "community recovery on a planted partition", acc >= 0.80 and secs <= 300,
           f"accuracy={acc:.3f} >= 0.80, {secs:.1f}s <= 300s")


def test_c04_uniform_perplexity_is_vocabulary_size():
    worst = 0.0
    for seed in range(10):
        corpus = random_corpus(seed, n_docs=15, n_words=9)
        W = corpus.W
        est = ModelEstimate("ipm", np.full((4, W), 1.0 / W), np.full((1, 4), 0.25), Hyperparams(K=4),
                            CountMatrices.zeros(4, W, 1), corpus.vocabulary.index_to_word, ("u",))
        for sweeps in (0, 10):
            worst = max(worst, abs(perplexity(est, corpus, sweeps, seed=seed) - W) / W)
    report(4, "uniform model perplexity equals W", worst <= 1e-9, f"max relative error {worst:.2e} <= 1e-9")


def test_c05_perplexity_levels_off():
    corpus, _ = generate_ipm(10, 100, 1000, 30, 0.1, 0.01, seed=5)
    rows = {r.value: r.perplexity for r in k_sweep(corpus, "ipm", [2, 10, 20], alpha=0.1, sweeps=300, seed=5).rows}
    gain = rows[2] - rows[10]
    plateau = abs(rows[10] - rows[20])
    report(5, "held-out perplexity improves then levels off", rows[10] < rows[2] and plateau < gain,
           f"pp(2)={rows[2]:.3f}, pp(10)={rows[10]:.3f}, pp(20)={rows[20]:.3f}; |10-20|={plateau:.3f} < {gain:.3f}")


def test_c06_threshold_constant():
    mu = np.full((3, 40), 0.0)
    mu[0] = 1 / 40
    mu[1, :2] = [0.025, 0.975]
    mu[2, :2] = [0.0249, 0.9751]
    est = ModelEstimate("cipm", np.full((1, 2), 0.5), np.ones((3, 1)), Hyperparams(K=1, C=40),
                        CountMatrices.zeros(1, 2, 3), ("a", "b"), ("x", "y", "z"), mu=mu)
    got = assign_communities(est, "threshold")
    ok = community_threshold(40) == 0.025 and got["x"] == set(range(40)) and got["y"] == {0, 1} and got["z"] == {1}
    report(6, "membership threshold for C=40", ok, f"threshold={community_threshold(40)!r}")


def test_c07_reduction_identities():
    recs = [InteractionRecord(f"r{m}", f"u{m}", " ".join(f"w{(m * 5 + j * 3) % 37}" for j in range(10)), ())
            for m in range(100)]
    single = build_corpus(recs, stopwords=set())
    ipm = init_state("ipm", single, Hyperparams(K=6), 13).run(100)
    uipm = init_state("uipm", single, Hyperparams(K=6), 13).run(100)
    shared = random_corpus(77, n_docs=125, n_users=20, n_words=30, max_len=15)
    u2 = init_state("uipm", shared, Hyperparams(K=6), 13).run(100)
    c1 = init_state("cipm", shared, Hyperparams(K=6, C=1), 13).run(100)
    ok = np.array_equal(ipm.z, uipm.z) and np.array_equal(u2.z, c1.z)
    report(7, "one-post-per-user and single-community reductions", ok,
           f"{single.N} and {shared.N} tokens, 100 sweeps, identical assignments={ok}")


def test_c08_graph_oracles():
    rng = np.random.default_rng(8)
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(2, 11))
        adj = oracles.random_connected_graph(rng, n)
        g = graph_from_edges([(a, b) for a in range(n) for b in adj[a] if a < b], n)
        btw = oracles.all_shortest_paths_betweenness(adj)
        for v, r in enumerate(node_metrics(g)):
            dist = oracles.bfs(adj, v)
            mismatches += r.eccentricity != max(dist.values())
            mismatches += abs(r.closeness_centrality - (n - 1) / sum(dist.values())) > 1e-12
            mismatches += abs(r.betweenness_centrality - btw[v]) > 1e-12
            mismatches += abs(r.clustering_coefficient - oracles.clustering(adj, v)) > 1e-12
        mismatches += abs(graph_metrics(g).transitivity - oracles.transitivity(adj)) > 1e-12
    star = node_metrics(graph_from_edges([(0, i) for i in range(1, 5)]))
    tri = node_metrics(graph_from_edges([(0, 1), (1, 2), (2, 0)]))
    path = node_metrics(graph_from_edges([(0, 1), (1, 2)]))
    analytic = (star[0].betweenness_centrality == 1.0 and star[0].closeness_centrality == 1.0
                and abs(star[1].closeness_centrality - 4 / 7) < 1e-15
                and all(r.clustering_coefficient == 1.0 and r.betweenness_centrality == 0.0 for r in tri)
                and [r.betweenness_centrality for r in path] == [0.0, 1.0, 0.0])
    report(8, "graph metrics match brute-force oracles", mismatches == 0 and analytic,
           f"200 graphs, {mismatches} mismatches, analytic cases ok={analytic}")


def test_c09_metrics_schema_and_radius_diameter():
    import io
    from interestnet.graph import write_node_metrics_csv
    buf = io.StringIO()
    write_node_metrics_csv(node_metrics(graph_from_edges([(0, 1), (1, 2)])), buf)
    header = buf.getvalue().splitlines()[0].split(",")
    expected = ["User Id", "Degree", "Clustering Coefficient", "Eccentricity", "Average Neighbor Degree",
                "Betweenness Centrality", "Closeness Centrality"]
    rng = np.random.default_rng(9)
    violations = 0
    for _ in range(200):
        n = int(rng.integers(2, 30))
        adj = oracles.random_connected_graph(rng, n)
        m = graph_metrics(graph_from_edges([(a, b) for a in range(n) for b in adj[a] if a < b], n))
        violations += not (m.radius <= m.diameter <= 2 * m.radius)
    reported = 3 <= 5 <= 2 * 3
    ok = header == expected == list(NODE_METRIC_COLUMNS) and violations == 0 and reported
    report(9, "node-metrics columns and radius/diameter bounds", ok, f"{violations} bound violations in 200 graphs")


def test_c10_power_law():
    fit = fit_power_law(sample_discrete_power_law(2.5, 1, 10_000, seed=10), xmin=1)
    monotone = True
    for seed in range(5):
        ccdf = [p for _, p in degree_distribution(graph_from_edges(preferential_attachment_edges(2000, 2, seed))).ccdf]
        monotone &= all(a > b for a, b in zip(ccdf, ccdf[1:]))
    report(10, "power-law exponent and monotone degree CCDF", 2.35 <= fit.alpha <= 2.65 and monotone,
           f"alpha_hat={fit.alpha:.4f} in [2.35, 2.65], CCDFs monotone={monotone}")


def _digest(path: Path):
    if path.is_dir():
        return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(path.iterdir())}
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_c11_cli_determinism(tmp_path, capsys):
    gen = tmp_path / "gen"
    corpus = tmp_path / "corpus.json"
    model = tmp_path / "model"
    runs = [
        (["generate", "cipm", "--topics", "3", "--words", "25", "--users", "24", "--communities", "3",
          "--docs-per-user", "4", "--tokens-per-doc", "8", "--mentions-per-doc", "2", "--seed", "4",
          "--out", str(gen)], gen),
        (["ingest", str(gen / "records.jsonl"), "--out", str(corpus)], corpus),
        (["train", str(corpus), "--model", "cipm", "--topics", "3", "--communities", "3", "--sweeps", "30",
          "--seed", "7", "--out", str(model)], model),
        (["topics", str(model / "model.json"), "--out", str(tmp_path / "t.csv")], tmp_path / "t.csv"),
        (["users", str(model / "model.json"), "--out", str(tmp_path / "u.csv")], tmp_path / "u.csv"),
        (["communities", str(model / "model.json"), "--out", str(tmp_path / "c.csv")], tmp_path / "c.csv"),
        (["perplexity", str(corpus), "--model", "uipm", "--topics", "2", "3", "--sweeps", "20", "--seed", "1",
          "--out", str(tmp_path / "p.csv")], tmp_path / "p.csv"),
        (["graph", str(gen / "records.jsonl"), "--lcc", "--metrics", "--fit-powerlaw", "--out", str(tmp_path / "g")],
         tmp_path / "g"),
    ]
    differing = []
    for argv, target in runs:
        assert cli_main(argv) == 0, argv
        first = _digest(target)
        assert cli_main(argv) == 0, argv
        if _digest(target) != first:
            differing.append(argv[0])
    embedded = json.loads((model / "model.json").read_text())["metadata"]["config"]
    capsys.readouterr()
    report(11, "CLI reruns are byte-identical", not differing and embedded["seed"] == 7,
           f"{len(runs)} commands, differing={differing or 'none'}")


def test_c12_count_conservation():
    checked = 0
    failures = 0
    for seed in range(30):
        corpus = random_corpus(seed, n_docs=int(10 + seed % 7), n_users=int(3 + seed % 5), n_words=8)
        for kind in ("ipm", "uipm", "cipm"):
            state = init_state(kind, corpus, Hyperparams(K=1 + seed % 5, C=1 + seed % 4, alpha=0.2), seed)
            for _ in range(10):
                state.sweep()
                failures += state.counts != state.rebuild_counts()
                checked += 1
    report(12, "incremental counts equal rebuilt counts", failures == 0, f"{checked} sweeps checked, {failures} mismatches")


@pytest.mark.slow
def test_performance_smoke():
    corpus, _ = generate_ipm(20, 500, 500, 20, 0.5, 0.05, seed=0)
    t0 = time.perf_counter()
    train(corpus, "ipm", Hyperparams(K=100), sweeps=1000, seed=0)
    secs = time.perf_counter() - t0
    print(f"K=100, {corpus.N} tokens, 1000 sweeps: {secs:.1f}s")
    assert corpus.N == 10_000 and secs < 300


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
