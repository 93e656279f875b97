"""Command-line front end.

Subcommands: ingest, train, topics, users, communities, perplexity, graph,
generate. Option values resolve as command-line flag, then ``--config``
JSON file, then built-in default; the seed additionally falls back to the
``MT_SEED`` environment variable before its default. Every JSON artifact
embeds the resolved configuration, and directories get a ``run.json``.

Exit codes: 0 success, 1 invalid configuration or input, 2 I/O error,
3 internal-consistency fault.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .cipm import assign_communities, low_evidence_users, mention_similarity_report
from .corpus import Corpus, build_corpus, dumps_canonical, load_corpus, parse_records, write_records
from .errors import EmptyCorpusError, EmptyInputError, InternalConsistencyError
from .estimate import ModelEstimate, top_words
from .evaluation import k_sweep
from .graph import (build_graph, degree_distribution, degrees, fit_power_law, graph_from_corpus,
                    graph_metrics, largest_connected_component, node_metrics, write_edges_csv,
                    write_graphml, write_node_metrics_csv)
from .models import train
from .sampler import Hyperparams
from .synthgen import generate_cipm, generate_ipm, generate_uipm

logger = logging.getLogger("interestnet")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "ingest": {"min_word_count": 1, "stopwords": None},
    "train": {"model": None, "topics": None, "communities": None, "alpha": None, "beta": 0.01,
              "gamma": 0.1, "delta": None, "sweeps": 1000, "chains": 1, "top_n": 10,
              "trace_every": 10, "include_assignments": False},
    "topics": {"top_n": 10},
    "users": {"top_n": 10},
    "communities": {"mode": "threshold", "report": None},
    "perplexity": {"model": None, "topics": None, "communities": None, "alpha": None, "beta": 0.01,
                   "gamma": 0.1, "delta": None, "sweeps": 1000, "split_fraction": 0.9,
                   "fold_in_sweeps": 50, "record_time": False},
    "graph": {"direction": "mentioner", "lcc": False, "metrics": False, "fit_powerlaw": False,
              "xmin": None, "degree_mode": "total"},
    "generate": {"topics": 5, "words": 50, "docs": 1000, "users": 100, "communities": 4,
                 "docs_per_user": 10, "tokens_per_doc": 20, "mentions_per_doc": 3, "alpha": 0.1,
                 "beta": 0.01, "gamma": 0.1, "delta": 0.1, "epsilon": 0.1, "poisson_lengths": False},
}
SEEDED = {"train", "perplexity", "generate"}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="interestnet", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seeded=False):
        sp.add_argument("--config", help="JSON file of option values")
        sp.add_argument("--threads", type=int, help="cap on worker threads")
        if seeded:
            sp.add_argument("--seed", type=int)
        return sp

    def flag(sp, name, help=None):
        sp.add_argument(name, action="store_const", const=True, default=None, help=help)

    sp = common(sub.add_parser("ingest", help="parse JSON-lines records into a corpus snapshot"))
    sp.add_argument("input")
    sp.add_argument("--out", required=True)
    sp.add_argument("--min-word-count", type=int)
    sp.add_argument("--stopwords", help="file with one stopword per line")

    def priors(sp):
        sp.add_argument("--model", choices=("ipm", "uipm", "cipm"))
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--sweeps", type=int)
        sp.add_argument("--communities", type=int)

    sp = common(sub.add_parser("train", help="fit a model and export reports"), seeded=True)
    sp.add_argument("corpus")
    sp.add_argument("--out", required=True, help="output directory")
    priors(sp)
    sp.add_argument("--topics", type=int)
    sp.add_argument("--chains", type=int)
    sp.add_argument("--top-n", type=int)
    sp.add_argument("--trace-every", type=int)
    flag(sp, "--include-assignments")

    for name in ("topics", "users"):
        sp = common(sub.add_parser(name, help=f"per-topic {name[:-1]} ranking from a model snapshot"))
        sp.add_argument("model_file")
        sp.add_argument("--top-n", type=int)
        sp.add_argument("--out")

    sp = common(sub.add_parser("communities", help="community assignments from a CIPM snapshot"))
    sp.add_argument("model_file")
    sp.add_argument("--mode", choices=("threshold", "argmax"))
    sp.add_argument("--report", type=int, help="print topic-of-maximum-interest table for this community")
    sp.add_argument("--out")

    sp = common(sub.add_parser("perplexity", help="held-out perplexity across topic counts"), seeded=True)
    sp.add_argument("corpus")
    sp.add_argument("--out")
    priors(sp)
    sp.add_argument("--topics", type=int, nargs="+")
    sp.add_argument("--split-fraction", type=float)
    sp.add_argument("--fold-in-sweeps", type=int)
    flag(sp, "--record-time", "fill the seconds column (makes output non-reproducible)")

    sp = common(sub.add_parser("graph", help="mention graph exports and metrics"))
    sp.add_argument("input", help="JSON-lines records or a corpus snapshot")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--direction", choices=("mentioner", "mentioned"))
    flag(sp, "--lcc")
    flag(sp, "--metrics")
    flag(sp, "--fit-powerlaw")
    sp.add_argument("--xmin", type=int)
    sp.add_argument("--degree-mode", choices=("in", "out", "total"))

    sp = common(sub.add_parser("generate", help="sample a synthetic corpus"), seeded=True)
    sp.add_argument("process", choices=("ipm", "uipm", "cipm"))
    sp.add_argument("--out", required=True, help="output directory")
    for opt, typ in (("topics", int), ("words", int), ("docs", int), ("users", int), ("communities", int),
                     ("docs-per-user", int), ("tokens-per-doc", int), ("mentions-per-doc", int),
                     ("alpha", float), ("beta", float), ("gamma", float), ("delta", float),
                     ("epsilon", float)):
        sp.add_argument(f"--{opt}", type=typ)
    flag(sp, "--poisson-lengths")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over defaults."""
    cmd = args.command
    config = dict(DEFAULTS[cmd], threads=None)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            from_file = json.load(fh)
        if not isinstance(from_file, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(from_file) - set(config) - {"seed"}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        config.update(from_file)
    for key, value in vars(args).items():
        if key in ("config", "verbose", "command", "seed"):
            continue
        if value is not None or key not in config:
            config[key] = value
    if cmd in SEEDED:
        seed = args.seed
        if seed is None:
            seed = config.get("seed")
        if seed is None and os.environ.get("MT_SEED"):
            try:
                seed = int(os.environ["MT_SEED"])
            except ValueError:
                raise ConfigError("MT_SEED must be an integer") from None
        config["seed"] = 0 if seed is None else int(seed)
    config["command"] = cmd
    return config


def _validate_model_config(cfg: dict) -> list[str]:
    problems = []
    if cfg["model"] is None:
        problems.append("--model is required")
    if cfg["topics"] is None:
        problems.append("--topics is required")
    if cfg["model"] == "cipm" and cfg["communities"] is None:
        problems.append("--communities is required for the cipm model")
    if cfg["model"] in ("ipm", "uipm") and cfg["communities"] is not None:
        problems.append("--communities applies only to the cipm model")
    if cfg["sweeps"] is not None and cfg["sweeps"] < 0:
        problems.append("--sweeps must be >= 0")
    return problems


def _raise_problems(problems):
    if problems:
        raise ConfigError("; ".join(problems))


def _open_out(path):
    if path is None:
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


def _write_run(out_dir: Path, config: dict) -> None:
    (out_dir / "run.json").write_text(dumps_canonical({"config": config}), encoding="utf-8")


def _load_model(path) -> ModelEstimate:
    with open(path, "r", encoding="utf-8") as fh:
        return ModelEstimate.from_json(json.load(fh))


def _write_topics(est: ModelEstimate, top_n: int, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("topic", "rank", "word", "probability"))
    for k in range(est.K):
        for rank, (word, p) in enumerate(top_words(est, k, top_n), start=1):
            w.writerow((k, rank, word, repr(p)))


def _write_users(est: ModelEstimate, top_n: int, fh) -> None:
    from .uipm import top_users
    if est.kind == "ipm":
        raise ConfigError("user rankings need a uipm or cipm model")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("topic", "rank", "user_id", "probability"))
    for k in range(est.K):
        for rank, (uid, p) in enumerate(top_users(est, k, top_n), start=1):
            w.writerow((k, rank, uid, repr(float(p))))


def _write_communities(est: ModelEstimate, mode: str, fh) -> None:
    if est.mu is None:
        raise ConfigError("community assignments need a cipm model")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(("user_id", "community", "mu_probability", "assignment_mode"))
    assigned = assign_communities(est, mode)
    for u, uid in enumerate(est.user_ids):
        comms = sorted(assigned[uid]) if mode == "threshold" else [assigned[uid]]
        for c in comms:
            w.writerow((uid, c, repr(float(est.mu[u, c])), mode))


def cmd_ingest(cfg: dict) -> None:
    records, failures = parse_records(cfg["input"])
    stopwords = None
    if cfg["stopwords"]:
        with open(cfg["stopwords"], "r", encoding="utf-8") as fh:
            stopwords = {line.strip().lower() for line in fh if line.strip()}
    corpus = build_corpus(records, stopwords, cfg["min_word_count"])
    report = {
        "records_read": len(records),
        "parse_failures": len(failures),
        "docs_dropped": corpus.metadata["docs_dropped"],
        "W": corpus.W, "U": corpus.U, "M": corpus.M, "N": corpus.N,
    }
    corpus.metadata.clear()
    corpus.metadata.update({"report": report, "config": cfg})
    Path(cfg["out"]).write_text(corpus.dumps(), encoding="utf-8")
    sys.stdout.write(dumps_canonical(report))


def _hyperparams(cfg, K):
    return Hyperparams(K=K, C=cfg["communities"] or 1, alpha=cfg["alpha"], beta=cfg["beta"],
                       gamma=cfg["gamma"], delta=cfg["delta"])


def cmd_train(cfg: dict) -> None:
    _raise_problems(_validate_model_config(cfg) + (["--chains must be >= 1"] if cfg["chains"] < 1 else []))
    corpus = load_corpus(cfg["corpus"])
    hp = _hyperparams(cfg, cfg["topics"])
    est = train(corpus, cfg["model"], hp, cfg["sweeps"], cfg["seed"], cfg["trace_every"], cfg["chains"])
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "model.json").write_text(est.dumps(cfg["include_assignments"], cfg), encoding="utf-8")
    with open(out / "topics.csv", "w", encoding="utf-8", newline="") as fh:
        _write_topics(est, cfg["top_n"], fh)
    if est.kind in ("uipm", "cipm"):
        with open(out / "users.csv", "w", encoding="utf-8", newline="") as fh:
            _write_users(est, cfg["top_n"], fh)
    if est.kind == "cipm":
        with open(out / "communities.csv", "w", encoding="utf-8", newline="") as fh:
            _write_communities(est, "threshold", fh)
        weak = low_evidence_users(est)
        if weak:
            logger.warning("%d users authored no posts; their memberships are prior-only", len(weak))
    _write_run(out, cfg)


def cmd_topics(cfg):
    est = _load_model(cfg["model_file"])
    with _open_out(cfg["out"]) as fh:
        _write_topics(est, cfg["top_n"], fh)


def cmd_users(cfg):
    est = _load_model(cfg["model_file"])
    with _open_out(cfg["out"]) as fh:
        _write_users(est, cfg["top_n"], fh)


def cmd_communities(cfg):
    est = _load_model(cfg["model_file"])
    with _open_out(cfg["out"]) as fh:
        if cfg["report"] is not None:
            if est.mu is None:
                raise ConfigError("community reports need a cipm model")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("user_id", "topic", "probability"))
            for uid, k, p in mention_similarity_report(est, cfg["report"]):
                w.writerow((uid, k, repr(p)))
        else:
            _write_communities(est, cfg["mode"], fh)


def cmd_perplexity(cfg):
    problems = _validate_model_config(cfg)
    if not 0 < cfg["split_fraction"] < 1:
        problems.append("--split-fraction must lie in (0, 1)")
    _raise_problems(problems)
    corpus = load_corpus(cfg["corpus"])
    result = k_sweep(corpus, cfg["model"], cfg["topics"], alpha=cfg["alpha"], beta=cfg["beta"],
                     gamma=cfg["gamma"], delta=cfg["delta"], C=cfg["communities"] or 1,
                     sweeps=cfg["sweeps"], seed=cfg["seed"], train_fraction=cfg["split_fraction"],
                     fold_in_sweeps=cfg["fold_in_sweeps"])
    with _open_out(cfg["out"]) as fh:
        result.write_csv(fh, record_time=cfg["record_time"])


def _load_graph(path, direction):
    """Records JSON-lines, or a corpus snapshot (a single JSON object with docs)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except ValueError:
            obj = None
    if isinstance(obj, dict) and "vocabulary" in obj and "docs" in obj:
        return graph_from_corpus(Corpus.from_json(obj), direction)
    records, _ = parse_records(path)
    return build_graph(records, direction)


def cmd_graph(cfg):
    graph = _load_graph(cfg["input"], cfg["direction"])
    if cfg["lcc"]:
        graph = largest_connected_component(graph)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.csv", "w", encoding="utf-8", newline="") as fh:
        write_edges_csv(graph, fh)
    with open(out / "graph.graphml", "w", encoding="utf-8") as fh:
        write_graphml(graph, fh)
    dist = degree_distribution(graph, cfg["degree_mode"])
    with open(out / "degree_distribution.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("degree", "count", "ccdf"))
        for (d, count), (_, tail) in zip(dist.histogram.items(), dist.ccdf):
            w.writerow((d, count, repr(tail)))
    summary = {"config": cfg, "nodes": graph.n_nodes, "directed_edges": graph.n_directed_edges,
               "undirected_edges": graph.n_edges}
    if cfg["metrics"]:
        rows = node_metrics(graph)
        with open(out / "node_metrics.csv", "w", encoding="utf-8", newline="") as fh:
            write_node_metrics_csv(rows, fh)
        summary["graph_metrics"] = vars(graph_metrics(graph)) if graph.n_nodes >= 2 else None
    if cfg["fit_powerlaw"]:
        deg = degrees(graph, cfg["degree_mode"])
        summary["power_law"] = vars(fit_power_law(deg[deg > 0], cfg["xmin"]))
    (out / "summary.json").write_text(dumps_canonical(summary), encoding="utf-8")
    _write_run(out, cfg)


def cmd_generate(cfg):
    kind = cfg["process"]
    common = dict(alpha=cfg["alpha"], beta=cfg["beta"], seed=cfg["seed"], poisson_lengths=cfg["poisson_lengths"])
    if kind == "ipm":
        corpus, truth = generate_ipm(cfg["topics"], cfg["words"], cfg["docs"], cfg["tokens_per_doc"], **common)
    elif kind == "uipm":
        corpus, truth = generate_uipm(cfg["topics"], cfg["words"], cfg["users"], cfg["docs_per_user"],
                                      cfg["tokens_per_doc"], **common)
    else:
        corpus, truth = generate_cipm(cfg["topics"], cfg["words"], cfg["users"], cfg["communities"],
                                      cfg["docs_per_user"], cfg["tokens_per_doc"], cfg["mentions_per_doc"],
                                      gamma=cfg["gamma"], delta=cfg["delta"], epsilon=cfg["epsilon"], **common)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    from .synthgen import to_records
    with open(out / "records.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        write_records(to_records(corpus), fh)
    sidecar = truth.to_json()
    sidecar["config"] = cfg
    (out / "ground_truth.json").write_text(dumps_canonical(sidecar), encoding="utf-8")
    _write_run(out, cfg)


COMMANDS = {
    "ingest": cmd_ingest, "train": cmd_train, "topics": cmd_topics, "users": cmd_users,
    "communities": cmd_communities, "perplexity": cmd_perplexity, "graph": cmd_graph,
    "generate": cmd_generate,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        if cfg.get("threads"):
            if cfg["threads"] < 1:
                raise ConfigError("--threads must be >= 1")
            import numba
            numba.set_num_threads(min(cfg["threads"], numba.config.NUMBA_NUM_THREADS))
        COMMANDS[args.command](cfg)
    except InternalConsistencyError as exc:
        print(f"internal consistency fault: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        name = exc.filename if getattr(exc, "filename", None) else ""
        print(f"I/O error: {name}: {exc.strerror or exc}" if name else f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, EmptyInputError, EmptyCorpusError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
