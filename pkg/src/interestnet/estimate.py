"""Point estimates read off a sampler state, and their JSON snapshots."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import dumps_canonical
from .sampler import RNG_ALGORITHM, CountMatrices, Hyperparams

MODEL_KINDS = ("ipm", "uipm", "cipm")


def smoothed_rows(counts: np.ndarray, prior: float) -> np.ndarray:
    """Row-normalize ``counts + prior``; every row of the result sums to 1."""
    counts = np.asarray(counts, dtype=np.float64)
    dim = counts.shape[1]
    return (counts + prior) / (counts.sum(axis=1, keepdims=True) + dim * prior)


@dataclass
class ModelEstimate:
    """Topic-word, actor-topic and (community model) user-community matrices.

    ``theta`` rows are documents for the document model and users otherwise.
    ``counts`` keeps the raw sufficient statistics the estimate came from so
    reports that need counts (per-topic user shares) work from a snapshot.
    """

    kind: str
    phi: np.ndarray
    theta: np.ndarray
    hyperparams: Hyperparams
    counts: CountMatrices
    words: tuple[str, ...]
    user_ids: tuple[str, ...]
    doc_ids: tuple[str, ...] = ()
    mu: np.ndarray | None = None
    seed: int = 0
    sweeps: int = 0
    rng_algorithm: str = RNG_ALGORITHM
    assignments: dict = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.phi.shape[0]

    @property
    def W(self) -> int:
        return self.phi.shape[1]

    @classmethod
    def from_counts(cls, kind, counts: CountMatrices, hyperparams: Hyperparams, **kw) -> "ModelEstimate":
        if kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {kind!r}")
        mu = smoothed_rows(counts.n_uc, hyperparams.gamma) if kind == "cipm" else None
        return cls(
            kind=kind,
            phi=smoothed_rows(counts.n_kw, hyperparams.beta),
            theta=smoothed_rows(counts.n_dk, hyperparams.alpha),
            mu=mu,
            hyperparams=hyperparams,
            counts=counts,
            **kw,
        )

    def to_json(self, include_assignments: bool = False, config: dict | None = None) -> dict:
        out = {
            "metadata": {
                "kind": self.kind,
                "hyperparams": self.hyperparams.to_json(),
                "seed": self.seed,
                "sweeps": self.sweeps,
                "rng_algorithm": self.rng_algorithm,
            },
            "words": list(self.words),
            "users": list(self.user_ids),
            "docs": list(self.doc_ids),
            "counts": {name: arr.tolist() for name, arr in self.counts.items()},
        }
        if config is not None:
            out["metadata"]["config"] = config
        if include_assignments:
            out["assignments"] = {k: np.asarray(v).tolist() for k, v in self.assignments.items()}
        return out

    def dumps(self, include_assignments: bool = False, config: dict | None = None) -> str:
        return dumps_canonical(self.to_json(include_assignments, config))

    @classmethod
    def from_json(cls, obj: dict) -> "ModelEstimate":
        meta = obj["metadata"]
        counts = CountMatrices(**{k: np.asarray(v, dtype=np.int64) for k, v in obj["counts"].items()})
        W = len(obj["words"])
        K = meta["hyperparams"]["K"]
        if counts.n_kw.size == 0:
            counts.n_kw = counts.n_kw.reshape(K, W)
        return cls.from_counts(
            meta["kind"],
            counts,
            Hyperparams(**meta["hyperparams"]),
            words=tuple(obj["words"]),
            user_ids=tuple(obj["users"]),
            doc_ids=tuple(obj.get("docs", ())),
            seed=meta["seed"],
            sweeps=meta["sweeps"],
            rng_algorithm=meta["rng_algorithm"],
            assignments={k: np.asarray(v, dtype=np.int64) for k, v in obj.get("assignments", {}).items()},
        )


def as_estimate(model) -> ModelEstimate:
    """Accept either a sampler state or an estimate."""
    if isinstance(model, ModelEstimate):
        return model
    return model.estimate()


def top_words(estimate: ModelEstimate, k: int, n: int) -> list[tuple[str, float]]:
    """Highest-probability words of topic ``k``; ties in lexicographic word order."""
    if not 0 <= k < estimate.K:
        raise ValueError(f"topic {k} out of range 0..{estimate.K - 1}")
    row = estimate.phi[k]
    words = estimate.words
    order = sorted(range(estimate.W), key=lambda w: (-row[w], words[w]))[:n]
    return [(words[w], float(row[w])) for w in order]
