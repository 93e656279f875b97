"""Machinery shared by the three collapsed Gibbs samplers.

Every conditional in the models is a product of smoothed count ratios of
the form ``(count + prior) / (total + dim * prior)``. Counts live in dense
integer matrices; the per-token loops are compiled with numba.

Randomness comes from numpy's PCG64 generator. A seed is expanded with
``SeedSequence.spawn`` into two independent streams: one drives topic
assignments, the other community assignments. Keeping them apart means a
community model with a single community consumes exactly the same topic
stream as the user model, so the two chains coincide draw for draw.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numba
import numpy as np

from .errors import InternalConsistencyError

RNG_ALGORITHM = "numpy.PCG64/SeedSequence.spawn(2)/v1"

# When true, sweeps verify all count invariants after every sweep.
CHECK_INVARIANTS = True


@dataclass(frozen=True)
class Hyperparams:
    """Dirichlet priors and model dimensions.

    ``alpha`` defaults to ``50 / K`` and ``delta`` to ``gamma``.
    """

    K: int
    C: int = 1
    alpha: float | None = None
    beta: float = 0.01
    gamma: float = 0.1
    delta: float | None = None

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", 50.0 / self.K if self.K >= 1 else 1.0)
        if self.delta is None:
            object.__setattr__(self, "delta", self.gamma)
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be an integer >= 1, got {self.K}")
        if int(self.C) != self.C or self.C < 1:
            raise ValueError(f"C must be an integer >= 1, got {self.C}")
        for name in ("alpha", "beta", "gamma", "delta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value}")

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class RngContract:
    seed: int
    algorithm: str = RNG_ALGORITHM

    def streams(self) -> tuple[np.random.Generator, np.random.Generator]:
        """Independent (topic, community) generators derived from the seed."""
        if self.algorithm != RNG_ALGORITHM:
            raise ValueError(f"unsupported RNG algorithm {self.algorithm!r}")
        topic_seq, community_seq = np.random.SeedSequence(self.seed & (2**64 - 1)).spawn(2)
        return np.random.Generator(np.random.PCG64(topic_seq)), np.random.Generator(np.random.PCG64(community_seq))


def smoothed_ratio(count: int, total: int, prior: float, dim: int) -> float:
    """``(count + prior) / (total + dim * prior)``."""
    if not prior > 0:
        raise ValueError("prior must be positive")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if count < 0 or total < count:
        raise ValueError("need 0 <= count <= total")
    return (count + prior) / (total + dim * prior)


def sample_categorical(weights: Sequence[float], rng: np.random.Generator) -> int:
    """Draw index ``k`` with probability ``weights[k] / sum(weights)``.

    Consumes exactly one uniform from ``rng``; the compiled sweeps use the
    same inverse-CDF rule so Python and kernel draws agree.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and non-negative")
    if not np.any(w > 0):
        raise ValueError("at least one weight must be positive")
    return int(_pick(np.cumsum(w), rng.random()))


@numba.njit(cache=True)
def _pick(cum, u):
    target = u * cum[cum.shape[0] - 1]
    k = 0
    last = cum.shape[0] - 1
    while k < last and cum[k] <= target:
        k += 1
    # never land on a zero-weight slot through the clamp
    while k > 0 and cum[k] == cum[k - 1]:
        k -= 1
    return k


@dataclass
class CountMatrices:
    """Sufficient statistics of a sampler state.

    ``n_dk`` is doc-by-topic for the document model and user-by-topic for
    the user and community models. The community-model matrices are None
    otherwise.
    """

    n_kw: np.ndarray
    n_k: np.ndarray
    n_dk: np.ndarray
    n_d: np.ndarray
    n_uc: np.ndarray | None = None
    n_u: np.ndarray | None = None
    n_cx: np.ndarray | None = None
    n_c: np.ndarray | None = None

    @classmethod
    def zeros(cls, K: int, W: int, D: int, C: int | None = None, U: int | None = None):
        out = cls(
            n_kw=np.zeros((K, W), dtype=np.int64),
            n_k=np.zeros(K, dtype=np.int64),
            n_dk=np.zeros((D, K), dtype=np.int64),
            n_d=np.zeros(D, dtype=np.int64),
        )
        if C is not None:
            out.n_uc = np.zeros((U, C), dtype=np.int64)
            out.n_u = np.zeros(U, dtype=np.int64)
            out.n_cx = np.zeros((C, U), dtype=np.int64)
            out.n_c = np.zeros(C, dtype=np.int64)
        return out

    def copy(self) -> "CountMatrices":
        return replace(self, **{f.name: None if getattr(self, f.name) is None else getattr(self, f.name).copy()
                                for f in fields(self)})

    def items(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is not None:
                yield f.name, value

    def __eq__(self, other):
        if not isinstance(other, CountMatrices):
            return NotImplemented
        mine, theirs = dict(self.items()), dict(other.items())
        return mine.keys() == theirs.keys() and all(np.array_equal(mine[k], theirs[k]) for k in mine)

    def check(self, n_tokens: int | None = None) -> None:
        """Raise InternalConsistencyError unless every invariant holds."""
        for name, arr in self.items():
            if arr.size and arr.min() < 0:
                raise InternalConsistencyError(f"{name} has a negative entry")
        pairs = [(self.n_kw, self.n_k, "n_k"), (self.n_dk, self.n_d, "n_d")]
        if self.n_uc is not None:
            pairs += [(self.n_uc, self.n_u, "n_u"), (self.n_cx, self.n_c, "n_c")]
        for mat, sums, name in pairs:
            if not np.array_equal(mat.sum(axis=1), sums):
                raise InternalConsistencyError(f"{name} disagrees with its matrix row sums")
        if n_tokens is not None and int(self.n_k.sum()) != n_tokens:
            raise InternalConsistencyError(
                f"topic counts cover {int(self.n_k.sum())} tokens, corpus has {n_tokens}")
        if int(self.n_d.sum()) != int(self.n_k.sum()):
            raise InternalConsistencyError("topic totals differ between word and actor views")


def topic_counts_from_assignments(words, actors, z, K, W, D) -> CountMatrices:
    counts = CountMatrices.zeros(K, W, D)
    np.add.at(counts.n_kw, (z, words), 1)
    np.add.at(counts.n_dk, (actors, z), 1)
    counts.n_k[:] = np.bincount(z, minlength=K)
    counts.n_d[:] = np.bincount(actors, minlength=D)
    return counts


def decrement_then_increment(counts: CountMatrices, word: int, actor: int, old: int, new: int) -> CountMatrices:
    """Move one token of ``word`` owned by ``actor`` from topic ``old`` to ``new``.

    Mutates and returns ``counts``. Reassigning to the same topic leaves
    every matrix unchanged.
    """
    if counts.n_kw[old, word] <= 0 or counts.n_dk[actor, old] <= 0:
        raise InternalConsistencyError(
            f"token (word={word}, actor={actor}) is not recorded under topic {old}")
    counts.n_kw[old, word] -= 1
    counts.n_k[old] -= 1
    counts.n_dk[actor, old] -= 1
    counts.n_d[actor] -= 1
    counts.n_kw[new, word] += 1
    counts.n_k[new] += 1
    counts.n_dk[actor, new] += 1
    counts.n_d[actor] += 1
    return counts


# ---------------------------------------------------------------------------
# compiled kernels


@numba.njit(cache=True)
def topic_weights(n_kw, n_k, n_dk, n_d, w, d, alpha, beta, out):
    """Unnormalized topic conditional for word ``w`` of actor ``d``.

    Counts must already exclude the token being resampled.
    """
    K, W = n_kw.shape
    wbeta = W * beta
    kalpha = K * alpha
    for k in range(K):
        out[k] = ((n_kw[k, w] + beta) / (n_k[k] + wbeta)) * ((n_dk[d, k] + alpha) / (n_d[d] + kalpha))
    return out


@numba.njit(cache=True)
def _topic_sweep(words, actors, z, uniforms, n_kw, n_k, n_dk, n_d, alpha, beta):
    K = n_kw.shape[0]
    weights = np.empty(K)
    cum = np.empty(K)
    for i in range(words.shape[0]):
        w = words[i]
        d = actors[i]
        old = z[i]
        if n_kw[old, w] <= 0 or n_dk[d, old] <= 0:
            raise InternalConsistencyError("decrement of an empty count cell")
        n_kw[old, w] -= 1
        n_k[old] -= 1
        n_dk[d, old] -= 1
        n_d[d] -= 1
        topic_weights(n_kw, n_k, n_dk, n_d, w, d, alpha, beta, weights)
        total = 0.0
        for k in range(K):
            total += weights[k]
            cum[k] = total
        new = _pick(cum, uniforms[i])
        z[i] = new
        n_kw[new, w] += 1
        n_k[new] += 1
        n_dk[d, new] += 1
        n_d[d] += 1


@numba.njit(cache=True)
def community_log_weights(n_uc, n_u, n_cx, n_c, u, mentions, gamma, delta, out):
    """Log of the unnormalized community conditional for one document.

    ``mentions`` are the document's mentioned users; counts must already
    exclude the document. Repeated mentions of one user within the document
    enter as successive draws from the same collapsed Dirichlet-multinomial,
    so the j-th mention sees the j-1 earlier ones.
    """
    C, U = n_cx.shape
    cgamma = C * gamma
    udelta = U * delta
    L = mentions.shape[0]
    for c in range(C):
        lw = math.log((n_uc[u, c] + gamma) / (n_u[u] + cgamma))
        for j in range(L):
            x = mentions[j]
            seen = 0
            for jj in range(j):
                if mentions[jj] == x:
                    seen += 1
            lw += math.log((n_cx[c, x] + delta + seen) / (n_c[c] + udelta + j))
        out[c] = lw
    return out


@numba.njit(cache=True)
def _community_sweep(authors, mention_offsets, mention_users, c_assign, uniforms,
                     n_uc, n_u, n_cx, n_c, gamma, delta):
    C = n_cx.shape[0]
    logw = np.empty(C)
    cum = np.empty(C)
    for m in range(authors.shape[0]):
        u = authors[m]
        old = c_assign[m]
        ments = mention_users[mention_offsets[m]:mention_offsets[m + 1]]
        if n_uc[u, old] <= 0:
            raise InternalConsistencyError("decrement of an empty community cell")
        n_uc[u, old] -= 1
        n_u[u] -= 1
        for x in ments:
            if n_cx[old, x] <= 0:
                raise InternalConsistencyError("decrement of an empty mention cell")
            n_cx[old, x] -= 1
            n_c[old] -= 1
        community_log_weights(n_uc, n_u, n_cx, n_c, u, ments, gamma, delta, logw)
        top = logw.max()
        total = 0.0
        for c in range(C):
            total += math.exp(logw[c] - top)
            cum[c] = total
        new = _pick(cum, uniforms[m])
        c_assign[m] = new
        n_uc[u, new] += 1
        n_u[u] += 1
        for x in ments:
            n_cx[new, x] += 1
            n_c[new] += 1

