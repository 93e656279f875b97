"""Held-out perplexity, train/test splits and model-selection sweeps.

Perplexity of a test set under a model is

    exp( - Σ_m log p(w_m) / Σ_m N_m ),   p(w_m) = Π_i Σ_k θ_mk φ_k[w_i]

The topic-word matrix comes from the trained model; each test document's
mixture θ_m is estimated by fold-in: Gibbs sweeps over the document's
tokens with the topic-word matrix held fixed, averaging the mixture read
after each of the last few sweeps. Zero fold-in sweeps gives the uniform
mixture. Tokens whose word is missing from the model vocabulary are
skipped and counted.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import linear_sum_assignment

from . import sampler
from .cipm import assign_communities
from .corpus import Corpus
from .estimate import ModelEstimate
from .models import train
from .sampler import Hyperparams

logger = logging.getLogger(__name__)

SWEEP_CSV_HEADER = ("value", "perplexity", "sweeps", "seconds")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    unit: str = "by-user"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.unit not in ("by-user", "by-doc"):
            raise ValueError(f"unit must be 'by-user' or 'by-doc', got {self.unit!r}")


def default_unit(kind: str) -> str:
    """The document model splits posts; the user-keyed models split users."""
    return "by-doc" if kind == "ipm" else "by-user"


def split_corpus(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Disjoint random train/test partition by author or by document.

    Both halves keep the full vocabulary and user table. The train side gets
    ``floor(fraction * n)`` units, clamped so each side has at least one.
    """
    if spec.unit == "by-user":
        units = np.flatnonzero(corpus.docs_per_user() > 0)
    else:
        units = np.arange(corpus.M)
    n = len(units)
    if n < 2:
        raise ValueError(f"need at least 2 units to split, found {n}")
    n_train = min(max(int(math.floor(spec.train_fraction * n + 1e-9)), 1), n - 1)
    perm = np.random.default_rng(spec.seed).permutation(units)
    train_units = np.zeros(corpus.U if spec.unit == "by-user" else corpus.M, dtype=bool)
    train_units[perm[:n_train]] = True
    owner = corpus.doc_authors if spec.unit == "by-user" else np.arange(corpus.M)
    in_train = train_units[owner]
    return corpus.subset(np.flatnonzero(in_train)), corpus.subset(np.flatnonzero(~in_train))


@numba.njit(cache=True)
def _fold_in_sweep(words, docs, z, n_mk, phi, alpha, uniforms):
    K = phi.shape[0]
    cum = np.empty(K)
    for i in range(words.shape[0]):
        w = words[i]
        m = docs[i]
        n_mk[m, z[i]] -= 1
        total = 0.0
        for k in range(K):
            total += phi[k, w] * (n_mk[m, k] + alpha)
            cum[k] = total
        new = sampler._pick(cum, uniforms[i])
        z[i] = new
        n_mk[m, new] += 1


def fold_in(phi: np.ndarray, words: np.ndarray, docs: np.ndarray, n_docs: int, alpha: float,
            sweeps: int = 50, average_last: int = 10, seed: int = 0) -> np.ndarray:
    """Per-document topic mixtures with the topic-word matrix frozen."""
    K = phi.shape[0]
    if sweeps <= 0:
        return np.full((n_docs, K), 1.0 / K)
    rng = np.random.Generator(np.random.PCG64(seed))
    z = rng.integers(0, K, size=len(words)).astype(np.int64)
    n_mk = np.zeros((n_docs, K), dtype=np.int64)
    np.add.at(n_mk, (docs, z), 1)
    n_m = n_mk.sum(axis=1, keepdims=True)
    acc = np.zeros((n_docs, K))
    reads = 0
    for s in range(sweeps):
        _fold_in_sweep(words, docs, z, n_mk, phi, float(alpha), rng.random(len(words)))
        if s >= sweeps - average_last:
            acc += (n_mk + alpha) / (n_m + K * alpha)
            reads += 1
    return acc / reads


@dataclass(frozen=True)
class PerplexityResult:
    perplexity: float
    log_likelihood: float
    tokens: int
    skipped: int


def mixture_log_likelihood(phi: np.ndarray, theta: np.ndarray, words: np.ndarray, docs: np.ndarray) -> float:
    """``Σ_i log Σ_k θ[docs_i, k] φ[k, words_i]``."""
    ll = 0.0
    for lo in range(0, len(words), 65536):
        hi = lo + 65536
        p = np.einsum("ik,ki->i", theta[docs[lo:hi]], phi[:, words[lo:hi]])
        ll += float(np.log(p).sum())
    return ll


def heldout_perplexity(estimate: ModelEstimate, test: Corpus, fold_in_sweeps: int = 50,
                       average_last: int = 10, seed: int = 0) -> PerplexityResult:
    if fold_in_sweeps < 0:
        raise ValueError("fold_in_sweeps must be >= 0")
    if tuple(test.vocabulary.index_to_word) == tuple(estimate.words):
        mapped = test.token_words
    else:
        lookup = {w: i for i, w in enumerate(estimate.words)}
        test_words = test.vocabulary.index_to_word
        mapped = np.array([lookup.get(test_words[t], -1) for t in test.token_words], dtype=np.int64)
    keep = mapped >= 0
    skipped = int((~keep).sum())
    if skipped:
        logger.warning("%d test tokens outside the model vocabulary were skipped", skipped)
    words = mapped[keep]
    if len(words) == 0:
        raise ValueError("every test token lies outside the model vocabulary")
    _, docs = np.unique(test.token_docs[keep], return_inverse=True)
    docs = docs.astype(np.int64)
    n_docs = int(docs.max()) + 1
    theta = fold_in(estimate.phi, words, docs, n_docs, estimate.hyperparams.alpha,
                    fold_in_sweeps, average_last, seed)
    ll = mixture_log_likelihood(estimate.phi, theta, words, docs)
    return PerplexityResult(math.exp(-ll / len(words)), ll, len(words), skipped)


def perplexity(estimate: ModelEstimate, test: Corpus, fold_in_sweeps: int = 50, seed: int = 0) -> float:
    """Held-out perplexity of ``test`` under ``estimate``; lower is better."""
    return heldout_perplexity(estimate, test, fold_in_sweeps, seed=seed).perplexity


@dataclass(frozen=True)
class SweepRow:
    value: int
    perplexity: float
    sweeps: int
    seconds: float


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def write_csv(self, fh, record_time: bool = True) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_CSV_HEADER)
        for r in self.rows:
            writer.writerow([r.value, repr(r.perplexity), r.sweeps, f"{r.seconds:.3f}" if record_time else "0"])


def derived_seed(seed: int, value: int) -> int:
    return int(seed) ^ int(value)


def k_sweep(corpus: Corpus, kind: str, values, *, alpha=None, beta=0.01, gamma=0.1, delta=None, C=1,
            sweeps=1000, seed=0, train_fraction=0.9, fold_in_sweeps=50) -> SweepResult:
    """Train one model per topic count on a shared split and score the held-out side.

    ``alpha=None`` means ``50 / K`` for each ``K``.
    """
    values = list(values)
    if not values:
        raise ValueError("values must be non-empty")
    train_c, test_c = split_corpus(corpus, SplitSpec(train_fraction, default_unit(kind), seed))
    result = SweepResult()
    for K in values:
        t0 = time.perf_counter()
        hp = Hyperparams(K=K, C=C, alpha=alpha, beta=beta, gamma=gamma, delta=delta)
        est = train(train_c, kind, hp, sweeps, derived_seed(seed, K))
        pp = perplexity(est, test_c, fold_in_sweeps, seed=derived_seed(seed, K))
        row = SweepRow(K, pp, sweeps, time.perf_counter() - t0)
        logger.info("K=%d perplexity %.4f (%.1fs)", K, pp, row.seconds)
        result.rows.append(row)
    return result


@dataclass(frozen=True)
class CommunitySweepRow:
    value: int
    users_assigned: int
    memberships: int


def community_sweep(corpus: Corpus, values, K: int, *, alpha=None, beta=0.01, gamma=0.1, delta=None,
                    sweeps=1000, seed=0) -> list[CommunitySweepRow]:
    """Run the community model for each community count and count threshold assignments.

    ``users_assigned`` is the number of users with at least one membership at
    probability ``>= 1/C``; ``memberships`` counts all user-community pairs.
    """
    values = list(values)
    if not values:
        raise ValueError("values must be non-empty")
    rows = []
    for C in values:
        hp = Hyperparams(K=K, C=C, alpha=alpha, beta=beta, gamma=gamma, delta=delta)
        est = train(corpus, "cipm", hp, sweeps, derived_seed(seed, C))
        assigned = assign_communities(est, "threshold")
        rows.append(CommunitySweepRow(C, sum(1 for s in assigned.values() if s),
                                      sum(len(s) for s in assigned.values())))
    return rows


# ---------------------------------------------------------------------------
# scoring against ground truth


def total_variation(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise total-variation distance."""
    return 0.5 * np.abs(np.asarray(p) - np.asarray(q)).sum(axis=-1)


def match_topics(estimated: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Greedy minimum-TV matching of estimated rows to true rows.

    Returns ``perm`` with ``perm[j]`` the estimated row matched to true row
    ``j``, and the matched distances.
    """
    tv = total_variation(estimated[:, None, :], truth[None, :, :])
    K = min(tv.shape)
    perm = np.full(truth.shape[0], -1)
    dists = np.full(truth.shape[0], np.nan)
    tv = tv.copy()
    for _ in range(K):
        i, j = np.unravel_index(np.argmin(tv), tv.shape)
        perm[j] = i
        dists[j] = tv[i, j]
        tv[i, :] = np.inf
        tv[:, j] = np.inf
    return perm, dists


def best_permutation_accuracy(predicted, truth, n_labels: int) -> float:
    """Fraction of agreeing labels under the best relabeling of ``predicted``."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    confusion = np.zeros((n_labels, n_labels), dtype=np.int64)
    np.add.at(confusion, (predicted, truth), 1)
    rows, cols = linear_sum_assignment(-confusion)
    return confusion[rows, cols].sum() / len(truth)
