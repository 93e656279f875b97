"""Interest pattern model: LDA over posts, one topic mixture per document.

The collapsed conditional for token ``i`` of document ``m`` is

    p(z_i = k | rest) ∝ (n_kw[k, w_i] + β) / (n_k[k] + Wβ)
                       · (n_mk[m, k] + α) / (n_m[m] + Kα)

with token ``i`` removed from every count.
"""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from . import sampler
from .corpus import Corpus
from .errors import EmptyCorpusError, InternalConsistencyError
from .estimate import ModelEstimate, top_words  # noqa: F401  (re-exported)
from .sampler import CountMatrices, Hyperparams, RngContract

__all__ = ["IpmState", "init_ipm", "gibbs_sweep_ipm", "estimate_ipm", "top_words"]


def dirichlet_multinomial_log(counts: np.ndarray, prior: float) -> float:
    """``Σ_rows log [Γ(dim·prior)/Γ(n+dim·prior) · Π Γ(n_j+prior)/Γ(prior)]``."""
    counts = np.asarray(counts, dtype=np.float64)
    dim = counts.shape[1]
    rows = (gammaln(dim * prior) - gammaln(counts.sum(axis=1) + dim * prior)).sum()
    cells = (gammaln(counts + prior) - gammaln(prior)).sum()
    return float(rows + cells)


class TopicChain:
    """A single Gibbs chain over per-token topic assignments.

    Subclasses pick which actor (document or author) owns each token.
    The state is single-writer: sweep it from one thread only.
    """

    kind = ""

    def __init__(self, corpus: Corpus, hyperparams: Hyperparams, seed: int):
        if corpus.M == 0 or corpus.N == 0:
            raise EmptyCorpusError("cannot sample an empty corpus")
        self.corpus = corpus
        self.hyperparams = hyperparams
        self.seed = int(seed)
        self.rng = RngContract(self.seed)
        self.topic_rng, self.community_rng = self.rng.streams()
        self.sweeps = 0
        self.words = corpus.token_words
        self.actors = self._token_actors()
        self.z = self.topic_rng.integers(0, hyperparams.K, size=corpus.N).astype(np.int64)
        self.counts = self.rebuild_counts()

    def _token_actors(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def n_actors(self) -> int:
        raise NotImplementedError

    def rebuild_counts(self) -> CountMatrices:
        """Recompute every count matrix from the assignments alone."""
        hp = self.hyperparams
        return sampler.topic_counts_from_assignments(
            self.words, self.actors, self.z, hp.K, self.corpus.W, self.n_actors)

    def check(self) -> None:
        self.counts.check(self.corpus.N)

    def sweep_topics(self) -> None:
        hp = self.hyperparams
        c = self.counts
        uniforms = self.topic_rng.random(self.corpus.N)
        sampler._topic_sweep(self.words, self.actors, self.z, uniforms,
                             c.n_kw, c.n_k, c.n_dk, c.n_d, float(hp.alpha), float(hp.beta))

    def sweep(self):
        self.sweep_topics()
        self.sweeps += 1
        if sampler.CHECK_INVARIANTS:
            self.check()
        return self

    def run(self, sweeps: int, callback=None):
        for _ in range(sweeps):
            self.sweep()
            if callback is not None:
                callback(self)
        return self

    def conditional(self, i: int) -> np.ndarray:
        """Normalized topic conditional of token ``i`` given all other tokens."""
        counts = self.counts.copy()
        w, d, k = int(self.words[i]), int(self.actors[i]), int(self.z[i])
        if counts.n_kw[k, w] <= 0:
            raise InternalConsistencyError(f"token {i} missing from counts")
        counts.n_kw[k, w] -= 1
        counts.n_k[k] -= 1
        counts.n_dk[d, k] -= 1
        counts.n_d[d] -= 1
        out = np.empty(self.hyperparams.K)
        sampler.topic_weights(counts.n_kw, counts.n_k, counts.n_dk, counts.n_d, w, d,
                              float(self.hyperparams.alpha), float(self.hyperparams.beta), out)
        return out / out.sum()

    def log_likelihood(self) -> float:
        """Log-probability of the training tokens under the current point estimate."""
        est = self.estimate()
        ll = 0.0
        for lo in range(0, self.corpus.N, 65536):
            hi = min(lo + 65536, self.corpus.N)
            p = np.einsum("ik,ki->i", est.theta[self.actors[lo:hi]], est.phi[:, self.words[lo:hi]])
            ll += float(np.log(p).sum())
        return ll

    def log_joint(self) -> float:
        """Collapsed log-probability of the observations and current assignments.

        Invariant under relabeling of topics (and communities), which makes
        it usable for choosing among independent chains.
        """
        hp = self.hyperparams
        c = self.counts
        return (dirichlet_multinomial_log(c.n_kw, hp.beta)
                + dirichlet_multinomial_log(c.n_dk, hp.alpha))

    def train_perplexity(self) -> float:
        return float(np.exp(-self.log_likelihood() / self.corpus.N))

    def _estimate_kw(self) -> dict:
        return dict(
            words=self.corpus.vocabulary.index_to_word,
            user_ids=self.corpus.user_ids,
            doc_ids=tuple(d.record_id for d in self.corpus.docs),
            seed=self.seed,
            sweeps=self.sweeps,
            rng_algorithm=self.rng.algorithm,
            assignments=self._assignments(),
        )

    def _assignments(self) -> dict:
        return {"z": self.z.copy()}

    def estimate(self) -> ModelEstimate:
        return ModelEstimate.from_counts(self.kind, self.counts.copy(), self.hyperparams, **self._estimate_kw())


class IpmState(TopicChain):
    kind = "ipm"

    def _token_actors(self):
        return self.corpus.token_docs

    @property
    def n_actors(self):
        return self.corpus.M


def init_ipm(corpus: Corpus, hyperparams: Hyperparams, seed: int) -> IpmState:
    """Assign every token a uniformly random topic and build the counts."""
    return IpmState(corpus, hyperparams, seed)


def gibbs_sweep_ipm(state: IpmState) -> IpmState:
    """Resample every token once, in document then token order."""
    return state.sweep()


def estimate_ipm(state: IpmState) -> ModelEstimate:
    return state.estimate()
