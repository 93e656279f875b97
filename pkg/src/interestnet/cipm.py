"""Community interest pattern model.

Each post carries a community label drawn from its author's community
mixture; every user mentioned in the post is a draw from that community's
distribution over users. Topics are modeled exactly as in the user model.

One sweep is blocked:

1. For each document ``m`` by author ``u`` with mentions ``x_1..x_L``,
   remove the document from the community counts and resample its label
   from

       p(c_m = c | rest) ∝ (n_uc[u, c] + γ) / (n_u[u] + Cγ)
                          · Π_j (n_cx[c, x_j] + δ + s_j) / (n_c[c] + Uδ + j - 1)

   where ``s_j`` counts earlier mentions of ``x_j`` in the same post.
2. Resample every token's topic with the user-model conditional.

The user-to-community prior is ``gamma`` and the community-to-mentioned-user
prior is ``delta``; they are separate parameters because they govern
different distributions. Topic labels are not propagated to mentioned
users; mention evidence reaches the model only through ``n_cx``.
"""
from __future__ import annotations

import numpy as np

from . import sampler
from .corpus import Corpus
from .errors import InternalConsistencyError
from .estimate import ModelEstimate, as_estimate
from .sampler import CountMatrices, Hyperparams
from .ipm import dirichlet_multinomial_log
from .uipm import UipmState

__all__ = [
    "CipmState", "init_cipm", "gibbs_sweep_cipm", "estimate_cipm",
    "community_threshold", "assign_communities", "mention_similarity_report",
    "low_evidence_users",
]

# absorbs rounding in (0 + γ) / (0 + Cγ) so a uniform row sits on the threshold
_THRESHOLD_SLACK = 1e-12


class CipmState(UipmState):
    kind = "cipm"

    def __init__(self, corpus: Corpus, hyperparams: Hyperparams, seed: int):
        super().__init__(corpus, hyperparams, seed)
        self.c = self.community_rng.integers(0, hyperparams.C, size=corpus.M).astype(np.int64)
        self.counts = self.rebuild_counts()

    def rebuild_counts(self) -> CountMatrices:
        counts = super().rebuild_counts()
        if not hasattr(self, "c"):
            return counts
        corpus = self.corpus
        C, U = self.hyperparams.C, corpus.U
        counts.n_uc = np.zeros((U, C), dtype=np.int64)
        np.add.at(counts.n_uc, (corpus.doc_authors, self.c), 1)
        counts.n_u = counts.n_uc.sum(axis=1)
        mention_docs = np.repeat(np.arange(corpus.M), np.diff(corpus.mention_offsets))
        counts.n_cx = np.zeros((C, U), dtype=np.int64)
        np.add.at(counts.n_cx, (self.c[mention_docs], corpus.mention_users), 1)
        counts.n_c = counts.n_cx.sum(axis=1)
        return counts

    def check(self) -> None:
        super().check()
        counts = self.counts
        if not np.array_equal(counts.n_u, self.corpus.docs_per_user()):
            raise InternalConsistencyError("community counts do not cover every document once")
        if int(counts.n_c.sum()) != len(self.corpus.mention_users):
            raise InternalConsistencyError("mention counts do not cover every mention event once")

    def log_joint(self) -> float:
        hp = self.hyperparams
        return (super().log_joint()
                + dirichlet_multinomial_log(self.counts.n_uc, hp.gamma)
                + dirichlet_multinomial_log(self.counts.n_cx, hp.delta))

    def sweep_communities(self) -> None:
        hp = self.hyperparams
        corpus = self.corpus
        counts = self.counts
        uniforms = self.community_rng.random(corpus.M)
        sampler._community_sweep(corpus.doc_authors, corpus.mention_offsets, corpus.mention_users,
                                 self.c, uniforms, counts.n_uc, counts.n_u, counts.n_cx, counts.n_c,
                                 float(hp.gamma), float(hp.delta))

    def sweep(self):
        self.sweep_communities()
        self.sweep_topics()
        self.sweeps += 1
        if sampler.CHECK_INVARIANTS:
            self.check()
        return self

    def community_conditional(self, m: int) -> np.ndarray:
        """Normalized community conditional of document ``m`` given all others."""
        corpus = self.corpus
        counts = self.counts.copy()
        u, old = int(corpus.doc_authors[m]), int(self.c[m])
        ments = corpus.mention_users[corpus.mention_offsets[m]:corpus.mention_offsets[m + 1]]
        counts.n_uc[u, old] -= 1
        counts.n_u[u] -= 1
        for x in ments:
            counts.n_cx[old, x] -= 1
            counts.n_c[old] -= 1
        logw = np.empty(self.hyperparams.C)
        sampler.community_log_weights(counts.n_uc, counts.n_u, counts.n_cx, counts.n_c, u, ments,
                                      float(self.hyperparams.gamma), float(self.hyperparams.delta), logw)
        w = np.exp(logw - logw.max())
        return w / w.sum()

    def _assignments(self):
        return {"z": self.z.copy(), "c": self.c.copy()}


def init_cipm(corpus: Corpus, hyperparams: Hyperparams, seed: int) -> CipmState:
    """Random topic per token and random community per document."""
    return CipmState(corpus, hyperparams, seed)


def gibbs_sweep_cipm(state: CipmState) -> CipmState:
    return state.sweep()


def estimate_cipm(state: CipmState) -> ModelEstimate:
    return state.estimate()


def community_threshold(C: int) -> float:
    """Minimum membership probability for threshold assignment, ``1 / C``."""
    return 1.0 / C


def assign_communities(estimate: ModelEstimate, mode: str = "threshold") -> dict:
    """Map each user id to its communities.

    ``threshold`` mode gives the set of communities with membership
    probability at least ``1 / C``; ``argmax`` gives the single most
    probable community, ties to the lowest index.
    """
    mu = estimate.mu
    if mu is None:
        raise ValueError("estimate has no user-community matrix")
    if mode == "argmax":
        best = mu.argmax(axis=1)
        return {uid: int(best[u]) for u, uid in enumerate(estimate.user_ids)}
    if mode != "threshold":
        raise ValueError(f"unknown assignment mode {mode!r}")
    cutoff = community_threshold(mu.shape[1]) - _THRESHOLD_SLACK
    return {uid: set(np.flatnonzero(mu[u] >= cutoff).tolist()) for u, uid in enumerate(estimate.user_ids)}


def low_evidence_users(estimate: ModelEstimate) -> list[str]:
    """Users who authored no posts, whose membership is the prior alone."""
    n_u = estimate.counts.n_u
    return [estimate.user_ids[u] for u in np.flatnonzero(n_u == 0)]


def mention_similarity_report(model, community: int) -> list[tuple[str, int, float]]:
    """Topic of maximum interest for every user whose argmax community is ``community``.

    Rows are ``(user_id, topic, theta)``; ties between topics go to the
    lowest topic index.
    """
    est = as_estimate(model)
    members = np.flatnonzero(est.mu.argmax(axis=1) == community)
    rows = []
    for u in members:
        k = int(est.theta[u].argmax())
        rows.append((est.user_ids[u], k, float(est.theta[u, k])))
    return rows
