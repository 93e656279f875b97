"""User interest pattern model: one topic mixture per author.

Identical to the document model except that the actor owning each token is
the document's author, so all of a user's posts pool into one mixture.
"""
from __future__ import annotations

import numpy as np

from .corpus import Corpus
from .estimate import ModelEstimate
from .ipm import TopicChain
from .sampler import Hyperparams

__all__ = ["UipmState", "init_uipm", "gibbs_sweep_uipm", "estimate_uipm", "top_users", "user_similarity"]


class UipmState(TopicChain):
    kind = "uipm"

    def _token_actors(self):
        return self.corpus.doc_authors[self.corpus.token_docs]

    @property
    def n_actors(self):
        return self.corpus.U


def init_uipm(corpus: Corpus, hyperparams: Hyperparams, seed: int) -> UipmState:
    return UipmState(corpus, hyperparams, seed)


def gibbs_sweep_uipm(state: UipmState) -> UipmState:
    return state.sweep()


def estimate_uipm(state: UipmState) -> ModelEstimate:
    return state.estimate()


def top_users(model, k: int, n: int) -> list[tuple[str, float]]:
    """Users ranked by their share of the tokens assigned to topic ``k``.

    The share is the raw ratio ``n_uk / n_k`` without smoothing. Works on a
    sampler state or an estimate of a user-keyed model. Ties go to the
    lower user index; an empty topic gives an empty list.
    """
    counts = model.counts
    user_ids = model.corpus.user_ids if hasattr(model, "corpus") else model.user_ids
    K = counts.n_kw.shape[0]
    if not 0 <= k < K:
        raise ValueError(f"topic {k} out of range 0..{K - 1}")
    column = counts.n_dk[:, k]
    total = int(column.sum())
    if total == 0:
        return []
    users = np.flatnonzero(column)
    order = sorted(users, key=lambda u: (-column[u], u))[:n]
    return [(user_ids[u], float(column[u] / total)) for u in order]


def user_similarity(estimate: ModelEstimate) -> np.ndarray:
    """Cosine similarity between users' topic mixtures."""
    theta = estimate.theta
    unit = theta / np.linalg.norm(theta, axis=1, keepdims=True)
    return np.clip(unit @ unit.T, 0.0, 1.0)
