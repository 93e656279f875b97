"""Model-kind dispatch and a one-call training loop."""
from __future__ import annotations

import logging

import numpy as np

from .cipm import CipmState
from .corpus import Corpus
from .estimate import ModelEstimate
from .ipm import IpmState, TopicChain
from .sampler import Hyperparams
from .uipm import UipmState

logger = logging.getLogger(__name__)

STATE_CLASSES = {"ipm": IpmState, "uipm": UipmState, "cipm": CipmState}


def init_state(kind: str, corpus: Corpus, hyperparams: Hyperparams, seed: int) -> TopicChain:
    try:
        cls = STATE_CLASSES[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(STATE_CLASSES)}") from None
    return cls(corpus, hyperparams, seed)


def chain_seeds(seed: int, chains: int) -> list[int]:
    """The first chain uses ``seed`` itself; the others get spawned seeds."""
    extra = np.random.SeedSequence(seed).generate_state(max(chains - 1, 0), dtype=np.uint64)
    return [int(seed)] + [int(s) for s in extra]


def train(corpus: Corpus, kind: str, hyperparams: Hyperparams, sweeps: int = 1000,
          seed: int = 0, trace_every: int = 0, chains: int = 1) -> ModelEstimate:
    """Initialize a chain, run ``sweeps`` sweeps and read the final estimate.

    With ``chains > 1`` independent chains are run and the one whose final
    state has the highest collapsed joint log-probability is kept; this
    guards against chains that settle in a merged-cluster mode. With
    ``trace_every > 0`` the training-set perplexity is logged at that
    interval.
    """
    if sweeps < 0:
        raise ValueError("sweeps must be >= 0")
    if chains < 1:
        raise ValueError("chains must be >= 1")

    def trace(s):
        if trace_every and s.sweeps % trace_every == 0:
            logger.info("%s sweep %d: train perplexity %.4f", kind, s.sweeps, s.train_perplexity())

    best = None
    best_score = -np.inf
    for chain_seed in chain_seeds(seed, chains):
        state = init_state(kind, corpus, hyperparams, chain_seed).run(sweeps, callback=trace)
        score = state.log_joint() if chains > 1 else 0.0
        if best is None or score > best_score:
            best, best_score = state, score
        if chains > 1:
            logger.info("%s chain seed %d: log joint %.3f", kind, chain_seed, score)
    return best.estimate()
