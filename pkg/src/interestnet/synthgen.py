"""Forward samplers for the three generative processes.

Each generator returns a :class:`~interestnet.corpus.Corpus` together with
the parameters that produced it, so inference can be scored against the
truth. Word ``j`` is the string ``"w{j}"`` and user ``u`` is ``"u{u}"``;
the corpus vocabulary keeps all ``W`` words in index order, including any
that happen never to be drawn, so columns of the true and estimated
topic-word matrices line up.

The seed is split into a text stream and a social stream. Topic-word
matrices, mixtures and tokens come from the text stream in the same order
in every generator; communities and mentions come from the social stream.
Consequently the user generator with one post per user reproduces the
document generator exactly, and the community generator reproduces the
user generator's text.

The planted partition used for mentions (users split into contiguous
blocks, a fraction ``epsilon`` of posts labelled with a foreign community)
is a test construction for scoring community recovery.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .corpus import Corpus, InteractionRecord, TokenizedDoc, Vocabulary

_CHUNK = 4096


@dataclass
class GroundTruth:
    kind: str
    phi: np.ndarray
    theta: np.ndarray
    words: tuple[str, ...]
    user_ids: tuple[str, ...]
    user_community: np.ndarray | None = None
    community_user: np.ndarray | None = None
    blocks: np.ndarray | None = None
    doc_communities: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "params": self.params,
            "words": list(self.words),
            "users": list(self.user_ids),
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
        }
        for name in ("user_community", "community_user", "blocks", "doc_communities"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value.tolist()
        return out


def _streams(seed):
    text_seq, social_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(text_seq), np.random.default_rng(social_seq)


def _dirichlet_rows(rng, prior, dim, rows):
    out = rng.dirichlet(np.full(dim, float(prior)), size=rows)
    return out / out.sum(axis=1, keepdims=True)


def _categorical_rows(cum, rows, u):
    """Inverse-CDF draw per element: row ``rows[i]`` of ``cum`` with uniform ``u[i]``."""
    out = np.empty(len(rows), dtype=np.int64)
    last = cum.shape[1] - 1
    for lo in range(0, len(rows), _CHUNK):
        hi = lo + _CHUNK
        r = cum[rows[lo:hi]]
        out[lo:hi] = np.minimum((r <= (u[lo:hi] * r[:, -1])[:, None]).sum(axis=1), last)
    return out


def _doc_lengths(rng, n_docs, tokens_per_doc, poisson):
    if poisson:
        return np.maximum(rng.poisson(tokens_per_doc, size=n_docs), 1)
    return np.full(n_docs, tokens_per_doc, dtype=np.int64)


def _sample_text(rng, K, W, n_mixtures, doc_mixture, tokens_per_doc, alpha, beta, poisson):
    phi = _dirichlet_rows(rng, beta, W, K)
    theta = _dirichlet_rows(rng, alpha, K, n_mixtures)
    lengths = _doc_lengths(rng, len(doc_mixture), tokens_per_doc, poisson)
    token_mixture = np.repeat(doc_mixture, lengths)
    z = _categorical_rows(np.cumsum(theta, axis=1), token_mixture, rng.random(len(token_mixture)))
    w = _categorical_rows(np.cumsum(phi, axis=1), z, rng.random(len(z)))
    return phi, theta, lengths, w


def _make_corpus(W, U, authors, lengths, words, mentions=None):
    offsets = np.concatenate(([0], np.cumsum(lengths)))
    docs = tuple(
        TokenizedDoc(
            doc_index=m,
            author_index=int(authors[m]),
            tokens=tuple(words[offsets[m]:offsets[m + 1]].tolist()),
            mention_indices=tuple(mentions[m]) if mentions is not None else (),
            record_id=f"d{m}",
        )
        for m in range(len(authors))
    )
    return Corpus(Vocabulary(tuple(f"w{j}" for j in range(W))), tuple(f"u{u}" for u in range(U)), docs)


def _check_dims(**dims):
    for name, value in dims.items():
        if value < 1:
            raise ValueError(f"{name} must be >= 1")


def generate_ipm(K, W, M, tokens_per_doc, alpha, beta, seed, poisson_lengths=False):
    """Sample ``M`` posts, each with its own topic mixture and author ``u{m}``."""
    _check_dims(K=K, W=W, M=M, tokens_per_doc=tokens_per_doc)
    text_rng, _ = _streams(seed)
    doc_mixture = np.arange(M)
    phi, theta, lengths, words = _sample_text(text_rng, K, W, M, doc_mixture, tokens_per_doc,
                                              alpha, beta, poisson_lengths)
    corpus = _make_corpus(W, M, doc_mixture, lengths, words)
    params = dict(K=K, W=W, M=M, tokens_per_doc=tokens_per_doc, alpha=alpha, beta=beta, seed=seed)
    return corpus, GroundTruth("ipm", phi, theta, corpus.vocabulary.index_to_word, corpus.user_ids, params=params)


def generate_uipm(K, W, U, docs_per_user, tokens_per_doc, alpha, beta, seed, poisson_lengths=False):
    """Sample ``docs_per_user`` posts for each of ``U`` users sharing one mixture per user."""
    _check_dims(K=K, W=W, U=U, docs_per_user=docs_per_user, tokens_per_doc=tokens_per_doc)
    text_rng, _ = _streams(seed)
    authors = np.repeat(np.arange(U), docs_per_user)
    phi, theta, lengths, words = _sample_text(text_rng, K, W, U, authors, tokens_per_doc,
                                              alpha, beta, poisson_lengths)
    corpus = _make_corpus(W, U, authors, lengths, words)
    params = dict(K=K, W=W, U=U, docs_per_user=docs_per_user, tokens_per_doc=tokens_per_doc,
                  alpha=alpha, beta=beta, seed=seed)
    return corpus, GroundTruth("uipm", phi, theta, corpus.vocabulary.index_to_word, corpus.user_ids, params=params)


def planted_blocks(U, C):
    """Contiguous, near-equal blocks: user ``u`` belongs to block ``u * C // U``."""
    return (np.arange(U) * C) // U


def generate_cipm(K, W, U, C, docs_per_user, tokens_per_doc, mentions_per_doc,
                  alpha, beta, gamma, delta, seed, epsilon=0.1, poisson_lengths=False):
    """Sample posts with topics as in the user model plus planted-community mentions.

    Each user's community mixture puts ``1 - epsilon`` on its own block and
    spreads ``epsilon`` over the other blocks by a Dirichlet(``gamma``)
    draw. Each community's user distribution is a Dirichlet(``delta``) draw
    supported on its block. Every post draws a community from its author's
    mixture, then ``mentions_per_doc`` users (with replacement, never the
    author) from that community.
    """
    _check_dims(K=K, W=W, U=U, C=C, docs_per_user=docs_per_user, tokens_per_doc=tokens_per_doc)
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    if C > U:
        raise ValueError("need at least one user per community")
    blocks = planted_blocks(U, C)
    block_size = int(np.bincount(blocks, minlength=C).min())
    if mentions_per_doc < 0 or mentions_per_doc > block_size:
        raise ValueError(f"mentions_per_doc={mentions_per_doc} exceeds the block size {block_size}")
    if mentions_per_doc and block_size < 2:
        raise ValueError("blocks need at least two users to hold non-self mentions")

    text_rng, social_rng = _streams(seed)
    authors = np.repeat(np.arange(U), docs_per_user)
    phi, theta, lengths, words = _sample_text(text_rng, K, W, U, authors, tokens_per_doc,
                                              alpha, beta, poisson_lengths)

    user_community = np.zeros((U, C))
    if C == 1:
        user_community[:, 0] = 1.0
    else:
        spill = _dirichlet_rows(social_rng, gamma, C - 1, U)
        for u in range(U):
            others = [c for c in range(C) if c != blocks[u]]
            user_community[u, others] = epsilon * spill[u]
            user_community[u, blocks[u]] = 1.0 - epsilon
    community_user = np.zeros((C, U))
    for c in range(C):
        members = np.flatnonzero(blocks == c)
        community_user[c, members] = _dirichlet_rows(social_rng, delta, len(members), 1)[0]

    doc_comm = _categorical_rows(np.cumsum(user_community, axis=1), authors, social_rng.random(len(authors)))
    mentions = []
    for m, u in enumerate(authors):
        c = doc_comm[m]
        candidates = np.flatnonzero((blocks == c) & (np.arange(U) != u))
        p = community_user[c, candidates]
        p = p / p.sum() if p.sum() > 0 else np.full(len(candidates), 1.0 / len(candidates))
        mentions.append(social_rng.choice(candidates, size=mentions_per_doc, p=p).tolist())

    corpus = _make_corpus(W, U, authors, lengths, words, mentions)
    params = dict(K=K, W=W, U=U, C=C, docs_per_user=docs_per_user, tokens_per_doc=tokens_per_doc,
                  mentions_per_doc=mentions_per_doc, alpha=alpha, beta=beta, gamma=gamma,
                  delta=delta, epsilon=epsilon, seed=seed)
    truth = GroundTruth("cipm", phi, theta, corpus.vocabulary.index_to_word, corpus.user_ids,
                        user_community=user_community, community_user=community_user,
                        blocks=blocks, doc_communities=doc_comm, params=params)
    return corpus, truth


def to_records(corpus: Corpus) -> list[InteractionRecord]:
    """Render a corpus as interaction records (text = space-joined words)."""
    words = corpus.vocabulary.index_to_word
    users = corpus.user_ids
    return [
        InteractionRecord(
            record_id=d.record_id or f"d{d.doc_index}",
            author_id=users[d.author_index],
            text=" ".join(words[t] for t in d.tokens),
            mentions=tuple(users[x] for x in d.mention_indices),
        )
        for d in corpus.docs
    ]


def sample_discrete_power_law(alpha, xmin, size, seed, table_size=100_000):
    """Exact inverse-CDF samples from ``P(d) ∝ d**-alpha`` for ``d >= xmin``.

    The survival function ``ζ(alpha, d) / ζ(alpha, xmin)`` is tabulated for
    ``table_size`` values; the rare draws beyond the table use the
    continuous approximation.
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    rng = np.random.default_rng(seed)
    support = np.arange(xmin, xmin + table_size)
    survival = zeta(alpha, support) / zeta(alpha, xmin)
    u = rng.random(size)
    # largest d with survival(d) >= u
    idx = np.searchsorted(-survival, -u, side="right") - 1
    out = support[np.clip(idx, 0, table_size - 1)].astype(np.int64)
    beyond = u < survival[-1]
    if beyond.any():
        out[beyond] = np.floor((xmin - 0.5) * u[beyond] ** (-1.0 / (alpha - 1)) + 0.5).astype(np.int64)
    return out


def preferential_attachment_edges(n, m, seed):
    """Undirected edge list of a Barabási-Albert style growth process.

    Starts from a star on ``m + 1`` nodes; each new node links to ``m``
    distinct existing nodes chosen proportionally to degree.
    """
    if m < 1 or n <= m:
        raise ValueError("need 1 <= m < n")
    rng = np.random.default_rng(seed)
    edges = [(0, v) for v in range(1, m + 1)]
    ends = [x for e in edges for x in e]
    for v in range(m + 1, n):
        targets = set()
        while len(targets) < m:
            targets.add(ends[rng.integers(len(ends))])
        for t in sorted(targets):
            edges.append((t, v))
            ends.extend((t, v))
    return edges
