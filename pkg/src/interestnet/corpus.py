"""Interaction records, tokenization and the indexed corpus.

An interaction record is the (author, text, mentions) triple of one post.
:func:`build_corpus` turns a batch of records into integer-indexed documents
ready for the samplers, and keeps the user table needed by the community
model and the mention graph.
"""
from __future__ import annotations

import json
import logging
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import EmptyCorpusError, EmptyInputError
from .stopwords import DEFAULT_STOPWORDS

logger = logging.getLogger(__name__)

_URL_RE = re.compile(r"(?:https?://|www\.)\S*", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_APOSTROPHE_RE = re.compile(r"['’]")
_WORD_RE = re.compile(r"[^\W_]+")
_RETWEET_MARKER = "rt"


@dataclass(frozen=True)
class InteractionRecord:
    record_id: str
    author_id: str
    text: str
    mentions: tuple[str, ...] = ()
    timestamp: str | None = None

    def __post_init__(self):
        if not self.record_id:
            raise ValueError("record_id must be non-empty")
        if not self.author_id:
            raise ValueError("author_id must be non-empty")
        # self-mentions carry no interaction
        cleaned = tuple(m for m in self.mentions if m and m != self.author_id)
        object.__setattr__(self, "mentions", cleaned)

    def to_json(self) -> dict:
        out = {
            "record_id": self.record_id,
            "author_id": self.author_id,
            "text": self.text,
            "mentions": list(self.mentions),
        }
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        return out


@dataclass(frozen=True)
class ParseFailure:
    line_number: int
    reason: str


def _as_id(value, name):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise ValueError(f"{name} must be a string or integer")
    return str(value)


def _record_from_obj(obj) -> InteractionRecord:
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    missing = [k for k in ("record_id", "author_id", "text", "mentions") if k not in obj]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    if not isinstance(obj["text"], str):
        raise ValueError("text must be a string")
    mentions = obj["mentions"]
    if mentions is None:
        mentions = []
    if not isinstance(mentions, list):
        raise ValueError("mentions must be a list")
    timestamp = obj.get("timestamp")
    if timestamp is not None and not isinstance(timestamp, str):
        raise ValueError("timestamp must be a string")
    return InteractionRecord(
        record_id=_as_id(obj["record_id"], "record_id"),
        author_id=_as_id(obj["author_id"], "author_id"),
        text=obj["text"],
        mentions=tuple(_as_id(m, "mention") for m in mentions if m is not None),
        timestamp=timestamp,
    )


def parse_records(stream: BinaryIO | Iterable[bytes] | Iterable[str] | str | os.PathLike):
    """Parse a JSON-lines stream of interaction records.

    Parameters
    ----------
    stream : binary file, iterable of lines, or path
        One JSON object per line with keys ``record_id``, ``author_id``,
        ``text`` and ``mentions`` (``timestamp`` optional).

    Returns
    -------
    records : list of InteractionRecord
    failures : list of ParseFailure
        One entry per malformed line. Blank lines are ignored silently.

    Raises
    ------
    EmptyInputError
        If no line parsed successfully.
    OSError
        If the stream cannot be read.
    """
    if isinstance(stream, (str, os.PathLike)):
        with open(stream, "rb") as fh:
            return parse_records(fh)

    records: list[InteractionRecord] = []
    failures: list[ParseFailure] = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                failures.append(ParseFailure(lineno, f"invalid UTF-8: {exc}"))
                continue
        else:
            line = raw
        if not line.strip():
            continue
        try:
            records.append(_record_from_obj(json.loads(line)))
        except (json.JSONDecodeError, ValueError) as exc:
            failures.append(ParseFailure(lineno, str(exc)))

    for f in failures:
        logger.warning("line %d skipped: %s", f.line_number, f.reason)
    if not records:
        raise EmptyInputError(f"no valid records ({len(failures)} malformed lines)")
    return records, failures


def write_records(records: Iterable[InteractionRecord], fh) -> None:
    """Write records as canonical JSON lines to a text stream."""
    for rec in records:
        fh.write(json.dumps(rec.to_json(), sort_keys=True, ensure_ascii=False))
        fh.write("\n")


def tokenize(text: str, stopwords: Iterable[str] | None = None) -> list[str]:
    """Lowercase ``text`` and split it into content words.

    URLs, ``@name`` mentions, the retweet marker ``rt``, punctuation and
    tokens made only of digits are removed, then stopwords are dropped.
    Apostrophes are deleted rather than split on, so ``he's`` becomes ``hes``.

    >>> tokenize("RT @saracohennyc at purdue university", {"at"})
    ['purdue', 'university']
    """
    if stopwords is None:
        stopwords = DEFAULT_STOPWORDS
    text = text.lower()
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = _APOSTROPHE_RE.sub("", text)
    return [
        tok for tok in _WORD_RE.findall(text)
        if tok != _RETWEET_MARKER and not tok.isdigit() and tok not in stopwords
    ]


@dataclass(frozen=True)
class Vocabulary:
    index_to_word: tuple[str, ...]

    @cached_property
    def word_to_index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.index_to_word)}

    @property
    def size(self) -> int:
        return len(self.index_to_word)

    def __len__(self):
        return len(self.index_to_word)


@dataclass(frozen=True)
class TokenizedDoc:
    doc_index: int
    author_index: int
    tokens: tuple[int, ...]
    mention_indices: tuple[int, ...] = ()
    record_id: str = ""


@dataclass(frozen=True)
class Corpus:
    """Indexed documents with a shared vocabulary and user table.

    ``user_ids`` covers every author and every mentioned user, so a user may
    have no documents at all (mention-only users).
    """

    vocabulary: Vocabulary
    user_ids: tuple[str, ...]
    docs: tuple[TokenizedDoc, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    @cached_property
    def user_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.user_ids)}

    @property
    def W(self) -> int:
        return self.vocabulary.size

    @property
    def U(self) -> int:
        return len(self.user_ids)

    @property
    def M(self) -> int:
        return len(self.docs)

    @cached_property
    def N(self) -> int:
        return sum(len(d.tokens) for d in self.docs)

    # Flat arrays consumed by the compiled kernels.

    @cached_property
    def doc_offsets(self) -> np.ndarray:
        lengths = np.fromiter((len(d.tokens) for d in self.docs), dtype=np.int64, count=self.M)
        return np.concatenate(([0], np.cumsum(lengths))).astype(np.int64)

    @cached_property
    def token_words(self) -> np.ndarray:
        if self.N == 0:
            return np.zeros(0, dtype=np.int64)
        return np.fromiter(
            (t for d in self.docs for t in d.tokens), dtype=np.int64, count=self.N
        )

    @cached_property
    def doc_authors(self) -> np.ndarray:
        return np.fromiter((d.author_index for d in self.docs), dtype=np.int64, count=self.M)

    @cached_property
    def token_docs(self) -> np.ndarray:
        return np.repeat(np.arange(self.M, dtype=np.int64), np.diff(self.doc_offsets))

    @cached_property
    def mention_offsets(self) -> np.ndarray:
        lengths = np.fromiter((len(d.mention_indices) for d in self.docs), dtype=np.int64, count=self.M)
        return np.concatenate(([0], np.cumsum(lengths))).astype(np.int64)

    @cached_property
    def mention_users(self) -> np.ndarray:
        total = int(self.mention_offsets[-1])
        return np.fromiter(
            (x for d in self.docs for x in d.mention_indices), dtype=np.int64, count=total
        )

    def word_counts(self) -> np.ndarray:
        return np.bincount(self.token_words, minlength=self.W)

    def docs_per_user(self) -> np.ndarray:
        return np.bincount(self.doc_authors, minlength=self.U)

    def subset(self, doc_indices: Sequence[int]) -> "Corpus":
        """Corpus of the selected documents, sharing vocabulary and user table."""
        docs = tuple(
            TokenizedDoc(new, d.author_index, d.tokens, d.mention_indices, d.record_id)
            for new, d in enumerate(self.docs[i] for i in doc_indices)
        )
        return Corpus(self.vocabulary, self.user_ids, docs, dict(self.metadata))

    def to_json(self) -> dict:
        return {
            "vocabulary": list(self.vocabulary.index_to_word),
            "users": list(self.user_ids),
            "docs": [
                {
                    "record_id": d.record_id,
                    "author": d.author_index,
                    "tokens": list(d.tokens),
                    "mentions": list(d.mention_indices),
                }
                for d in self.docs
            ],
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Corpus":
        vocab = Vocabulary(tuple(obj["vocabulary"]))
        users = tuple(obj["users"])
        docs = tuple(
            TokenizedDoc(i, int(d["author"]), tuple(d["tokens"]), tuple(d["mentions"]), d.get("record_id", ""))
            for i, d in enumerate(obj["docs"])
        )
        corpus = cls(vocab, users, docs, obj.get("metadata", {}))
        corpus.validate()
        return corpus

    def dumps(self) -> str:
        return dumps_canonical(self.to_json())

    def validate(self) -> None:
        W, U = self.W, self.U
        for i, d in enumerate(self.docs):
            if d.doc_index != i:
                raise ValueError(f"doc {i} carries index {d.doc_index}")
            if not 0 <= d.author_index < U:
                raise ValueError(f"doc {i}: author index out of range")
            if any(not 0 <= t < W for t in d.tokens):
                raise ValueError(f"doc {i}: token index out of range")
            if any(not 0 <= x < U for x in d.mention_indices):
                raise ValueError(f"doc {i}: mention index out of range")


def dumps_canonical(obj) -> str:
    """JSON with sorted keys and fixed separators, so equal data gives equal bytes."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n"


def load_corpus(path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        return Corpus.from_json(json.load(fh))


def build_corpus(
    records: Sequence[InteractionRecord],
    stopwords: Iterable[str] | None = None,
    min_word_count: int = 1,
) -> Corpus:
    """Tokenize records and index them.

    The vocabulary holds every token seen at least ``min_word_count`` times,
    in lexicographic order. Users are indexed in order of first appearance
    (author before mentions, record by record). Documents left without any
    vocabulary word are dropped, but their users stay in the user table.
    """
    if min_word_count < 1:
        raise ValueError("min_word_count must be >= 1")
    if stopwords is None:
        stopwords = DEFAULT_STOPWORDS
    stopwords = frozenset(stopwords)

    tokenized = [tokenize(r.text, stopwords) for r in records]
    freq = Counter(tok for toks in tokenized for tok in toks)
    vocab = Vocabulary(tuple(sorted(w for w, n in freq.items() if n >= min_word_count)))
    w2i = vocab.word_to_index

    user_index: dict[str, int] = {}
    for r in records:
        for uid in (r.author_id, *r.mentions):
            if uid not in user_index:
                user_index[uid] = len(user_index)

    docs = []
    dropped = 0
    for rec, toks in zip(records, tokenized):
        ids = tuple(w2i[t] for t in toks if t in w2i)
        if not ids:
            dropped += 1
            continue
        docs.append(TokenizedDoc(
            doc_index=len(docs),
            author_index=user_index[rec.author_id],
            tokens=ids,
            mention_indices=tuple(user_index[m] for m in rec.mentions),
            record_id=rec.record_id,
        ))
    if not docs:
        raise EmptyCorpusError(f"all {len(records)} documents were dropped")

    corpus = Corpus(vocab, tuple(user_index), tuple(docs))
    corpus.metadata.update({
        "records": len(records),
        "docs_dropped": dropped,
        "min_word_count": min_word_count,
    })
    logger.info("corpus: M=%d W=%d U=%d N=%d (%d docs dropped)",
                corpus.M, corpus.W, corpus.U, corpus.N, dropped)
    return corpus


def top_word_frequencies(corpus: Corpus, n: int) -> list[tuple[str, int, float]]:
    """The ``n`` most frequent words with counts and cumulative token share."""
    if n < 1:
        raise ValueError("n must be >= 1")
    counts = corpus.word_counts()
    words = corpus.vocabulary.index_to_word
    order = sorted(range(corpus.W), key=lambda i: (-counts[i], words[i]))[:n]
    out = []
    running = 0
    for i in order:
        running += int(counts[i])
        out.append((words[i], int(counts[i]), running / corpus.N))
    return out


