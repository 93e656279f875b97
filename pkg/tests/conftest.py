import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from interestnet.corpus import InteractionRecord, build_corpus

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_records(rng, n_docs, n_users, n_words, max_len=8, max_mentions=3):
    """Small random corpus records; words are 'w<j>', users 'u<u>'."""
    records = []
    for m in range(n_docs):
        author = int(rng.integers(n_users))
        length = int(rng.integers(1, max_len + 1))
        text = " ".join(f"w{int(j)}" for j in rng.integers(n_words, size=length))
        others = [u for u in range(n_users) if u != author]
        k = int(rng.integers(0, min(max_mentions, len(others)) + 1))
        mentions = tuple(f"u{int(x)}" for x in rng.choice(others, size=k, replace=True)) if k else ()
        records.append(InteractionRecord(f"r{m}", f"u{author}", text, mentions))
    return records


def random_corpus(seed, n_docs=12, n_users=5, n_words=7, **kw):
    return build_corpus(random_records(np.random.default_rng(seed), n_docs, n_users, n_words, **kw))


@pytest.fixture
def tiny_records():
    return [
        InteractionRecord("1", "alice", "Purdue campus looks great today", ("bob",)),
        InteractionRecord("2", "bob", "great game at purdue tonight", ("alice", "carol")),
        InteractionRecord("3", "carol", "campus game tonight", ()),
    ]


@pytest.fixture
def tiny_corpus(tiny_records):
    return build_corpus(tiny_records)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
