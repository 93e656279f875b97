import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from interestnet.corpus import (Corpus, InteractionRecord, build_corpus, parse_records, tokenize,
                                top_word_frequencies, write_records)
from interestnet.errors import EmptyCorpusError, EmptyInputError

from conftest import random_records


def _stream(*lines):
    return io.BytesIO("\n".join(lines).encode("utf-8"))


class TestParseRecords:
    def test_minimal_line(self):
        records, failures = parse_records(_stream('{"record_id":"1","author_id":"a","text":"hello","mentions":[]}'))
        assert len(records) == 1 and failures == []
        assert records[0].mentions == ()

    def test_broken_line_is_reported_not_fatal(self):
        records, failures = parse_records(_stream(
            "{broken", '{"record_id":"1","author_id":"a","text":"hello","mentions":[]}'))
        assert len(records) == 1
        assert [f.line_number for f in failures] == [1]

    def test_self_mention_dropped(self):
        records, _ = parse_records(_stream('{"record_id":"1","author_id":"a","text":"x","mentions":["a","b"]}'))
        assert records[0].mentions == ("b",)

    def test_integer_ids_become_strings(self):
        records, _ = parse_records(_stream(
            '{"record_id":7,"author_id":709920419529281537,"text":"x","mentions":[3239853627]}'))
        assert records[0].author_id == "709920419529281537"
        assert records[0].mentions == ("3239853627",)

    def test_missing_key_and_wrong_types(self):
        records, failures = parse_records(_stream(
            '{"record_id":"1","author_id":"a","text":"x"}',
            '{"record_id":"2","author_id":"a","text":5,"mentions":[]}',
            '{"record_id":"3","author_id":"a","text":"ok","mentions":"b"}',
            '[1,2]',
            '{"record_id":"4","author_id":"a","text":"ok","mentions":null}'))
        assert [r.record_id for r in records] == ["4"]
        assert [f.line_number for f in failures] == [1, 2, 3, 4]

    def test_blank_lines_skipped(self):
        records, failures = parse_records(_stream("", '{"record_id":"1","author_id":"a","text":"x","mentions":[]}', "  "))
        assert len(records) == 1 and failures == []

    def test_only_garbage_raises(self):
        with pytest.raises(EmptyInputError):
            parse_records(_stream("{broken", "nope"))

    def test_invalid_utf8_is_a_failure(self):
        stream = io.BytesIO(b'\xff\xfe\n{"record_id":"1","author_id":"a","text":"x","mentions":[]}\n')
        records, failures = parse_records(stream)
        assert len(records) == 1 and failures[0].line_number == 1

    def test_write_then_parse_round_trip(self):
        recs = random_records(np.random.default_rng(0), 10, 4, 5)
        buf = io.StringIO()
        write_records(recs, buf)
        back, failures = parse_records(io.BytesIO(buf.getvalue().encode()))
        assert back == recs and not failures

    def test_empty_ids_rejected(self):
        with pytest.raises(ValueError):
            InteractionRecord("", "a", "x", ())


class TestTokenize:
    def test_retweet_example(self):
        assert tokenize("RT @saracohennyc at purdue university", {"at"}) == ["purdue", "university"]

    def test_empty(self):
        assert tokenize("") == []

    def test_case_folding(self):
        assert tokenize("Purdue purdue PURDUE", set()) == ["purdue"] * 3

    def test_urls_digits_punctuation(self):
        text = "Go team!!! https://t.co/xyz www.example.com 2016 win, #purdue"
        assert tokenize(text, set()) == ["go", "team", "win", "purdue"]

    def test_apostrophes_join(self):
        assert tokenize("he's won’t", set()) == ["hes", "wont"]

    def test_default_stopwords(self):
        assert tokenize("we are in this campaign to win") == ["campaign", "win"]

    @given(st.text(max_size=80))
    def test_tokens_are_clean(self, text):
        for tok in tokenize(text, set()):
            assert tok == tok.lower() and tok.strip() == tok and tok
            assert not tok.isdigit() and tok != "rt"
            assert tokenize(tok, set()) == [tok]


class TestBuildCorpus:
    def test_min_word_count(self):
        recs = [InteractionRecord("1", "a", "a b", ()), InteractionRecord("2", "a", "b c", ())]
        corpus = build_corpus(recs, stopwords=set(), min_word_count=2)
        assert (corpus.W, corpus.M, corpus.N) == (1, 2, 2)
        assert corpus.vocabulary.index_to_word == ("b",)

    def test_everything_kept(self):
        corpus = build_corpus([InteractionRecord("1", "a", "x y z", ())], stopwords=set())
        assert (corpus.W, corpus.M, corpus.N) == (3, 1, 3)

    def test_all_stopwords_is_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            build_corpus([InteractionRecord("1", "a", "the and of", ()), InteractionRecord("2", "b", "a an", ())])

    def test_dropped_docs_keep_their_users(self, tiny_records):
        recs = tiny_records + [InteractionRecord("4", "dave", "the the", ("erin",))]
        corpus = build_corpus(recs)
        assert corpus.M == 3 and corpus.metadata["docs_dropped"] == 1
        assert "dave" in corpus.user_ids and "erin" in corpus.user_ids

    def test_user_order_is_first_appearance(self, tiny_corpus):
        assert tiny_corpus.user_ids == ("alice", "bob", "carol")

    def test_snapshot_round_trip(self, tiny_corpus):
        back = Corpus.from_json(json.loads(tiny_corpus.dumps()))
        assert back.dumps() == tiny_corpus.dumps()

    def test_snapshot_validation(self, tiny_corpus):
        obj = json.loads(tiny_corpus.dumps())
        obj["docs"][0]["tokens"].append(999)
        with pytest.raises(ValueError):
            Corpus.from_json(obj)

    @given(st.integers(0, 10_000))
    def test_round_trip_and_conservation(self, seed):
        recs = random_records(np.random.default_rng(seed), 8, 4, 6)
        corpus = build_corpus(recs, stopwords=set())
        assert corpus.word_counts().sum() == corpus.N
        words = corpus.vocabulary.index_to_word
        kept = [r for r in recs if tokenize(r.text, set())]
        for doc, rec in zip(corpus.docs, kept):
            assert [words[t] for t in doc.tokens] == tokenize(rec.text, set())
            assert corpus.user_ids[doc.author_index] == rec.author_id
        assert build_corpus(recs, stopwords=set()).dumps() == corpus.dumps()

    def test_flat_arrays_agree_with_docs(self):
        corpus = build_corpus(random_records(np.random.default_rng(3), 20, 5, 9), stopwords=set())
        flat = [t for d in corpus.docs for t in d.tokens]
        assert corpus.token_words.tolist() == flat
        assert corpus.token_docs.tolist() == [d.doc_index for d in corpus.docs for _ in d.tokens]
        assert corpus.mention_users.tolist() == [x for d in corpus.docs for x in d.mention_indices]


class TestTopWordFrequencies:
    def test_hand_count(self):
        corpus = build_corpus([InteractionRecord("1", "u", "a a b a", ())], stopwords=set())
        assert top_word_frequencies(corpus, 2) == [("a", 3, 0.75), ("b", 1, 1.0)]

    def test_clamped(self):
        corpus = build_corpus([InteractionRecord("1", "u", "a b c", ())], stopwords=set())
        assert len(top_word_frequencies(corpus, 10)) == 3

    def test_single_word(self):
        corpus = build_corpus([InteractionRecord("1", "u", "solo solo", ())], stopwords=set())
        assert top_word_frequencies(corpus, 5) == [("solo", 2, 1.0)]

    def test_ties_are_lexicographic(self):
        corpus = build_corpus([InteractionRecord("1", "u", "zeta alpha mid", ())], stopwords=set())
        assert [w for w, _, _ in top_word_frequencies(corpus, 3)] == ["alpha", "mid", "zeta"]
