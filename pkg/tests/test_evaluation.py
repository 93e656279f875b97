import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from interestnet.corpus import InteractionRecord, build_corpus
from interestnet.estimate import ModelEstimate
from interestnet.evaluation import (SWEEP_CSV_HEADER, SplitSpec, best_permutation_accuracy, community_sweep,
                                    fold_in, heldout_perplexity, k_sweep, match_topics, mixture_log_likelihood,
                                    perplexity, split_corpus, total_variation)
from interestnet.models import train
from interestnet.sampler import CountMatrices, Hyperparams
from interestnet.synthgen import generate_cipm, generate_ipm

from conftest import random_corpus


def _uniform_estimate(K, words, kind="ipm", alpha=0.5):
    W = len(words)
    return ModelEstimate(kind, np.full((K, W), 1.0 / W), np.full((1, K), 1.0 / K), Hyperparams(K=K, alpha=alpha),
                         CountMatrices.zeros(K, W, 1), tuple(words), ("u0",))


def _users_corpus(n_users):
    return build_corpus([InteractionRecord(f"r{u}", f"u{u}", "alpha beta", ()) for u in range(n_users)])


class TestSplit:
    def test_ninety_percent_of_users(self):
        train_c, test_c = split_corpus(_users_corpus(10), SplitSpec(0.9, "by-user", 0))
        assert (train_c.M, test_c.M) == (9, 1)

    def test_deterministic_and_disjoint(self):
        corpus = random_corpus(0, n_docs=40, n_users=8)
        for unit in ("by-user", "by-doc"):
            a = split_corpus(corpus, SplitSpec(0.7, unit, 3))
            b = split_corpus(corpus, SplitSpec(0.7, unit, 3))
            assert a[0].dumps() == b[0].dumps() and a[1].dumps() == b[1].dumps()
            ids = [d.record_id for d in a[0].docs] + [d.record_id for d in a[1].docs]
            assert sorted(ids) == sorted(d.record_id for d in corpus.docs)
        tr, te = split_corpus(corpus, SplitSpec(0.7, "by-user", 3))
        assert not {d.author_index for d in tr.docs} & {d.author_index for d in te.docs}

    def test_clamps_to_one_each_side(self):
        tr, te = split_corpus(_users_corpus(2), SplitSpec(0.99, "by-user", 0))
        assert (tr.M, te.M) == (1, 1)

    def test_rejects(self):
        with pytest.raises(ValueError):
            SplitSpec(1.0)
        with pytest.raises(ValueError):
            SplitSpec(0.5, "by-word")
        with pytest.raises(ValueError):
            split_corpus(_users_corpus(1), SplitSpec())


class TestPerplexity:
    @given(st.integers(0, 10_000), st.integers(0, 5))
    def test_uniform_model_gives_vocabulary_size(self, seed, sweeps):
        corpus = random_corpus(seed)
        est = _uniform_estimate(3, corpus.vocabulary.index_to_word)
        pp = perplexity(est, corpus, fold_in_sweeps=sweeps, seed=seed)
        assert pp == pytest.approx(corpus.W, rel=1e-9)

    def test_one_token_at_half(self):
        corpus = build_corpus([InteractionRecord("1", "a", "x", ())], stopwords=set())
        est = ModelEstimate("ipm", np.array([[0.5, 0.5]]), np.ones((1, 1)), Hyperparams(K=1),
                            CountMatrices.zeros(1, 2, 1), ("x", "y"), ("a",))
        assert perplexity(est, corpus, 0) == pytest.approx(2.0, rel=1e-15)

    def test_zero_sweeps_is_uniform_mixture(self):
        corpus = random_corpus(2)
        est = train(corpus, "ipm", Hyperparams(K=3), sweeps=20, seed=1)
        res = heldout_perplexity(est, corpus, fold_in_sweeps=0)
        p = est.phi.mean(axis=0)[corpus.token_words]
        assert res.log_likelihood == pytest.approx(float(np.log(p).sum()), rel=1e-12)

    @given(st.integers(0, 10_000))
    def test_label_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        K, W, D = 4, 6, 3
        phi = rng.dirichlet(np.ones(W), size=K)
        theta = rng.dirichlet(np.ones(K), size=D)
        words, docs = rng.integers(W, size=25), rng.integers(D, size=25)
        perm = rng.permutation(K)
        a = mixture_log_likelihood(phi, theta, words, docs)
        b = mixture_log_likelihood(phi[perm], theta[:, perm], words, docs)
        assert a == pytest.approx(b, rel=1e-12)

    def test_fold_in_matches_reference_loop(self):
        rng = np.random.default_rng(0)
        K, W = 3, 5
        phi = rng.dirichlet(np.ones(W), size=K)
        words = rng.integers(W, size=30)
        docs = np.sort(rng.integers(4, size=30))
        got = fold_in(phi, words, docs, 4, 0.3, sweeps=6, average_last=3, seed=17)

        ref_rng = np.random.Generator(np.random.PCG64(17))
        z = ref_rng.integers(0, K, size=30)
        n_mk = np.zeros((4, K))
        for m, k in zip(docs, z):
            n_mk[m, k] += 1
        acc = np.zeros((4, K))
        for s in range(6):
            u = ref_rng.random(30)
            for i in range(30):
                n_mk[docs[i], z[i]] -= 1
                cum = np.cumsum(phi[:, words[i]] * (n_mk[docs[i]] + 0.3))
                z[i] = min(int(np.searchsorted(cum, u[i] * cum[-1], side="right")), K - 1)
                n_mk[docs[i], z[i]] += 1
            if s >= 3:
                acc += (n_mk + 0.3) / (n_mk.sum(axis=1, keepdims=True) + K * 0.3)
        np.testing.assert_allclose(got, acc / 3, rtol=0, atol=1e-14)

    def test_out_of_vocabulary_tokens_are_skipped(self):
        est = _uniform_estimate(2, ("known", "other"))
        test = build_corpus([InteractionRecord("1", "a", "known novel known", ())], stopwords=set())
        res = heldout_perplexity(est, test, fold_in_sweeps=3)
        assert (res.tokens, res.skipped) == (2, 1)
        assert res.perplexity == pytest.approx(2.0, rel=1e-12)
        with pytest.raises(ValueError):
            heldout_perplexity(est, build_corpus([InteractionRecord("1", "a", "novel", ())], stopwords=set()))


class TestSweeps:
    def test_single_value_and_csv(self):
        corpus, _ = generate_ipm(3, 20, 60, 10, 0.1, 0.01, seed=0)
        res = k_sweep(corpus, "ipm", [2], sweeps=30, seed=1)
        assert len(res.rows) == 1
        buf = io.StringIO()
        res.write_csv(buf, record_time=False)
        lines = buf.getvalue().split("\n")
        assert lines[0] == ",".join(SWEEP_CSV_HEADER) == "value,perplexity,sweeps,seconds"
        assert lines[1].startswith("2,") and lines[1].endswith(",30,0") and lines[2] == ""
        assert res.rows[0].perplexity < corpus.W

    def test_community_sweep_bounds(self):
        corpus, _ = generate_cipm(2, 15, 24, 4, 4, 6, 2, 0.1, 0.01, 0.1, 0.1, seed=2)
        rows = community_sweep(corpus, [1, 4, 12], K=2, sweeps=30, seed=0)
        by_c = {r.value: r for r in rows}
        assert by_c[1].users_assigned == corpus.U and by_c[1].memberships == corpus.U
        assert all(r.users_assigned <= corpus.U for r in rows)
        assert by_c[4].users_assigned >= by_c[12].users_assigned

    def test_empty_values_rejected(self, tiny_corpus):
        with pytest.raises(ValueError):
            k_sweep(tiny_corpus, "ipm", [])


class TestScoring:
    def test_match_topics_recovers_permutation(self):
        rng = np.random.default_rng(3)
        truth = rng.dirichlet(np.full(8, 0.2), size=5)
        perm = rng.permutation(5)
        got, dist = match_topics(truth[perm], truth)
        assert np.array_equal(perm[got], np.arange(5))
        np.testing.assert_allclose(dist, 0.0, atol=1e-15)

    def test_total_variation(self):
        assert total_variation(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
        assert total_variation(np.array([0.5, 0.5]), np.array([0.5, 0.5])) == 0.0

    def test_best_permutation_accuracy(self):
        assert best_permutation_accuracy([1, 1, 0, 0, 2], [0, 0, 1, 1, 2], 3) == 1.0
        assert best_permutation_accuracy([0, 0, 0, 1], [0, 0, 1, 1], 2) == 0.75
        assert math.isclose(best_permutation_accuracy([0, 1, 2], [0, 0, 0], 3), 1 / 3)
