"""Tests for the scikit-learn style estimator wrappers."""

from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cogphylo.data import toy_wordlist_path
from cogphylo.estimators import CognateDetector, TreeSampler
from cogphylo.metrics import bcubed
from cogphylo.cognate import CognatePartition, gold_partition
from cogphylo.phylo import SubstParams
from cogphylo.simulate import SimConfig, evolve_matrix, random_tree
from cogphylo.wordlist import load_wordlist


@pytest.fixture(scope="module")
def wordlist():
    return load_wordlist(toy_wordlist_path())


class TestCognateDetector:
    def test_get_params_round_trip(self):
        detector = CognateDetector(method="ccm", threshold=0.4)
        params = detector.get_params()
        assert params["method"] == "ccm"
        assert params["threshold"] == 0.4
        cloned = clone(detector)
        assert cloned.get_params() == params

    def test_fit_sets_labels(self, wordlist):
        detector = CognateDetector(method="ccm").fit(wordlist)
        assert detector.labels_.shape == (len(wordlist),)
        assert (detector.form_ids_ == np.arange(1, len(wordlist) + 1)).all()

    def test_fit_predict_matches_gold_on_toy(self, wordlist):
        labels = CognateDetector(method="ccm").fit_predict(wordlist)
        predicted = CognatePartition(
            assignment={i + 1: int(c) for i, c in enumerate(labels)}
        )
        score = bcubed(predicted, gold_partition(wordlist))
        assert score.fscore == 1.0

    def test_rejects_non_wordlist(self):
        with pytest.raises(TypeError):
            CognateDetector().fit([[0, 1], [1, 0]])

    def test_set_params(self, wordlist):
        detector = CognateDetector().set_params(method="editdist", threshold=0.5)
        detector.fit(wordlist)
        assert detector.partition_ is not None


class TestTreeSampler:
    def make_data(self):
        rng = np.random.default_rng(14)
        tree = random_tree(4, 6.0, rng)
        cfg = SimConfig(n_languages=4, n_columns=60, params=SubstParams(0.4, 1.0), seed=14)
        return tree, evolve_matrix(tree, cfg, rng)

    def test_fit_exposes_results(self):
        _, matrix = self.make_data()
        sampler = TreeSampler(t0=5.0, max_iters=3000, stop_window=400, seed=0)
        sampler.fit(matrix)
        assert sorted(sampler.map_tree_.leaf_names()) == sorted(matrix.languages)
        assert sampler.n_iter_ <= 3000
        assert np.isfinite(sampler.best_log_posterior_)
        assert sampler.trace_.records

    def test_accepts_plain_arrays(self):
        rng = np.random.default_rng(3)
        X = rng.integers(0, 2, size=(4, 30))
        X[0, :] = 1
        sampler = TreeSampler(t0=2.0, max_iters=800, stop_window=150, seed=1)
        sampler.fit(X)
        assert len(sampler.languages_) == 4

    def test_score_requires_fit(self):
        _, matrix = self.make_data()
        with pytest.raises(NotFittedError):
            TreeSampler().score(matrix)

    def test_score_is_map_likelihood(self):
        from cogphylo.phylo import pruning_loglik

        _, matrix = self.make_data()
        sampler = TreeSampler(t0=2.0, max_iters=1500, stop_window=300, seed=2).fit(matrix)
        expected = pruning_loglik(sampler.map_tree_, matrix, sampler.map_params_)
        assert sampler.score(matrix) == pytest.approx(expected)

    def test_determinism(self):
        _, matrix = self.make_data()
        a = TreeSampler(t0=3.0, max_iters=1000, stop_window=200, seed=5).fit(matrix)
        b = TreeSampler(t0=3.0, max_iters=1000, stop_window=200, seed=5).fit(matrix)
        assert a.best_log_posterior_ == b.best_log_posterior_
        assert a.n_iter_ == b.n_iter_
