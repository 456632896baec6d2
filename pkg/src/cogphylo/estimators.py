"""Scikit-learn style estimators wrapping the two pipeline stages.

``CognateDetector`` behaves like a clustering estimator: ``fit`` takes
a Wordlist and exposes ``labels_`` aligned with the sorted form IDs.
``TreeSampler`` behaves like a model estimator: ``fit`` takes a binary
character matrix (a CharacterMatrix or any 2-D 0/1 array) and exposes
the sampled trees. Both inherit ``get_params``/``set_params`` so they
compose with the usual tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import cognate
from .mcmc import ChainConfig, run_chain
from .phylo import pruning_loglik
from .validation import as_character_matrix, check_partition, check_wordlist


class CognateDetector(BaseEstimator):
    """Cluster the words of each concept into putative cognate sets."""

    def __init__(
        self,
        method: str = "bipskip",
        threshold: float | None = None,
        gram_length: int = 4,
        prune: float = 0.2,
        partitioner: str = "labelprop",
        scheme=None,
        seed: int = 0,
        jobs: int = 1,
    ):
        self.method = method
        self.threshold = threshold
        self.gram_length = gram_length
        self.prune = prune
        self.partitioner = partitioner
        self.scheme = scheme
        self.seed = seed
        self.jobs = jobs

    def fit(self, X, y=None):
        wordlist = check_wordlist(X)
        partition = cognate.detect(
            wordlist,
            method=self.method,
            threshold=self.threshold,
            gram_length=self.gram_length,
            prune=self.prune,
            partitioner=self.partitioner,
            scheme=self.scheme,
            seed=self.seed,
            jobs=self.jobs,
        )
        check_partition(partition, wordlist)
        self.partition_ = partition
        self.form_ids_ = np.array(sorted(partition.assignment))
        self.labels_ = np.array([partition.assignment[i] for i in self.form_ids_])
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_


class TreeSampler(BaseEstimator):
    """Annealed MCMC tree inference over a binary character matrix."""

    def __init__(
        self,
        t0: float = 50.0,
        cooling: float = 0.999,
        max_iters: int = 50_000,
        stop_window: int = 2_000,
        seed: int = 0,
        branch_rate: float = 10.0,
        move_weights: tuple[float, float, float] = (0.4, 0.4, 0.2),
    ):
        self.t0 = t0
        self.cooling = cooling
        self.max_iters = max_iters
        self.stop_window = stop_window
        self.seed = seed
        self.branch_rate = branch_rate
        self.move_weights = move_weights

    def _config(self) -> ChainConfig:
        return ChainConfig(
            t0=self.t0,
            cooling=self.cooling,
            max_iters=self.max_iters,
            stop_window=self.stop_window,
            seed=self.seed,
            branch_rate=self.branch_rate,
            move_weights=self.move_weights,
        )

    def fit(self, X, y=None, languages: tuple[str, ...] | None = None):
        matrix = as_character_matrix(X, languages)
        result = run_chain(matrix, self._config())
        self.languages_ = matrix.languages
        self.map_tree_ = result.map_tree
        self.consensus_tree_ = result.consensus_tree
        self.map_params_ = result.map_params
        self.trace_ = result.trace
        self.n_iter_ = result.n_iter
        self.best_log_posterior_ = result.best_log_posterior
        self.wall_time_ = result.wall_time
        return self

    def score(self, X, y=None) -> float:
        """Log likelihood of a matrix under the fitted tree and parameters."""
        if not hasattr(self, "map_tree_"):
            raise NotFittedError("TreeSampler is not fitted yet")
        matrix = as_character_matrix(X, getattr(self, "languages_", None))
        return pruning_loglik(self.map_tree_, matrix, self.map_params_)
