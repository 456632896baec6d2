"""Tests for priors, proposal moves, the MH step, and the annealed chain."""

from __future__ import annotations

import math
from collections import deque

import numpy as np
import pytest

from cogphylo.mcmc import (
    ChainConfig,
    McmcState,
    NoInternalEdgeError,
    TooFewLanguagesError,
    log_posterior,
    log_prior,
    mh_step,
    nni_neighbors,
    propose_nni,
    propose_params,
    propose_scale_branch,
    reflect_unit_interval,
    run_chain,
    run_chains,
)
from cogphylo.phylo import CharacterMatrix, SubstParams
from cogphylo.simulate import SimConfig, evolve_matrix, random_tree
from cogphylo.tree import (
    Tree,
    enumerate_topologies,
    parse_newick,
    topology_count,
    topology_key,
)

PARAMS = SubstParams(pi1=0.5, mu=1.0)


def constant_matrix(languages, columns=4):
    data = np.ones((len(languages), columns), dtype=np.uint8)
    return CharacterMatrix(
        languages=tuple(languages), column_ids=tuple(range(1, columns + 1)), data=data
    )


class FixedRng:
    """Deterministic stand-in for a Generator in single-draw tests."""

    def __init__(self, uniform, integer=0):
        self.uniform = uniform
        self.integer = integer

    def random(self):
        return self.uniform

    def integers(self, n):
        return self.integer % n


class TestLogPrior:
    def config(self):
        return ChainConfig(branch_rate=10.0)

    def test_exponential_branch_density(self):
        tree = parse_newick("((A:0.1,B:0.1):0.1,C:0.1);")
        params = SubstParams(pi1=0.5, mu=2.0)
        expected = 4 * (math.log(10.0) - 1.0) - params.mu
        assert log_prior(tree, params, self.config()) == pytest.approx(expected)

    def test_nonpositive_branch_is_impossible(self):
        tree = parse_newick("((A:0.1,B:0.1):0.1,C:0.1);")
        tree.root.children[0].length = 0.0
        assert log_prior(tree, PARAMS, self.config()) == -math.inf

    def test_pi1_outside_bounds_is_impossible(self):
        tree = parse_newick("(A:0.1,B:0.1);")
        config = ChainConfig(pi1_bounds=(0.4, 0.6))
        assert log_prior(tree, SubstParams(0.2, 1.0), config) == -math.inf


class TestProposeNni:
    def test_three_leaf_neighborhood(self):
        tree = parse_newick("((B:0.1,C:0.1):0.1,A:0.1);")
        expected = {
            topology_key(t) for t in enumerate_topologies(["A", "B", "C"])
        } - {topology_key(tree)}
        rng = np.random.default_rng(0)
        seen = {}
        for _ in range(2000):
            proposal, log_hastings = propose_nni(tree, rng)
            assert log_hastings == 0.0
            key = topology_key(proposal)
            seen[key] = seen.get(key, 0) + 1
        assert set(seen) == expected
        assert abs(seen[min(seen)] / 2000 - 0.5) < 0.05

    def test_two_leaf_tree_has_no_move(self):
        with pytest.raises(NoInternalEdgeError):
            propose_nni(parse_newick("(A:0.1,B:0.1);"), np.random.default_rng(0))

    @pytest.mark.parametrize("n", [4, 5, 6])
    def test_irreducible(self, n):
        labels = [chr(ord("A") + i) for i in range(n)]
        start = enumerate_topologies(labels, branch_length=0.1)[0]
        seen = {topology_key(start)}
        frontier = deque([start])
        while frontier:
            tree = frontier.popleft()
            for neighbor in nni_neighbors(tree):
                key = topology_key(neighbor)
                if key not in seen:
                    seen.add(key)
                    frontier.append(neighbor)
        assert len(seen) == topology_count(n)

    def test_preserves_leaves_and_branch_multiset(self):
        rng = np.random.default_rng(5)
        tree = random_tree(6, 8.0, rng)
        lengths = sorted(n.length for n in tree.postorder() if n is not tree.root)
        for _ in range(50):
            proposal, _ = propose_nni(tree, rng)
            assert proposal.leaf_names() == tree.leaf_names()
            proposed = sorted(
                n.length for n in proposal.postorder() if n is not proposal.root
            )
            assert proposed == pytest.approx(lengths)


class TestProposeScaleBranch:
    def test_identity_at_half(self):
        tree = parse_newick("(A:0.1,B:0.2);")
        proposal, log_hastings = propose_scale_branch(tree, FixedRng(0.5), scale=1.0)
        assert log_hastings == 0.0
        assert sorted(
            n.length for n in proposal.postorder() if n is not proposal.root
        ) == [0.1, 0.2]

    def test_formula_at_extreme(self):
        tree = parse_newick("(A:1.0,B:1.0);")
        proposal, log_hastings = propose_scale_branch(tree, FixedRng(1.0), scale=1.0)
        assert log_hastings == pytest.approx(0.5)
        lengths = [n.length for n in proposal.postorder() if n is not proposal.root]
        assert max(lengths) == pytest.approx(math.exp(0.5))

    def test_log_factor_symmetric(self):
        tree = parse_newick("(A:0.1,B:0.2);")
        rng = np.random.default_rng(11)
        factors = []
        for _ in range(100_000):
            _, log_hastings = propose_scale_branch(tree, rng, scale=1.0)
            factors.append(log_hastings)
        factors = np.array(factors)
        assert abs(factors.mean()) < 0.005
        assert abs((factors > 0).mean() - 0.5) < 0.01


class TestProposeParams:
    def test_reflection_rule(self):
        assert reflect_unit_interval(0.5 + 0.6) == pytest.approx(0.9)
        assert reflect_unit_interval(-0.3) == pytest.approx(0.3)

    def test_mu_unchanged_with_zero_step(self):
        params, log_hastings = propose_params(
            PARAMS, np.random.default_rng(0), pi1_step=0.2, mu_step=0.0
        )
        assert params.mu == PARAMS.mu
        assert log_hastings == 0.0

    def test_walk_stays_in_unit_interval(self):
        rng = np.random.default_rng(2)
        params = PARAMS
        for _ in range(100_000):
            params, _ = propose_params(params, rng, pi1_step=0.3, mu_step=0.1)
            assert 0.0 < params.pi1 < 1.0
            assert params.mu > 0.0


class TestMhStep:
    def test_flat_landscape_always_accepts(self):
        # Identical columns and equal branch lengths: every NNI leaves
        # the posterior unchanged, so the ratio is exactly 1.
        matrix = constant_matrix(["A", "B", "C", "D"])
        tree = enumerate_topologies(["A", "B", "C", "D"], branch_length=0.2)[0]
        config = ChainConfig(t0=1.0, move_weights=(1.0, 0.0, 0.0))
        state = McmcState(
            tree=tree, params=PARAMS,
            log_posterior=log_posterior(tree, PARAMS, matrix, config),
            temperature=1.0,
        )
        rng = np.random.default_rng(0)
        for _ in range(100):
            state, accepted = mh_step(state, matrix, config, rng)
            assert accepted

    def test_prior_violations_always_rejected(self):
        matrix = constant_matrix(["A", "B", "C"])
        tree = enumerate_topologies(["A", "B", "C"], branch_length=0.2)[0]
        config = ChainConfig(
            t0=1.0, move_weights=(0.0, 0.0, 1.0),
            pi1_bounds=(0.45, 0.55), pi1_step=0.3,
        )
        state = McmcState(
            tree=tree, params=PARAMS,
            log_posterior=log_posterior(tree, PARAMS, matrix, config),
            temperature=1.0,
        )
        rng = np.random.default_rng(1)
        rejected_any = False
        for _ in range(500):
            state, accepted = mh_step(state, matrix, config, rng)
            if not accepted:
                rejected_any = True
            assert 0.45 < state.params.pi1 < 0.55
        assert rejected_any

    def test_bit_identical_traces_for_fixed_seed(self):
        rng = np.random.default_rng(33)
        tree = random_tree(5, 8.0, rng)
        cfg = SimConfig(n_languages=5, n_columns=30, params=SubstParams(0.4, 1.0), seed=5)
        matrix = evolve_matrix(tree, cfg, rng)
        config = ChainConfig(t0=2.0)

        def run(seed):
            chain_rng = np.random.default_rng(seed)
            state = McmcState(
                tree=tree, params=PARAMS,
                log_posterior=log_posterior(tree, PARAMS, matrix, config),
                temperature=1.0,
            )
            out = []
            for _ in range(300):
                state, accepted = mh_step(state, matrix, config, chain_rng)
                out.append((state.log_posterior, state.params.pi1, accepted))
            return out

        assert run(99) == run(99)


class TestRunChain:
    def strong_signal_matrix(self):
        # A and B share every cognate set; C shares none of them.
        data = np.array(
            [
                [1, 1, 1, 1, 1, 0, 0, 1],
                [1, 1, 1, 1, 1, 0, 0, 1],
                [0, 0, 0, 0, 0, 1, 1, 1],
            ],
            dtype=np.uint8,
        )
        return CharacterMatrix(
            languages=("A", "B", "C"), column_ids=tuple(range(1, 9)), data=data
        )

    def test_known_grouping_beats_alternatives(self):
        matrix = self.strong_signal_matrix()
        config = ChainConfig()
        scores = {}
        for tree in enumerate_topologies(["A", "B", "C"], branch_length=0.1):
            scores[topology_key(tree)] = log_posterior(tree, SubstParams(0.5, 1.0), matrix, config)
        expected = topology_key(parse_newick("((A:0.1,B:0.1):0.1,C:0.1);"))
        assert max(scores, key=scores.get) == expected
        result = run_chain(matrix, ChainConfig(t0=5.0, max_iters=4000, stop_window=500, seed=2))
        assert topology_key(result.map_tree) == expected

    def test_too_few_languages(self):
        matrix = constant_matrix(["A", "B"])
        with pytest.raises(TooFewLanguagesError):
            run_chain(matrix, ChainConfig())

    def test_determinism(self):
        matrix = self.strong_signal_matrix()
        config = ChainConfig(t0=3.0, max_iters=2000, stop_window=300, seed=9)
        a = run_chain(matrix, config)
        b = run_chain(matrix, config)
        assert a.n_iter == b.n_iter
        assert topology_key(a.map_tree) == topology_key(b.map_tree)
        assert a.best_log_posterior == b.best_log_posterior
        assert [r.log_posterior for r in a.trace.records] == [
            r.log_posterior for r in b.trace.records
        ]

    def test_temperature_schedule(self):
        matrix = self.strong_signal_matrix()
        config = ChainConfig(t0=4.0, cooling=0.99, max_iters=1500, stop_window=200, seed=0)
        result = run_chain(matrix, config)
        temps = [r.temperature for r in result.trace.records]
        assert temps[0] == 4.0
        assert all(a >= b for a, b in zip(temps, temps[1:]))
        assert temps[-1] == 1.0

    def test_plain_mh_when_t0_is_one(self):
        matrix = self.strong_signal_matrix()
        result = run_chain(matrix, ChainConfig(t0=1.0, max_iters=800, stop_window=200, seed=1))
        assert all(r.temperature == 1.0 for r in result.trace.records)

    def test_debug_cache_check(self):
        matrix = self.strong_signal_matrix()
        config = ChainConfig(t0=2.0, max_iters=2500, stop_window=2500, seed=4, debug=True)
        run_chain(matrix, config)  # raises if the cache drifts

    def test_trace_csv(self, tmp_path):
        matrix = self.strong_signal_matrix()
        result = run_chain(matrix, ChainConfig(t0=2.0, max_iters=500, stop_window=100, seed=3))
        path = tmp_path / "trace.csv"
        result.trace.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iter,logpost,temperature,pi1,mu,accepted"
        assert len(lines) == len(result.trace.records) + 1

    def test_run_chains_picks_best(self):
        matrix = self.strong_signal_matrix()
        configs = [
            ChainConfig(t0=2.0, max_iters=800, stop_window=150, seed=s) for s in (0, 1)
        ]
        best, results = run_chains(matrix, configs)
        assert best.best_log_posterior == max(r.best_log_posterior for r in results)

    def test_run_chains_parallel_matches_serial(self):
        matrix = self.strong_signal_matrix()
        configs = [
            ChainConfig(t0=2.0, max_iters=400, stop_window=100, seed=s) for s in (0, 1)
        ]
        serial = run_chains(matrix, configs, jobs=1)[1]
        parallel = run_chains(matrix, configs, jobs=2)[1]
        for a, b in zip(serial, parallel):
            assert a.best_log_posterior == b.best_log_posterior
            assert a.n_iter == b.n_iter
