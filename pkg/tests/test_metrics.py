"""Tests for B-Cubed scoring and generalized quartet distance."""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogphylo.cognate import CognatePartition
from cogphylo.metrics import (
    DomainMismatchError,
    LeafSetMismatchError,
    UnknownLeafError,
    bcubed,
    gqd,
    quartet_topology,
)
from cogphylo.tree import Node, Tree, parse_newick, random_topology, reroot


def partition(groups):
    assignment = {}
    for cluster, members in enumerate(groups, start=1):
        for item in members:
            assignment[item] = cluster
    return CognatePartition(assignment=assignment)


def random_partition(items, rng):
    return CognatePartition(
        assignment={i: int(rng.integers(1, 4)) for i in items}
    )


class TestBcubed:
    def test_identical(self):
        p = partition([[1, 2], [3]])
        score = bcubed(p, p)
        assert (score.precision, score.recall, score.fscore) == (1.0, 1.0, 1.0)

    def test_singletons_vs_one_cluster(self):
        pred = partition([[1], [2], [3], [4]])
        gold = partition([[1, 2, 3, 4]])
        score = bcubed(pred, gold)
        assert score.precision == 1.0
        assert score.recall == 0.25

    def test_one_cluster_vs_two_pairs(self):
        pred = partition([[1, 2, 3, 4]])
        gold = partition([[1, 2], [3, 4]])
        score = bcubed(pred, gold)
        assert score.precision == 0.5
        assert score.recall == 1.0
        assert score.fscore == pytest.approx(2 / 3)

    def test_domain_mismatch(self):
        with pytest.raises(DomainMismatchError):
            bcubed(partition([[1, 2]]), partition([[1, 3]]))

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=50)
    def test_swap_symmetry_and_self_identity(self, seed):
        rng = np.random.default_rng(seed)
        items = list(range(1, 9))
        p = random_partition(items, rng)
        g = random_partition(items, rng)
        assert bcubed(p, g).precision == pytest.approx(bcubed(g, p).recall)
        self_score = bcubed(p, p)
        assert (self_score.precision, self_score.recall, self_score.fscore) == (1.0, 1.0, 1.0)


class TestQuartetTopology:
    def test_caterpillar(self):
        tree = parse_newick("((A:1,B:1):1,(C:1,D:1):1);")
        assert quartet_topology(tree, ("A", "B", "C", "D")) == (("A", "B"), ("C", "D"))

    def test_relabeling_symmetry(self):
        tree = parse_newick("((C:1,D:1):1,(A:1,B:1):1);")
        assert quartet_topology(tree, ("D", "C", "B", "A")) == (("A", "B"), ("C", "D"))

    def test_four_way_polytomy_is_star(self):
        tree = parse_newick("(A:1,B:1,C:1,D:1);")
        assert quartet_topology(tree, ("A", "B", "C", "D")) is None

    def test_unknown_leaf(self):
        tree = parse_newick("((A:1,B:1):1,(C:1,D:1):1);")
        with pytest.raises(UnknownLeafError):
            quartet_topology(tree, ("A", "B", "C", "X"))

    def test_embedded_quartet(self):
        tree = parse_newick("(((A:1,B:1):1,C:1):1,(D:1,(E:1,F:1):1):1);")
        assert quartet_topology(tree, ("A", "B", "E", "F")) == (("A", "B"), ("E", "F"))
        assert quartet_topology(tree, ("A", "C", "D", "E")) == (("A", "C"), ("D", "E"))


class TestGqd:
    def test_identical_trees(self):
        tree = parse_newick("((A:1,B:1):1,(C:1,D:1):1);")
        report = gqd(tree, tree)
        assert report.gqd == 0.0
        assert report.total_quartets == 1
        assert report.shared == report.gold_resolved == 1

    def test_single_quartet_disagreement(self):
        inferred = parse_newick("((A:1,B:1):1,(C:1,D:1):1);")
        gold = parse_newick("((A:1,C:1):1,(B:1,D:1):1);")
        assert gqd(inferred, gold).gqd == 1.0

    def test_five_leaf_nni_case_matches_bruteforce(self):
        inferred = parse_newick("((((A:1,B:1):1,C:1):1,D:1):1,E:1);")
        gold = parse_newick("((((A:1,C:1):1,B:1):1,D:1):1,E:1);")
        report = gqd(inferred, gold)
        names = sorted(gold.leaf_names())
        resolved = shared = 0
        for quad in combinations(names, 4):
            g = quartet_topology(gold, quad)
            if g is None:
                continue
            resolved += 1
            shared += (quartet_topology(inferred, quad) == g)
        assert report.gold_resolved == resolved
        assert report.shared == shared
        assert report.gqd == pytest.approx((resolved - shared) / resolved)

    def test_leaf_set_mismatch(self):
        a = parse_newick("((A:1,B:1):1,(C:1,D:1):1);")
        b = parse_newick("((A:1,B:1):1,(C:1,E:1):1);")
        with pytest.raises(LeafSetMismatchError):
            gqd(a, b)

    def test_needs_four_leaves(self):
        a = parse_newick("((A:1,B:1):1,C:1);")
        with pytest.raises(ValueError):
            gqd(a, a)

    def test_multifurcating_gold_normalization(self):
        gold = parse_newick("((A:1,B:1):1,C:1,D:1,E:1);")
        inferred = parse_newick("((((A:1,B:1):1,C:1):1,D:1):1,E:1);")
        report = gqd(inferred, gold)
        # Only quartets containing both A and B are resolved in gold.
        assert report.gold_resolved == 3
        assert report.shared == 3
        assert report.gqd == 0.0

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=25, deadline=None)
    def test_matches_per_quartet_recomputation(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 13))
        labels = [f"t{i}" for i in range(n)]
        a = random_topology(labels, rng)
        b = random_topology(labels, rng)
        report = gqd(a, b)
        resolved = shared = 0
        for quad in combinations(sorted(labels), 4):
            g = quartet_topology(b, quad)
            if g is None:
                continue
            resolved += 1
            shared += (quartet_topology(a, quad) == g)
        assert report.gold_resolved == resolved
        assert report.shared == shared

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=20, deadline=None)
    def test_invariances(self, seed):
        rng = np.random.default_rng(seed)
        labels = [f"t{i}" for i in range(6)]
        a = random_topology(labels, rng)
        b = random_topology(labels, rng)
        for tree in (a, b):
            for node in tree.postorder():
                if node is not tree.root:
                    node.length = float(rng.exponential(0.2)) + 1e-3
        base = gqd(a, b)
        assert 0.0 <= base.gqd <= 1.0
        assert gqd(a, a).gqd == 0.0
        # Rerooting either tree leaves every quartet unchanged.
        a_moved = reroot(a, "t3")
        b_moved = reroot(b, "t1")
        assert gqd(a_moved, b).gqd == pytest.approx(base.gqd)
        assert gqd(a, b_moved).gqd == pytest.approx(base.gqd)
        assert gqd(a_moved, b_moved).gqd == pytest.approx(base.gqd)

    def test_multifurcating_random_spotcheck(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            labels = [f"x{i}" for i in range(7)]
            tree = random_topology(labels, rng)
            # Collapse one random internal node into a polytomy.
            internals = [
                n for n in tree.postorder() if not n.is_leaf and n is not tree.root
            ]
            victim = internals[int(rng.integers(len(internals)))]
            parent = tree.parents()[id(victim)]
            parent.children.remove(victim)
            parent.children.extend(victim.children)
            other = random_topology(labels, rng)
            report = gqd(other, tree)
            resolved = shared = 0
            for quad in combinations(sorted(labels), 4):
                g = quartet_topology(tree, quad)
                if g is None:
                    continue
                resolved += 1
                shared += (quartet_topology(other, quad) == g)
            assert (report.gold_resolved, report.shared) == (resolved, shared)
