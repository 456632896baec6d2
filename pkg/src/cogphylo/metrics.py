"""Clustering and tree-comparison metrics.

B-Cubed scores compare a predicted cognate partition against gold
annotations item by item. The generalized quartet distance compares
two trees over the same languages by the fraction of resolved gold
quartets whose induced topology the inferred tree contradicts.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .cognate import CognatePartition
from .tree import Tree

Pairing = tuple[tuple[str, str], tuple[str, str]]


class DomainMismatchError(ValueError):
    """The two partitions cover different form-ID sets."""


class UnknownLeafError(KeyError):
    """A requested leaf is absent from the tree."""


class LeafSetMismatchError(ValueError):
    """The two trees carry different leaf sets."""


@dataclass(frozen=True)
class BcubedScore:
    precision: float
    recall: float
    fscore: float


@dataclass(frozen=True)
class QuartetReport:
    total_quartets: int
    gold_resolved: int
    shared: int
    gqd: float


def bcubed(pred: CognatePartition, gold: CognatePartition) -> BcubedScore:
    """Item-level B-Cubed precision, recall, and harmonic F-score."""
    if set(pred.assignment) != set(gold.assignment):
        raise DomainMismatchError("partitions cover different form IDs")
    pred_clusters = pred.clusters()
    gold_clusters = gold.clusters()
    pred_of = {i: pred_clusters[c] for i, c in pred.assignment.items()}
    gold_of = {i: gold_clusters[c] for i, c in gold.assignment.items()}
    precisions = []
    recalls = []
    for item in pred.assignment:
        overlap = len(pred_of[item] & gold_of[item])
        precisions.append(overlap / len(pred_of[item]))
        recalls.append(overlap / len(gold_of[item]))
    precision = sum(precisions) / len(precisions)
    recall = sum(recalls) / len(recalls)
    if precision + recall == 0:
        fscore = 0.0
    else:
        fscore = 2 * precision * recall / (precision + recall)
    return BcubedScore(precision=precision, recall=recall, fscore=fscore)


def _pair_sorted(x: str, y: str) -> tuple[str, str]:
    return (x, y) if x <= y else (y, x)


def quartet_topology(tree: Tree, leaves: tuple[str, str, str, str]) -> Pairing | None:
    """Induced unrooted topology of four leaves, or None for a star.

    Works by restricting every edge's leaf-set bipartition to the four
    requested leaves: any edge inducing a 2+2 split determines the
    pairing, and a tree with no such edge leaves the quartet
    unresolved.
    """
    if len(set(leaves)) != 4:
        raise ValueError("need four distinct leaves")
    wanted = set(leaves)
    below: dict[int, set[str]] = {}
    found = set()
    split: frozenset[str] | None = None
    for node in tree.postorder():
        if node.is_leaf:
            name = node.label or ""
            found.add(name)
            below[id(node)] = {name} & wanted
        else:
            merged = set()
            for child in node.children:
                merged |= below.pop(id(child))
            below[id(node)] = merged
            if len(merged) == 2 and split is None:
                split = frozenset(merged)
    missing = wanted - found
    if missing:
        raise UnknownLeafError(f"leaves not in tree: {sorted(missing)}")
    if split is None:
        return None
    one = sorted(split)
    other = sorted(wanted - split)
    return tuple(sorted((_pair_sorted(*one), _pair_sorted(*other))))


def _pair_lca_depths(tree: Tree, order: dict[str, int]) -> np.ndarray:
    """depth[i, j] = depth of the lowest common ancestor of leaves i and j."""
    n = len(order)
    depth_table = np.zeros((n, n), dtype=np.int32)
    depths: dict[int, int] = {id(tree.root): 0}
    for node in tree.preorder():
        for child in node.children:
            depths[id(child)] = depths[id(node)] + 1
    below: dict[int, list[int]] = {}
    for node in tree.postorder():
        if node.is_leaf:
            below[id(node)] = [order[node.label or ""]]
            continue
        groups = [below.pop(id(c)) for c in node.children]
        d = depths[id(node)]
        for gi in range(len(groups)):
            for gj in range(gi + 1, len(groups)):
                for a in groups[gi]:
                    depth_table[a, groups[gj]] = d
                    depth_table[groups[gj], a] = d
        merged = [leaf for group in groups for leaf in group]
        below[id(node)] = merged
    return depth_table


def _quartet_indices(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    quads = np.fromiter(
        (x for quad in combinations(range(n), 4) for x in quad),
        dtype=np.int64,
    ).reshape(-1, 4)
    return quads[:, 0], quads[:, 1], quads[:, 2], quads[:, 3]


def _resolve_all(depth_table: np.ndarray, idx) -> np.ndarray:
    """Pairing index per quartet: 0=ij|kl, 1=ik|jl, 2=il|jk, -1=star.

    The deepest pairwise LCA identifies the resolved pairing; any tie
    for the maximum across pairings means the quartet is a star.
    """
    i, j, k, l = idx
    m = np.stack(
        [
            np.maximum(depth_table[i, j], depth_table[k, l]),
            np.maximum(depth_table[i, k], depth_table[j, l]),
            np.maximum(depth_table[i, l], depth_table[j, k]),
        ]
    )
    best = m.max(axis=0)
    ties = (m == best).sum(axis=0)
    out = m.argmax(axis=0).astype(np.int8)
    out[ties > 1] = -1
    return out


def gqd(inferred: Tree, gold: Tree) -> QuartetReport:
    """Generalized quartet distance normalized by resolved gold quartets."""
    gold_leaves = gold.leaf_names()
    if len(set(gold_leaves)) != len(gold_leaves):
        raise LeafSetMismatchError("gold tree has duplicate leaves")
    if set(gold_leaves) != set(inferred.leaf_names()):
        raise LeafSetMismatchError("trees have different leaf sets")
    n = len(gold_leaves)
    if n < 4:
        raise ValueError("quartet distance needs at least four leaves")
    order = {name: i for i, name in enumerate(gold_leaves)}
    idx = _quartet_indices(n)
    gold_res = _resolve_all(_pair_lca_depths(gold, order), idx)
    inf_res = _resolve_all(_pair_lca_depths(inferred, order), idx)
    resolved = gold_res >= 0
    gold_resolved = int(resolved.sum())
    if gold_resolved == 0:
        raise ValueError("gold tree resolves no quartets")
    shared = int((resolved & (gold_res == inf_res)).sum())
    return QuartetReport(
        total_quartets=len(gold_res),
        gold_resolved=gold_resolved,
        shared=shared,
        gqd=(gold_resolved - shared) / gold_resolved,
    )
