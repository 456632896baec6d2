"""Forward simulation: random trees and evolved binary character matrices.

The simulator is the end-to-end validation harness for the likelihood
and the sampler: simulate a known tree, evolve characters down it, and
check that inference gets the tree back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phylo import CharacterMatrix, SubstParams, transition_matrix
from .tree import Tree, random_topology


@dataclass(frozen=True)
class SimConfig:
    n_languages: int
    n_columns: int
    params: SubstParams
    branch_rate: float = 10.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_languages < 3:
            raise ValueError("need at least three languages")
        if self.n_columns < 1:
            raise ValueError("need at least one column")
        if self.branch_rate <= 0:
            raise ValueError("branch rate must be positive")


def language_labels(n: int) -> list[str]:
    width = len(str(n))
    return [f"L{i:0{width}d}" for i in range(1, n + 1)]


def random_tree(n: int, rate: float, rng: np.random.Generator) -> Tree:
    """Uniform random rooted binary topology with Exponential(rate) branch lengths."""
    if n < 2:
        raise ValueError("need at least two leaves")
    tree = random_topology(language_labels(n), rng)
    for node in tree.postorder():
        if node is not tree.root:
            node.length = float(rng.exponential(1.0 / rate))
    return tree


def _evolve_columns(
    tree: Tree, params: SubstParams, k: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw k i.i.d. columns; rows ordered by sorted leaf label."""
    states = {id(tree.root): (rng.random(k) < params.pi1).astype(np.uint8)}
    leaf_states: dict[str, np.ndarray] = {}
    for node in tree.preorder():
        for child in node.children:
            p = transition_matrix(params, child.length)
            prob_one = np.where(states[id(node)] == 1, p[1, 1], p[0, 1])
            states[id(child)] = (rng.random(k) < prob_one).astype(np.uint8)
        if node.is_leaf:
            leaf_states[node.label] = states[id(node)]
    return np.vstack([leaf_states[lang] for lang in sorted(leaf_states)])


def evolve_matrix(
    tree: Tree,
    cfg: SimConfig,
    rng: np.random.Generator | None = None,
) -> CharacterMatrix:
    """Evolve cfg.n_columns binary characters down the tree.

    The root state is Bernoulli(pi1) per column; every child redraws
    from the transition matrix of its branch. Columns where no leaf
    ends up in state 1 cannot occur in presence/absence data, so those
    few are rejected and redrawn.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    data = _evolve_columns(tree, cfg.params, cfg.n_columns, rng)
    absent = data.sum(axis=0) == 0
    while absent.any():
        data[:, np.where(absent)[0]] = _evolve_columns(
            tree, cfg.params, int(absent.sum()), rng
        )
        absent = data.sum(axis=0) == 0
    return CharacterMatrix(
        languages=tuple(sorted(n.label for n in tree.leaves())),
        column_ids=tuple(range(1, cfg.n_columns + 1)),
        data=data,
    )
