"""Binary character matrices and the two-state substitution model.

Languages become rows, cognate sets become columns; cell (i, j) is 1
when language i has at least one word in cognate set j. Tree likelihood
for such a matrix is computed by postorder pruning with per-node
rescaling, so large matrices do not underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cognate import CognatePartition
from .tree import Tree
from .wordlist import Wordlist


class LabelMismatchError(ValueError):
    """Tree leaves and matrix languages disagree."""


@dataclass(frozen=True)
class SubstParams:
    """Two-state model: stationary frequency of state 1 and overall rate."""

    pi1: float
    mu: float

    def __post_init__(self) -> None:
        if not (0.0 < self.pi1 < 1.0):
            raise ValueError("pi1 must lie strictly between 0 and 1")
        if not (self.mu > 0.0 and math.isfinite(self.mu)):
            raise ValueError("mu must be positive and finite")

    @property
    def pi0(self) -> float:
        return 1.0 - self.pi1


@dataclass(frozen=True)
class CharacterMatrix:
    """Binary presence/absence matrix over languages x cognate sets."""

    languages: tuple[str, ...]
    column_ids: tuple[int, ...]
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.data.shape != (len(self.languages), len(self.column_ids)):
            raise ValueError("matrix shape does not match labels")
        if not np.isin(self.data, (0, 1)).all():
            raise ValueError("matrix cells must be 0 or 1")
        if self.data.shape[1] and (self.data.sum(axis=0) == 0).any():
            raise ValueError("matrix has an all-absent column")

    @property
    def n_languages(self) -> int:
        return len(self.languages)

    @property
    def n_columns(self) -> int:
        return len(self.column_ids)


def build_matrix(
    partition: CognatePartition,
    wordlist: Wordlist,
    drop_constant: bool = False,
) -> CharacterMatrix:
    """One column per cluster: 1 where the language attests the cluster.

    All-ones columns are kept by default (they still inform the
    stationary frequency); drop_constant removes them.
    """
    missing = [f.id for f in wordlist.forms if f.id not in partition.assignment]
    if missing:
        raise ValueError(f"partition does not cover form IDs {missing[:5]}")
    languages = wordlist.languages
    lang_index = {lang: i for i, lang in enumerate(languages)}
    cluster_ids = sorted(set(partition.assignment.values()))
    col_index = {c: j for j, c in enumerate(cluster_ids)}
    data = np.zeros((len(languages), len(cluster_ids)), dtype=np.uint8)
    for form in wordlist.forms:
        data[lang_index[form.doculect], col_index[partition.assignment[form.id]]] = 1
    if drop_constant:
        keep = data.sum(axis=0) < len(languages)
        data = data[:, keep]
        cluster_ids = [c for c, k in zip(cluster_ids, keep) if k]
    return CharacterMatrix(
        languages=languages, column_ids=tuple(cluster_ids), data=data
    )


def save_matrix(matrix: CharacterMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("LANGUAGE\t" + "\t".join(str(c) for c in matrix.column_ids) + "\n")
        for i, lang in enumerate(matrix.languages):
            cells = "\t".join(str(int(v)) for v in matrix.data[i])
            handle.write(f"{lang}\t{cells}\n")


def load_matrix(path: str | Path) -> CharacterMatrix:
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    header = lines[0].split("\t")
    column_ids = tuple(int(c) for c in header[1:])
    languages: list[str] = []
    rows: list[list[int]] = []
    for line in lines[1:]:
        cells = line.split("\t")
        languages.append(cells[0])
        rows.append([int(v) for v in cells[1:]])
    return CharacterMatrix(
        languages=tuple(languages),
        column_ids=column_ids,
        data=np.array(rows, dtype=np.uint8),
    )


def transition_matrix(params: SubstParams, t: float) -> np.ndarray:
    """Row-stochastic P(t) with P[i][j] = pi_j + (delta_ij - pi_j) exp(-mu t)."""
    if t < 0:
        raise ValueError("branch length must be non-negative")
    decay = math.exp(-params.mu * t)
    pi = np.array([params.pi0, params.pi1])
    return pi[None, :] + (np.eye(2) - pi[None, :]) * decay


def _check_leaves(tree: Tree, matrix: CharacterMatrix) -> None:
    leaf_names = tree.leaf_names()
    if len(leaf_names) != len(set(leaf_names)):
        raise LabelMismatchError("tree has duplicate leaf labels")
    if set(leaf_names) != set(matrix.languages):
        raise LabelMismatchError(
            f"tree leaves {leaf_names} != matrix languages {sorted(matrix.languages)}"
        )


def pruning_loglik(tree: Tree, matrix: CharacterMatrix, params: SubstParams) -> float:
    """Log likelihood of the matrix on the tree under the two-state model.

    Postorder pass over all columns at once: leaf partials are one-hot
    in the observed state, internal partials multiply the per-child
    transition-weighted partials. Each node's partials are rescaled to
    a maximum of 1 and the log factors accumulated, which keeps the
    computation in range for matrices with thousands of columns.
    """
    _check_leaves(tree, matrix)
    lang_index = {lang: i for i, lang in enumerate(matrix.languages)}
    n_cols = matrix.n_columns
    states = matrix.data.astype(np.int64)
    eye = np.eye(2)

    partials: dict[int, np.ndarray] = {}
    log_scale = np.zeros(n_cols)
    for node in tree.postorder():
        if node.is_leaf:
            partials[id(node)] = eye[states[lang_index[node.label]]]
            continue
        product = None
        for child in node.children:
            if child.length is None or child.length < 0:
                raise ValueError("likelihood requires non-negative branch lengths")
            p = transition_matrix(params, child.length)
            lifted = partials.pop(id(child)) @ p.T
            product = lifted if product is None else product * lifted
        scale = product.max(axis=1)
        positive = scale > 0
        product[positive] /= scale[positive][:, None]
        log_scale += np.where(positive, np.log(np.where(positive, scale, 1.0)), -np.inf)
        partials[id(node)] = product

    pi = np.array([params.pi0, params.pi1])
    root = partials[id(tree.root)]
    with np.errstate(divide="ignore"):
        per_column = np.log(root @ pi) + log_scale
    return math.fsum(per_column.tolist())
