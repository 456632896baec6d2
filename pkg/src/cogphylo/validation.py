"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .cognate import CognatePartition, DistanceMatrix
from .phylo import CharacterMatrix
from .tree import Tree
from .wordlist import Wordlist


def check_wordlist(wordlist) -> Wordlist:
    if not isinstance(wordlist, Wordlist):
        raise TypeError(f"expected a Wordlist, got {type(wordlist).__name__}")
    if len(wordlist) == 0:
        raise ValueError("wordlist is empty")
    return wordlist


def check_partition(partition: CognatePartition, wordlist: Wordlist) -> CognatePartition:
    """Totality over the wordlist and concept-disjoint clusters."""
    concept_of = {f.id: f.concept for f in wordlist.forms}
    missing = set(concept_of) - set(partition.assignment)
    if missing:
        raise ValueError(f"partition misses form IDs {sorted(missing)[:5]}")
    extra = set(partition.assignment) - set(concept_of)
    if extra:
        raise ValueError(f"partition has unknown form IDs {sorted(extra)[:5]}")
    cluster_concepts: dict[int, str] = {}
    for form_id, cluster in partition.assignment.items():
        if cluster <= 0:
            raise ValueError(f"cluster IDs must be positive, got {cluster}")
        concept = concept_of[form_id]
        seen = cluster_concepts.setdefault(cluster, concept)
        if seen != concept:
            raise ValueError(f"cluster {cluster} spans concepts {seen!r} and {concept!r}")
    return partition


def check_distance_matrix(matrix: DistanceMatrix) -> DistanceMatrix:
    values = matrix.values
    if values.shape != (len(matrix.ids), len(matrix.ids)):
        raise ValueError("distance matrix shape does not match its ID list")
    if not np.allclose(values, values.T):
        raise ValueError("distance matrix is not symmetric")
    if not np.allclose(np.diag(values), 0.0):
        raise ValueError("distance matrix diagonal is not zero")
    if values.min() < 0.0 or values.max() > 1.0:
        raise ValueError("distances must lie in [0, 1]")
    return matrix


def check_binary_tree(tree: Tree, languages: tuple[str, ...] | None = None) -> Tree:
    names = tree.leaf_names()
    if len(set(names)) != len(names):
        raise ValueError("tree has duplicate leaf labels")
    if not tree.is_binary():
        raise ValueError("tree is not binary")
    for node in tree.postorder():
        if node is tree.root:
            continue
        if node.length is None or node.length <= 0:
            raise ValueError("all branch lengths must be positive")
    if languages is not None and set(names) != set(languages):
        raise ValueError(f"tree leaves {names} != expected {sorted(languages)}")
    return tree


def as_character_matrix(X, languages: tuple[str, ...] | None = None) -> CharacterMatrix:
    """Accept a CharacterMatrix or a binary 2-D array-like."""
    if isinstance(X, CharacterMatrix):
        return X
    data = np.asarray(X)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {data.shape}")
    if languages is None:
        width = len(str(data.shape[0]))
        languages = tuple(f"L{i:0{width}d}" for i in range(1, data.shape[0] + 1))
    if len(languages) != data.shape[0]:
        raise ValueError("language labels do not match the number of rows")
    return CharacterMatrix(
        languages=tuple(languages),
        column_ids=tuple(range(1, data.shape[1] + 1)),
        data=data.astype(np.uint8),
    )
