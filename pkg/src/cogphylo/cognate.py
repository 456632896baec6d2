"""Per-concept cognate clustering.

Four detectors share one contract: partition the forms of each concept
into clusters, with cluster IDs unique across the whole wordlist.

* ``ccm``      — first-two-consonant-class match, binary distance.
* ``editdist`` — normalized token edit distance.
* ``sca``      — alignment-score distance over sound-class strings.
* ``bipskip``  — skip-grams of class strings linked to words in a
  bipartite network, projected to a word graph and partitioned.

The first three feed a distance matrix into average-linkage (UPGMA)
flat clustering cut at a threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .align import ScoringScheme, normalized_levenshtein, sca_distance
from .sounds import consonant_skeleton
from .wordlist import WordForm, Wordlist

DEFAULT_THRESHOLDS = {"ccm": 0.5, "editdist": 0.55, "sca": 0.45}
DEFAULT_GRAM_LENGTH = 4
DEFAULT_PRUNE = 0.2
PAD = "$"
METHODS = ("ccm", "editdist", "sca", "bipskip")
PARTITIONERS = ("components", "labelprop")

WordGraph = dict[int, dict[int, int]]


class ConceptMismatchError(ValueError):
    """Pairwise cognate distance is only defined within one concept."""


@dataclass(frozen=True)
class CognatePartition:
    """Assignment of form IDs to positive cluster IDs."""

    assignment: dict[int, int]

    def clusters(self) -> dict[int, frozenset[int]]:
        grouped: dict[int, set[int]] = {}
        for form_id, cluster_id in self.assignment.items():
            grouped.setdefault(cluster_id, set()).add(form_id)
        return {c: frozenset(ids) for c, ids in grouped.items()}

    def __len__(self) -> int:
        return len(self.assignment)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric pairwise distances in [0, 1] over an ordered ID list."""

    ids: tuple[int, ...]
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class BipartiteNet:
    """Word nodes linked to the skip-grams they contain."""

    word_nodes: tuple[int, ...]
    gram_nodes: tuple[str, ...]
    edges: frozenset[tuple[int, str]]


def ccm_distance(w1: WordForm, w2: WordForm) -> float:
    """0.0 iff the first two consonant classes match and are non-empty."""
    if w1.concept != w2.concept:
        raise ConceptMismatchError(
            f"forms {w1.id} and {w2.id} have different concepts"
        )
    s1 = consonant_skeleton(w1.classes, 2)
    s2 = consonant_skeleton(w2.classes, 2)
    if s1 and s2 and s1 == s2:
        return 0.0
    return 1.0


def pairwise_matrix(
    forms: list[WordForm] | tuple[WordForm, ...],
    metric: str,
    scheme: ScoringScheme | None = None,
) -> DistanceMatrix:
    """Fill a distance matrix over same-concept forms, ordered by form ID."""
    if not forms:
        raise ValueError("need at least one form")
    concepts = {f.concept for f in forms}
    if len(concepts) != 1:
        raise ConceptMismatchError(f"forms span several concepts: {sorted(concepts)}")
    ordered = sorted(forms, key=lambda f: f.id)
    n = len(ordered)
    values = np.zeros((n, n))
    skeletons = None
    if metric == "ccm":
        skeletons = [consonant_skeleton(f.classes, 2) for f in ordered]
    for i in range(n):
        for j in range(i + 1, n):
            if metric == "ccm":
                matched = skeletons[i] and skeletons[i] == skeletons[j]
                d = 0.0 if matched else 1.0
            elif metric == "editdist":
                d = normalized_levenshtein(ordered[i].tokens, ordered[j].tokens)
            elif metric == "sca":
                d = sca_distance(ordered[i].classes, ordered[j].classes, scheme)
            else:
                raise ValueError(f"unknown metric {metric!r}")
            values[i, j] = values[j, i] = d
    return DistanceMatrix(ids=tuple(f.id for f in ordered), values=values)


def upgma_merge_trace(values: np.ndarray) -> list[tuple[int, int, float]]:
    """Full average-linkage merge sequence as (i, j, height) triples.

    i and j index the current cluster list; ties on height are broken
    by the lexicographically smallest (i, j) pair. The merged cluster
    replaces slot i and slot j is removed, mirroring how the flat cut
    below replays the trace. Cluster distances are averages over the
    original observations, maintained by the size-weighted update.
    """
    d = values.astype(float).copy()
    sizes = np.ones(d.shape[0])
    merges: list[tuple[int, int, float]] = []
    while d.shape[0] > 1:
        m = d.shape[0]
        rows, cols = np.triu_indices(m, 1)
        flat = int(np.argmin(d[rows, cols]))  # first hit = lowest (i, j)
        i, j = int(rows[flat]), int(cols[flat])
        merges.append((i, j, float(d[i, j])))
        merged_row = (sizes[i] * d[i] + sizes[j] * d[j]) / (sizes[i] + sizes[j])
        d[i, :] = merged_row
        d[:, i] = merged_row
        d[i, i] = 0.0
        sizes[i] += sizes[j]
        keep = np.arange(m) != j
        d = d[np.ix_(keep, keep)]
        sizes = sizes[keep]
    return merges


def upgma_flat_cluster(matrix: DistanceMatrix, threshold: float) -> CognatePartition:
    """Cut the UPGMA dendrogram: merges at height >= threshold are refused."""
    if not (0.0 < threshold <= 1.0):
        raise ValueError("threshold must be in (0, 1]")
    n = len(matrix.ids)
    clusters: list[list[int]] = [[i] for i in range(n)]
    for i, j, height in upgma_merge_trace(matrix.values):
        if height >= threshold:
            break
        clusters[i] = clusters[i] + clusters[j]
        del clusters[j]
    assignment: dict[int, int] = {}
    labeled = sorted(clusters, key=min)
    for label, members in enumerate(labeled, start=1):
        for idx in members:
            assignment[matrix.ids[idx]] = label
    return CognatePartition(assignment=assignment)


def skip_grams(classes: str, n: int) -> frozenset[str]:
    """All order-preserving length-n subsequences of a class string.

    Strings shorter than n yield a single gram padded to length n with
    terminal ``$`` so every word participates in the network.
    """
    if n < 2:
        raise ValueError("gram length must be >= 2")
    if len(classes) < n:
        return frozenset({classes + PAD * (n - len(classes))})
    return frozenset(
        "".join(classes[i] for i in positions)
        for positions in combinations(range(len(classes)), n)
    )


def build_bipartite(
    forms: list[WordForm] | tuple[WordForm, ...], gram_length: int
) -> BipartiteNet:
    edges = set()
    grams: set[str] = set()
    for form in forms:
        for gram in skip_grams(form.classes, gram_length):
            edges.add((form.id, gram))
            grams.add(gram)
    return BipartiteNet(
        word_nodes=tuple(sorted(f.id for f in forms)),
        gram_nodes=tuple(sorted(grams)),
        edges=frozenset(edges),
    )


def prune_grams(net: BipartiteNet, min_degree: int) -> BipartiteNet:
    """Drop gram nodes linked to fewer than min_degree words."""
    degree: dict[str, int] = {g: 0 for g in net.gram_nodes}
    for _, gram in net.edges:
        degree[gram] += 1
    kept = {g for g, d in degree.items() if d >= min_degree}
    return BipartiteNet(
        word_nodes=net.word_nodes,
        gram_nodes=tuple(sorted(kept)),
        edges=frozenset((w, g) for w, g in net.edges if g in kept),
    )


def project_words(net: BipartiteNet) -> WordGraph:
    """Monopartite word graph: edge weight = number of shared gram nodes."""
    by_gram: dict[str, list[int]] = {g: [] for g in net.gram_nodes}
    for word, gram in net.edges:
        by_gram[gram].append(word)
    graph: WordGraph = {w: {} for w in net.word_nodes}
    for members in by_gram.values():
        members.sort()
        for a, b in combinations(members, 2):
            graph[a][b] = graph[a].get(b, 0) + 1
            graph[b][a] = graph[b].get(a, 0) + 1
    return graph


def partition_components(graph: WordGraph) -> CognatePartition:
    """Connected components of the projected word graph."""
    assignment: dict[int, int] = {}
    label = 0
    for start in sorted(graph):
        if start in assignment:
            continue
        label += 1
        stack = [start]
        while stack:
            node = stack.pop()
            if node in assignment:
                continue
            assignment[node] = label
            stack.extend(n for n in graph[node] if n not in assignment)
    return CognatePartition(assignment=assignment)


def partition_labelprop(
    graph: WordGraph, rng: np.random.Generator, max_sweeps: int = 100
) -> CognatePartition:
    """Asynchronous weighted label propagation.

    Each node adopts the label with the largest total incident edge
    weight among its neighbours, ties going to the smallest label.
    Visit order is reshuffled every sweep from the supplied RNG; stops
    at a fixed point or after max_sweeps sweeps.
    """
    nodes = sorted(graph)
    labels = {node: node for node in nodes}
    for _ in range(max_sweeps):
        changed = False
        order = [nodes[i] for i in rng.permutation(len(nodes))]
        for node in order:
            neighbours = graph[node]
            if not neighbours:
                continue
            weight_by_label: dict[int, float] = {}
            for other, weight in neighbours.items():
                label = labels[other]
                weight_by_label[label] = weight_by_label.get(label, 0.0) + weight
            best = min(
                weight_by_label,
                key=lambda lab: (-weight_by_label[lab], lab),
            )
            if best != labels[node]:
                labels[node] = best
                changed = True
        if not changed:
            break
    relabel: dict[int, int] = {}
    assignment: dict[int, int] = {}
    for node in nodes:
        label = labels[node]
        if label not in relabel:
            relabel[label] = len(relabel) + 1
        assignment[node] = relabel[label]
    return CognatePartition(assignment=assignment)


def bipskip_partition(
    forms: list[WordForm] | tuple[WordForm, ...],
    gram_length: int = DEFAULT_GRAM_LENGTH,
    prune: float = DEFAULT_PRUNE,
    partitioner: str = "labelprop",
    rng: np.random.Generator | None = None,
) -> CognatePartition:
    """Skip-gram bipartite clustering of one concept slice."""
    if not (0.0 <= prune < 1.0):
        raise ValueError("prune must be in [0, 1)")
    if partitioner not in PARTITIONERS:
        raise ValueError(f"unknown partitioner {partitioner!r}")
    net = build_bipartite(forms, gram_length)
    if prune > 0:
        net = prune_grams(net, math.ceil(prune * len(forms)))
    graph = project_words(net)
    if partitioner == "components":
        return partition_components(graph)
    if rng is None:
        rng = np.random.default_rng(0)
    return partition_labelprop(graph, rng)


def _detect_concept(
    forms: tuple[WordForm, ...],
    method: str,
    threshold: float | None,
    gram_length: int,
    prune: float,
    partitioner: str,
    scheme: ScoringScheme | None,
    seed_seq: tuple[int, ...],
) -> CognatePartition:
    if method == "bipskip":
        rng = np.random.default_rng(np.random.SeedSequence(seed_seq))
        return bipskip_partition(forms, gram_length, prune, partitioner, rng)
    matrix = pairwise_matrix(forms, method, scheme)
    return upgma_flat_cluster(matrix, threshold or DEFAULT_THRESHOLDS[method])


def detect(
    wordlist: Wordlist,
    method: str = "bipskip",
    threshold: float | None = None,
    gram_length: int = DEFAULT_GRAM_LENGTH,
    prune: float = DEFAULT_PRUNE,
    partitioner: str = "labelprop",
    scheme: ScoringScheme | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> CognatePartition:
    """Cluster every concept slice; cluster IDs are globally unique.

    Concept slices are independent, so with jobs > 1 they run in a
    process pool; each slice derives its RNG from (seed, concept index)
    so parallel and serial runs produce identical partitions.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {METHODS}")
    concepts = wordlist.concepts()
    tasks = [
        (
            wordlist.forms_for_concept(concept),
            method,
            threshold,
            gram_length,
            prune,
            partitioner,
            scheme,
            (seed, idx),
        )
        for idx, concept in enumerate(concepts)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            partials = list(pool.map(_detect_concept_task, tasks))
    else:
        partials = [_detect_concept_task(task) for task in tasks]
    assignment: dict[int, int] = {}
    next_id = 0
    for forms, partial in zip((t[0] for t in tasks), partials):
        relabel: dict[int, int] = {}
        for form in sorted(forms, key=lambda f: f.id):
            local = partial.assignment[form.id]
            if local not in relabel:
                next_id += 1
                relabel[local] = next_id
            assignment[form.id] = relabel[local]
    return CognatePartition(assignment=assignment)


def _detect_concept_task(task) -> CognatePartition:
    return _detect_concept(*task)


def gold_partition(wordlist: Wordlist) -> CognatePartition:
    """Partition from the COGID annotations; requires full coverage."""
    assignment = {}
    for form in wordlist.forms:
        if form.gold_cogid is None:
            raise ValueError(f"form {form.id} has no gold cognate ID")
        assignment[form.id] = form.gold_cogid
    return CognatePartition(assignment=assignment)
