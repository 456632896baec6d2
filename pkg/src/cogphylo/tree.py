"""Rooted phylogenetic trees: Newick I/O, topology utilities, consensus.

Trees are rooted and usually binary; polytomies are allowed so that
majority-rule consensus trees and expert gold trees can be represented.
Branch lengths live on the edge above each node (the root has none).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class NewickParseError(ValueError):
    """Malformed Newick input; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


_LABEL_TERMINATORS = set("():,;[]'")


@dataclass
class Node:
    label: str | None = None
    length: float | None = None
    support: float | None = None
    children: list["Node"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def copy(self) -> "Node":
        return Node(
            label=self.label,
            length=self.length,
            support=self.support,
            children=[c.copy() for c in self.children],
        )


@dataclass
class Tree:
    root: Node

    def copy(self) -> "Tree":
        return Tree(root=self.root.copy())

    def postorder(self) -> Iterator[Node]:
        stack = [(self.root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded or node.is_leaf:
                yield node
            else:
                stack.append((node, True))
                for child in reversed(node.children):
                    stack.append((child, False))

    def preorder(self) -> Iterator[Node]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> list[Node]:
        return [n for n in self.postorder() if n.is_leaf]

    def leaf_names(self) -> list[str]:
        return sorted(n.label or "" for n in self.leaves())

    @property
    def n_leaves(self) -> int:
        return len(self.leaves())

    def is_binary(self) -> bool:
        return all(
            len(n.children) in (0, 2) for n in self.postorder()
        )

    def parents(self) -> dict[int, Node]:
        """Map id(child) -> parent node for the current structure."""
        out: dict[int, Node] = {}
        for node in self.preorder():
            for child in node.children:
                out[id(child)] = node
        return out

    def find(self, label: str) -> Node:
        for node in self.postorder():
            if node.label == label:
                return node
        raise KeyError(f"no node labeled {label!r}")

    def canonicalize(self) -> "Tree":
        """Sort children recursively by smallest descendant leaf label."""

        def rebuild(node: Node) -> tuple[Node, str]:
            if node.is_leaf:
                return node.copy(), node.label or ""
            built = [rebuild(c) for c in node.children]
            built.sort(key=lambda pair: pair[1])
            clone = Node(
                label=node.label,
                length=node.length,
                support=node.support,
                children=[b[0] for b in built],
            )
            return clone, built[0][1]

        return Tree(root=rebuild(self.root)[0])

    def newick(self, supports: bool = False) -> str:
        return emit_newick(self, supports=supports)


def topology_key(tree: Tree):
    """Hashable, branch-length-free key identifying the rooted topology."""

    def key(node: Node):
        if node.is_leaf:
            return node.label
        return tuple(sorted((key(c) for c in node.children), key=repr))

    return key(tree.root)


def topology_count(n: int) -> int:
    """Number of rooted binary topologies on n labeled leaves."""
    if n < 2:
        raise ValueError("need at least two leaves")
    return math.factorial(2 * n - 3) // (2 ** (n - 2) * math.factorial(n - 2))


def _parse_label(text: str, pos: int) -> tuple[str, int]:
    if pos < len(text) and text[pos] == "'":
        end = pos + 1
        chunks = []
        while True:
            if end >= len(text):
                raise NewickParseError("unterminated quoted label", pos)
            if text[end] == "'":
                if end + 1 < len(text) and text[end + 1] == "'":
                    chunks.append("'")
                    end += 2
                    continue
                return "".join(chunks), end + 1
            chunks.append(text[end])
            end += 1
    end = pos
    while end < len(text) and text[end] not in _LABEL_TERMINATORS and not text[end].isspace():
        end += 1
    return text[pos:end], end


def parse_newick(text: str) -> Tree:
    """Parse one Newick tree; labels, branch lengths and supports optional.

    Internal-node labels that parse as floats in [0, 1] are stored as
    edge supports, anything else as plain labels.
    """
    text = text.strip()
    if not text:
        raise NewickParseError("empty input", 0)
    pos = 0

    def skip_ws(p: int) -> int:
        while p < len(text) and text[p].isspace():
            p += 1
        return p

    def parse_node(p: int) -> tuple[Node, int]:
        p = skip_ws(p)
        node = Node()
        if p < len(text) and text[p] == "(":
            p += 1
            while True:
                child, p = parse_node(p)
                node.children.append(child)
                p = skip_ws(p)
                if p >= len(text):
                    raise NewickParseError("unbalanced parenthesis", p)
                if text[p] == ",":
                    p += 1
                    continue
                if text[p] == ")":
                    p += 1
                    break
                raise NewickParseError(f"unexpected character {text[p]!r}", p)
        p = skip_ws(p)
        label, p = _parse_label(text, p)
        if label:
            if node.is_leaf:
                node.label = label
            else:
                try:
                    value = float(label)
                except ValueError:
                    node.label = label
                else:
                    if 0.0 <= value <= 1.0:
                        node.support = value
                    else:
                        node.label = label
        p = skip_ws(p)
        if p < len(text) and text[p] == ":":
            p += 1
            start = p
            while p < len(text) and text[p] in "0123456789+-.eE":
                p += 1
            try:
                node.length = float(text[start:p])
            except ValueError:
                raise NewickParseError("invalid branch length", start)
        return node, p

    root, pos = parse_node(pos)
    pos = skip_ws(pos)
    if pos >= len(text) or text[pos] != ";":
        raise NewickParseError("expected ';'", pos)
    pos = skip_ws(pos + 1)
    if pos != len(text):
        raise NewickParseError("trailing content after ';'", pos)
    if root.is_leaf and root.label is None:
        raise NewickParseError("tree has no content", 0)
    return Tree(root=root)


def _format_length(value: float) -> str:
    return repr(float(value))


def _emit_node(node: Node, supports: bool) -> str:
    if node.is_leaf:
        out = node.label or ""
    else:
        inner = ",".join(_emit_node(c, supports) for c in node.children)
        out = f"({inner})"
        if node.label:
            out += node.label
        elif supports and node.support is not None:
            out += f"{node.support:.2f}"
    if node.length is not None:
        out += f":{_format_length(node.length)}"
    return out


def emit_newick(tree: Tree, supports: bool = False) -> str:
    """Serialize a tree; internal supports become node labels when asked."""
    return _emit_node(tree.root, supports) + ";"


def random_topology(labels: list[str], rng: np.random.Generator) -> Tree:
    """Uniform random rooted binary topology over the given labels.

    Built by sequential joins: each new leaf attaches to an attachment
    point chosen uniformly among all current edges plus the root, which
    makes every topology equally likely.
    """
    if len(labels) < 2:
        raise ValueError("need at least two labels")
    labels = list(labels)
    root = Node(children=[Node(label=labels[0]), Node(label=labels[1])])
    tree = Tree(root=root)
    for label in labels[2:]:
        nodes = list(tree.preorder())
        target = nodes[int(rng.integers(len(nodes)))]
        joined = Node(children=[target, Node(label=label)])
        if target is tree.root:
            tree = Tree(root=joined)
        else:
            parent = tree.parents()[id(target)]
            parent.children[parent.children.index(target)] = joined
    return tree


def enumerate_topologies(labels: list[str], branch_length: float = 1.0) -> list[Tree]:
    """All rooted binary topologies on the labels, every edge at branch_length."""
    if len(labels) < 2:
        raise ValueError("need at least two labels")

    def grow(trees: list[Tree], label: str) -> list[Tree]:
        grown = []
        for tree in trees:
            for index in range(len(list(tree.preorder()))):
                clone = tree.copy()
                target = list(clone.preorder())[index]
                at_root = target is clone.root
                joined = Node(
                    length=None if at_root else target.length,
                    children=[target, Node(label=label, length=branch_length)],
                )
                target.length = branch_length
                if at_root:
                    clone = Tree(root=joined)
                else:
                    parent = clone.parents()[id(target)]
                    parent.children[parent.children.index(target)] = joined
                grown.append(clone)
        return grown

    first = Tree(
        root=Node(
            children=[
                Node(label=labels[0], length=branch_length),
                Node(label=labels[1], length=branch_length),
            ]
        )
    )
    trees = [first]
    for label in labels[2:]:
        trees = grow(trees, label)
    return trees


def clades(tree: Tree) -> dict[frozenset[str], Node]:
    """Leaf-name set below every node, including trivial leaf clades."""
    out: dict[frozenset[str], Node] = {}
    below: dict[int, frozenset[str]] = {}
    for node in tree.postorder():
        if node.is_leaf:
            names = frozenset({node.label or ""})
        else:
            names = frozenset().union(*(below[id(c)] for c in node.children))
        below[id(node)] = names
        out[names] = node
    return out


def reroot(tree: Tree, label: str, dist: float | None = None) -> Tree:
    """Place a new root on the edge above the named node.

    ``dist`` is the distance from the named node to the new root and
    defaults to half the edge length. The old root vanishes, its two
    incident edges merging into one.
    """
    tree = tree.copy()
    target = tree.find(label)
    if target is tree.root:
        raise ValueError("cannot reroot above the root itself")
    parents = tree.parents()
    if target.length is None:
        raise ValueError(f"node {label!r} has no branch length")
    if dist is None:
        dist = target.length / 2.0
    if not (0.0 <= dist <= target.length):
        raise ValueError("dist outside the target edge")

    def view_upward(node: Node, came_from: Node) -> tuple[Node, float]:
        """Tree seen from `node` looking away from came_from.

        Returns the rebuilt subtree (its .length left for the caller)
        plus the extra length absorbed when the old degree-two root is
        suppressed and its two incident edges merge.
        """
        rest = [c for c in node.children if c is not came_from]
        parent = parents.get(id(node))
        if parent is None:
            if len(rest) == 1:
                return rest[0], rest[0].length or 0.0
            return Node(label=node.label, children=rest), 0.0
        upward, extra = view_upward(parent, node)
        upward.length = node.length + extra
        return Node(label=node.label, children=rest + [upward]), 0.0

    parent = parents[id(target)]
    upper, extra = view_upward(parent, target)
    upper.length = (target.length - dist) + extra
    target.length = dist
    return Tree(root=Node(children=[target, upper]))


def majority_rule_consensus(trees: list[Tree]) -> Tree:
    """Strict-majority consensus with clade supports and mean branch lengths."""
    if not trees:
        raise ValueError("no trees to summarize")
    leaf_set = frozenset(trees[0].leaf_names())
    counts: dict[frozenset[str], int] = {}
    lengths: dict[frozenset[str], list[float]] = {}
    for tree in trees:
        if frozenset(tree.leaf_names()) != leaf_set:
            raise ValueError("consensus input trees have different leaf sets")
        for names, node in clades(tree).items():
            counts[names] = counts.get(names, 0) + 1
            if node.length is not None:
                lengths.setdefault(names, []).append(node.length)
    total = len(trees)
    kept = {c for c, k in counts.items() if k * 2 > total}
    kept.add(leaf_set)
    kept.update(frozenset({name}) for name in leaf_set)
    ordered = sorted(kept, key=lambda c: (-len(c), sorted(c)))

    nodes: dict[frozenset[str], Node] = {}
    for names in ordered:
        node = Node(label=min(names) if len(names) == 1 else None)
        node.support = counts.get(names, 0) / total
        if names in lengths:
            node.length = float(np.mean(lengths[names]))
        nodes[names] = node
    for names in ordered[1:]:
        parent = min(
            (c for c in ordered if len(c) > len(names) and names < c),
            key=len,
        )
        nodes[parent].children.append(nodes[names])
    root = nodes[ordered[0]]
    root.length = None
    return Tree(root=root)
