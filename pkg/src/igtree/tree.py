"""Information-gain decision-tree learner over symbolic feature vectors.

The learner compresses a multiset of fixed-arity labelled instances into a
tree whose levels follow one global feature ordering: features are ranked
once, by information gain on the whole training set, and every node at depth
d splits on the d-th ranked feature.  A path stops growing as soon as the
instances it covers share a single class, so common regularities compress
into short paths while exceptions extend deeper.

Every node stores the most frequent class of the instances it covers.
Classification walks arcs in the ranked feature order and falls back on the
default class of the deepest matched node when a leaf is reached early or an
arc for the query's feature value does not exist.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, TextIO

PAD = "_"  # reserved padding token; a valid feature value everywhere

# Equal-gain tolerance: gains are quantised to this step before ranking so
# that float noise cannot flip the ordering of genuinely tied features.
GAIN_EPS = 1e-9

# Per-node storage cost (bytes) used for memory estimates in reports.
NODE_BYTES = 7

_FORMAT_MAGIC = "igtree"
_FORMAT_VERSION = 1


def _check_token(token: str) -> str:
    if "\t" in token or "\n" in token:
        raise ValueError(f"token may not contain tab or newline: {token!r}")
    return token


def entropy(counts: Mapping[str, int]) -> float:
    """Shannon entropy in bits of a class-count distribution.

    Zero counts contribute nothing (0 * log 0 is taken as 0).  Raises
    ValueError on an empty distribution.
    """
    total = 0
    for c in counts.values():
        if c < 0:
            raise ValueError("negative count in distribution")
        total += c
    if total <= 0:
        raise ValueError("empty distribution")
    h = 0.0
    for key in sorted(counts):
        c = counts[key]
        if c == 0:
            continue
        p = c / total
        h -= p * math.log2(p)
    return h


@dataclass(frozen=True)
class LabeledInstance:
    """A feature vector with its class and a multiplicity count."""

    features: tuple[str, ...]
    cls: str
    count: int = 1

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("instance count must be >= 1")


class InstanceBase:
    """Multiset of fixed-arity labelled instances.

    Duplicate (features, class) pairs are aggregated into multiplicity
    counts rather than deduplicated, so class frequencies reflect how often
    each window actually occurs.
    """

    def __init__(self, arity: int):
        if arity < 1:
            raise ValueError("arity must be >= 1")
        self.arity = arity
        self._counts: dict[tuple[tuple[str, ...], str], int] = {}
        self.class_counts: Counter[str] = Counter()
        self.value_alphabets: tuple[set[str], ...] = tuple(set() for _ in range(arity))

    @classmethod
    def from_pairs(cls, arity: int, pairs: Iterable[tuple[Sequence[str], str]]) -> "InstanceBase":
        base = cls(arity)
        for features, label in pairs:
            base.add(features, label)
        return base

    def add(self, features: Sequence[str], cls: str, count: int = 1) -> None:
        if len(features) != self.arity:
            raise ValueError(f"expected {self.arity} features, got {len(features)}")
        if count < 1:
            raise ValueError("count must be >= 1")
        key = (tuple(features), cls)
        self._counts[key] = self._counts.get(key, 0) + count
        self.class_counts[cls] += count
        for f, value in enumerate(key[0]):
            self.value_alphabets[f].add(value)

    @property
    def total(self) -> int:
        """Number of instances counting multiplicities."""
        return sum(self._counts.values())

    @property
    def distinct(self) -> int:
        return len(self._counts)

    @property
    def class_alphabet(self) -> set[str]:
        return set(self.class_counts)

    def instances(self) -> Iterator[LabeledInstance]:
        for (features, cls), count in self._counts.items():
            yield LabeledInstance(features, cls, count)

    def items(self) -> Iterator[tuple[tuple[str, ...], str, int]]:
        for (features, cls), count in self._counts.items():
            yield features, cls, count

    def __len__(self) -> int:
        return len(self._counts)


def feature_entropy(base: InstanceBase, f: int) -> float:
    """Weighted average class entropy of the base split by feature f's values."""
    if not 0 <= f < base.arity:
        raise ValueError(f"feature index {f} out of range for arity {base.arity}")
    total = base.total
    if total == 0:
        raise ValueError("empty instance base")
    cells: dict[str, Counter[str]] = defaultdict(Counter)
    for features, cls, count in base.items():
        cells[features[f]][cls] += count
    h = 0.0
    for value in sorted(cells):
        cell = cells[value]
        h += entropy(cell) * (sum(cell.values()) / total)
    return h


def information_gain(base: InstanceBase, f: int) -> float:
    """Reduction in class entropy from knowing feature f's value."""
    return entropy(base.class_counts) - feature_entropy(base, f)


@dataclass(frozen=True)
class FeatureOrder:
    """A gain-descending permutation of feature indices.

    ``gains[i]`` is the information gain of original feature i; ``order``
    lists feature indices from most to least informative, ties broken by
    ascending feature index.
    """

    order: tuple[int, ...]
    gains: tuple[float, ...]

    def __post_init__(self) -> None:
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("order must be a permutation of feature indices")
        if len(self.gains) != len(self.order):
            raise ValueError("gains and order must have equal length")

    @property
    def arity(self) -> int:
        return len(self.order)


def compute_feature_order(base: InstanceBase) -> FeatureOrder:
    """Rank all features by information gain on the given training set."""
    if base.total == 0:
        raise ValueError("empty instance base")
    gains = tuple(information_gain(base, f) for f in range(base.arity))
    order = tuple(sorted(range(base.arity), key=lambda f: (-round(gains[f] / GAIN_EPS), f)))
    return FeatureOrder(order=order, gains=gains)


def majority_class(counts: Mapping[str, int]) -> str:
    """Most frequent class; ties resolved to the lexicographically smallest token."""
    if not counts:
        raise ValueError("empty distribution")
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


class IgTreeNode:
    """One tree node: a default class plus value-labelled arcs to children."""

    __slots__ = ("default_class", "arcs", "depth")

    def __init__(self, default_class: str, depth: int):
        self.default_class = default_class
        self.depth = depth
        self.arcs: dict[str, IgTreeNode] = {}

    @property
    def is_leaf(self) -> bool:
        return not self.arcs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IgTreeNode):
            return NotImplemented
        return (
            self.default_class == other.default_class
            and self.depth == other.depth
            and self.arcs == other.arcs
        )

    def __repr__(self) -> str:
        return f"IgTreeNode({self.default_class!r}, depth={self.depth}, arcs={len(self.arcs)})"


@dataclass
class IgTree:
    """An immutable trained tree; safe for concurrent read-only classification."""

    root: IgTreeNode
    feature_order: FeatureOrder
    node_count: int
    leaf_count: int

    @property
    def arity(self) -> int:
        return self.feature_order.arity

    def classify(self, features: Sequence[str]) -> str:
        """Class for a feature vector, falling back on node defaults.

        Arcs are matched in ranked feature order.  Reaching a leaf yields its
        class; a missing arc yields the default class of the current node.
        Unseen feature values are therefore always classifiable.
        """
        if len(features) != self.arity:
            raise ValueError(f"expected {self.arity} features, got {len(features)}")
        node = self.root
        for f in self.feature_order.order:
            if node.is_leaf:
                return node.default_class
            child = node.arcs.get(features[f])
            if child is None:
                return node.default_class
            node = child
        return node.default_class

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IgTree):
            return NotImplemented
        return self.feature_order == other.feature_order and self.root == other.root


def build_tree(base: InstanceBase, order: FeatureOrder | None = None) -> IgTree:
    """Compress an instance base into a tree along a global feature order.

    Construction recurses over instance subsets: each node takes the
    majority class of its subset as default; a subset that is single-class,
    or that has consumed every feature, becomes a leaf; otherwise the subset
    is partitioned by the values of the next ranked feature, one arc per
    value present.  No arcs are created for values absent from the subset.
    """
    if base.total == 0:
        raise ValueError("empty instance base")
    if order is None:
        order = compute_feature_order(base)
    if order.arity != base.arity:
        raise ValueError(f"feature order arity {order.arity} != base arity {base.arity}")

    ranked = order.order
    arity = base.arity
    counts = {"nodes": 0, "leaves": 0}

    def grow(items: list[tuple[tuple[str, ...], str, int]], depth: int) -> IgTreeNode:
        dist: Counter[str] = Counter()
        for _, cls, count in items:
            dist[cls] += count
        node = IgTreeNode(majority_class(dist), depth)
        counts["nodes"] += 1
        if len(dist) > 1 and depth < arity:
            f = ranked[depth]
            groups: dict[str, list[tuple[tuple[str, ...], str, int]]] = defaultdict(list)
            for item in items:
                groups[item[0][f]].append(item)
            for value in sorted(groups):
                node.arcs[value] = grow(groups[value], depth + 1)
        else:
            counts["leaves"] += 1
        return node

    root = grow(list(base.items()), 0)
    return IgTree(root=root, feature_order=order, node_count=counts["nodes"], leaf_count=counts["leaves"])


@dataclass(frozen=True)
class TreeStats:
    node_count: int
    leaf_count: int
    depth_histogram: dict[int, int]
    bytes_estimate: int


def tree_stats(tree: IgTree) -> TreeStats:
    """Exact reachable-node statistics plus a flat per-node memory estimate."""
    nodes = 0
    leaves = 0
    histogram: dict[int, int] = {}
    stack = [tree.root]
    while stack:
        node = stack.pop()
        nodes += 1
        histogram[node.depth] = histogram.get(node.depth, 0) + 1
        if node.is_leaf:
            leaves += 1
        else:
            stack.extend(node.arcs.values())
    return TreeStats(
        node_count=nodes,
        leaf_count=leaves,
        depth_histogram=dict(sorted(histogram.items())),
        bytes_estimate=nodes * NODE_BYTES,
    )


def dump_tree(tree: IgTree, fp: TextIO) -> None:
    """Write a tree in the line-oriented text format.

    After a small header (format version, arity, feature order, gains, node
    count) each node occupies one line: depth, incoming arc value (empty for
    the root), default class, and a leaf flag, tab-separated.  Nodes appear
    in preorder with children in sorted arc-value order, so serialising a
    parsed dump reproduces it byte for byte.
    """
    fp.write(f"{_FORMAT_MAGIC} {_FORMAT_VERSION}\n")
    fp.write(f"arity {tree.arity}\n")
    fp.write("order " + " ".join(str(i) for i in tree.feature_order.order) + "\n")
    fp.write("gains " + " ".join(repr(g) for g in tree.feature_order.gains) + "\n")
    fp.write(f"nodes {tree.node_count}\n")

    def emit(node: IgTreeNode, arc: str) -> None:
        _check_token(node.default_class)
        fp.write(f"{node.depth}\t{arc}\t{node.default_class}\t{int(node.is_leaf)}\n")
        for value, child in node.arcs.items():
            _check_token(value)
            emit(child, value)

    emit(tree.root, "")


def dumps_tree(tree: IgTree) -> str:
    import io

    buf = io.StringIO()
    dump_tree(tree, buf)
    return buf.getvalue()


def _parse_header_line(line: str, key: str) -> str:
    if not line.startswith(key + " "):
        raise ValueError(f"malformed tree header: expected {key!r} line, got {line!r}")
    return line[len(key) + 1 :]


def load_tree(fp: TextIO) -> IgTree:
    """Parse a tree from the text format written by :func:`dump_tree`."""
    magic = fp.readline().rstrip("\n").split(" ")
    if magic[0] != _FORMAT_MAGIC:
        raise ValueError(f"not a tree file (magic {magic[0]!r})")
    if magic[1:] != [str(_FORMAT_VERSION)]:
        raise ValueError(f"unsupported tree format version {magic[1:]}")
    arity = int(_parse_header_line(fp.readline().rstrip("\n"), "arity"))
    order = tuple(int(s) for s in _parse_header_line(fp.readline().rstrip("\n"), "order").split())
    gains = tuple(float(s) for s in _parse_header_line(fp.readline().rstrip("\n"), "gains").split())
    n_nodes = int(_parse_header_line(fp.readline().rstrip("\n"), "nodes"))
    feature_order = FeatureOrder(order=order, gains=gains)
    if feature_order.arity != arity:
        raise ValueError("tree header arity disagrees with feature order")

    root: IgTreeNode | None = None
    stack: list[IgTreeNode] = []
    leaves = 0
    for _ in range(n_nodes):
        line = fp.readline()
        if not line:
            raise ValueError("truncated tree file")
        depth_s, arc, default_class, leaf_flag = line.rstrip("\n").split("\t")
        depth = int(depth_s)
        node = IgTreeNode(default_class, depth)
        if leaf_flag == "1":
            leaves += 1
        if depth == 0:
            if root is not None:
                raise ValueError("multiple roots in tree file")
            root = node
        else:
            while stack and stack[-1].depth >= depth:
                stack.pop()
            if not stack or stack[-1].depth != depth - 1:
                raise ValueError(f"node at depth {depth} has no parent")
            stack[-1].arcs[arc] = node
        stack.append(node)
    if root is None:
        raise ValueError("empty tree file")
    tree = IgTree(root=root, feature_order=feature_order, node_count=n_nodes, leaf_count=leaves)
    stats = tree_stats(tree)
    if stats.node_count != n_nodes or stats.leaf_count != leaves:
        raise ValueError("tree file node counts disagree with structure")
    return tree


def loads_tree(text: str) -> IgTree:
    import io

    return load_tree(io.StringIO(text))
