"""Gain-ratio decision tree with an explicit absent branch for MISSING numerics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from ..features import AUTOMATIC, USER_ACTION, FeatureVector
from .dataset import Dataset, category_value
from .splits import Split, binary_entropy, categorical_split, numeric_split

DEFAULT_MIN_LEAF = 5
DEFAULT_MIN_GAIN = 1e-4


@dataclass(frozen=True)
class Leaf:
    label: str
    probability: float
    n: int = 0

    @property
    def p_user(self) -> float:
        return self.probability if self.label == USER_ACTION else 1.0 - self.probability


@dataclass(frozen=True)
class NumericSplit:
    feature: str
    threshold: float
    le: Node
    gt: Node
    absent: Node


@dataclass(frozen=True)
class CategoricalSplit:
    feature: str
    branches: dict = field(hash=False)
    default: Node = None  # type: ignore[assignment]


Node = Union[Leaf, NumericSplit, CategoricalSplit]


@dataclass(frozen=True)
class TreeModel:
    root: Node
    feature_names: tuple[str, ...]
    params: dict = field(default_factory=dict, hash=False)

    def predict(self, vector) -> tuple[str, float]:
        return predict(self, vector)


def make_leaf(n_pos: int, n: int) -> Leaf:
    """Majority leaf; ties (and empty nodes) go to automatic."""
    if n == 0:
        return Leaf(AUTOMATIC, 1.0, 0)
    if n_pos * 2 > n:
        return Leaf(USER_ACTION, n_pos / n, n)
    return Leaf(AUTOMATIC, (n - n_pos) / n, n)


def _choose(splits: list[Split], allow_zero_gain: bool) -> Split | None:
    """C4.5 choice: best gain ratio among splits with at least average gain."""
    usable = [s for s in splits if s.gain > 0 or (allow_zero_gain and s.gain > -1e-12)]
    if not usable:
        return None
    avg = sum(s.gain for s in usable) / len(usable)
    # tolerance keeps float noise from excluding the max-gain split
    eligible = [s for s in usable if s.gain >= avg - 1e-12]
    return max(eligible, key=lambda s: (s.gain_ratio, s.gain, -s.feature))


class _Builder:
    def __init__(self, data: Dataset, min_leaf: int, min_gain: float, max_features: int | None,
                 rng: np.random.Generator | None, max_depth: int | None):
        self.data = data
        self.X = data.X
        self.y = data.y.astype(np.int8)
        self.min_leaf = max(1, int(min_leaf))
        self.min_gain = float(min_gain)
        self.max_features = max_features
        self.rng = rng
        self.max_depth = max_depth
        self.n_features = self.X.shape[1]

    def candidate_features(self) -> np.ndarray:
        d = self.n_features
        if self.max_features is None or self.max_features >= d:
            return np.arange(d)
        return np.sort(self.rng.choice(d, size=self.max_features, replace=False))

    def build(self, idx: np.ndarray, depth: int = 0) -> Node:
        y = self.y[idx]
        n = idx.shape[0]
        n_pos = int(y.sum())
        leaf = make_leaf(n_pos, n)
        if n < self.min_leaf or n_pos == 0 or n_pos == n:
            return leaf
        if self.max_depth is not None and depth >= self.max_depth:
            return leaf
        parent_h = float(binary_entropy(n_pos, n))
        splits = []
        for j in self.candidate_features():
            col = self.X[idx, j]
            if self.data.kinds[j] == "numeric":
                s = numeric_split(col, y, parent_h, int(j), self.min_leaf)
            else:
                s = categorical_split(col, y, parent_h, int(j), self.min_leaf)
            if s is not None:
                splits.append(s)
        best = _choose(splits, self.min_gain <= 0)
        if best is None or best.gain < self.min_gain - 1e-12:
            return leaf
        j = best.feature
        name = self.data.names[j]
        col = self.X[idx, j]
        if self.data.kinds[j] == "numeric":
            missing = np.isnan(col)
            with np.errstate(invalid="ignore"):
                le_mask = col <= best.threshold
                gt_mask = col > best.threshold
            return NumericSplit(
                name, best.threshold,
                le=self._child(idx[le_mask], leaf, depth),
                gt=self._child(idx[gt_mask], leaf, depth),
                absent=self._child(idx[missing], leaf, depth),
            )
        vocab = self.data.vocabs[j]
        codes = col.astype(np.int64)
        branches = {}
        for code in best.codes:
            branches[vocab[int(code)]] = self._child(idx[codes == code], leaf, depth)
        return CategoricalSplit(name, branches, default=Leaf(leaf.label, leaf.probability, 0))

    def _child(self, idx: np.ndarray, parent_leaf: Leaf, depth: int) -> Node:
        if idx.shape[0] == 0:
            # unseen region inherits the parent's class distribution
            return Leaf(parent_leaf.label, parent_leaf.probability, 0)
        return self.build(idx, depth + 1)


def train_tree(data: Dataset, min_leaf: int = DEFAULT_MIN_LEAF, min_gain: float = DEFAULT_MIN_GAIN,
               max_features: int | None = None, seed: int | None = None,
               max_depth: int | None = None) -> TreeModel:
    """Grow a tree by greedy gain-ratio splitting.

    A node becomes a leaf when it is pure, holds fewer than ``min_leaf``
    examples, or its best split gains less than ``min_gain`` bits. With
    ``max_features`` set, each split looks at a random feature subset drawn
    from ``seed``.
    """
    if data.y is None:
        raise ValueError("training data must be labeled")
    if data.X.shape[1] == 0:
        raise ValueError("no features enabled")
    if len(data) == 0:
        raise ValueError("no training examples")
    rng = np.random.default_rng(seed) if max_features is not None else None
    builder = _Builder(data, min_leaf, min_gain, max_features, rng, max_depth)
    root = builder.build(np.arange(len(data)))
    params = {"min_leaf": int(min_leaf), "min_gain": float(min_gain)}
    if max_features is not None:
        params["max_features"] = int(max_features)
    if max_depth is not None:
        params["max_depth"] = int(max_depth)
    return TreeModel(root, tuple(data.names), params)


# --------------------------------------------------------------------------
# Prediction
# --------------------------------------------------------------------------

def _lookup(vector, name):
    if isinstance(vector, Mapping):
        return vector.get(name)
    return getattr(vector, name)


def route(node: Node, vector) -> Leaf:
    while not isinstance(node, Leaf):
        value = _lookup(vector, node.feature)
        if isinstance(node, NumericSplit):
            if value is None or (isinstance(value, float) and np.isnan(value)):
                node = node.absent
            elif value <= node.threshold:
                node = node.le
            else:
                node = node.gt
        else:
            node = node.branches.get(category_value(value), node.default)
    return node


def predict(model: TreeModel, vector: FeatureVector | Mapping) -> tuple[str, float]:
    """Class and its probability for one vector."""
    leaf = route(model.root, vector)
    return leaf.label, leaf.probability


def predict_p_user(root: Node, data: Dataset) -> np.ndarray:
    """Leaf user-action probability for every row of ``data``."""
    out = np.empty(len(data), dtype=np.float64)
    col_of = {name: j for j, name in enumerate(data.names)}
    code_maps = [None if v is None else {s: i for i, s in enumerate(v)} for v in data.vocabs]
    stack = [(root, np.arange(len(data)))]
    while stack:
        node, idx = stack.pop()
        if idx.shape[0] == 0:
            continue
        if isinstance(node, Leaf):
            out[idx] = node.p_user
            continue
        j = col_of[node.feature]
        col = data.X[idx, j]
        if isinstance(node, NumericSplit):
            if data.kinds[j] != "numeric":
                raise ValueError(f"feature {node.feature} is not numeric in this data")
            missing = np.isnan(col)
            with np.errstate(invalid="ignore"):
                stack.append((node.le, idx[col <= node.threshold]))
                stack.append((node.gt, idx[col > node.threshold]))
            stack.append((node.absent, idx[missing]))
        else:
            codes = col.astype(np.int64)
            taken = np.zeros(idx.shape[0], dtype=bool)
            for value, child in node.branches.items():
                code = code_maps[j].get(value)
                if code is None:
                    continue
                mask = codes == code
                taken |= mask
                stack.append((child, idx[mask]))
            stack.append((node.default, idx[~taken]))
    return out


def predict_dataset(model: TreeModel, data: Dataset) -> np.ndarray:
    """1 for user-action, 0 for automatic, per row."""
    p = predict_p_user(model.root, data)
    return (p > 0.5).astype(np.int8)


def iter_nodes(node: Node):
    yield node
    if isinstance(node, NumericSplit):
        for child in (node.le, node.gt, node.absent):
            yield from iter_nodes(child)
    elif isinstance(node, CategoricalSplit):
        for child in node.branches.values():
            yield from iter_nodes(child)
        yield from iter_nodes(node.default)


def tree_depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    if isinstance(node, NumericSplit):
        children = (node.le, node.gt, node.absent)
    else:
        children = (*node.branches.values(), node.default)
    return 1 + max(tree_depth(c) for c in children)

