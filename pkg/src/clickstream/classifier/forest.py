"""Random forest of gain-ratio trees: bootstrap rows, random features per split."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..features import AUTOMATIC, USER_ACTION, FeatureVector
from .dataset import Dataset
from .tree import DEFAULT_MIN_GAIN, DEFAULT_MIN_LEAF, TreeModel, predict_p_user, route, train_tree

DEFAULT_N_TREES = 101


def default_subset_size(n_features: int) -> int:
    return int(math.log2(n_features)) + 1 if n_features > 0 else 0


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeModel, ...]
    feature_names: tuple[str, ...]
    params: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if not self.trees:
            raise ValueError("a forest needs at least one tree")

    def predict(self, vector) -> tuple[str, float]:
        return predict_forest(self, vector)


def _grow(args) -> TreeModel:
    data, seed_seq, bootstrap, subset, min_leaf, min_gain = args
    rng = np.random.default_rng(seed_seq)
    if bootstrap:
        rows = rng.integers(0, len(data), size=len(data))
        data = data.subset(rows)
    tree_seed = int(rng.integers(0, 2**63 - 1))
    return train_tree(data, min_leaf=min_leaf, min_gain=min_gain, max_features=subset, seed=tree_seed)


def train_forest(data: Dataset, n_trees: int = DEFAULT_N_TREES, feature_subset_size: int | None = None,
                 seed: int = 0, bootstrap: bool = True, min_leaf: int = DEFAULT_MIN_LEAF,
                 min_gain: float = DEFAULT_MIN_GAIN, jobs: int = 1) -> ForestModel:
    """Train ``n_trees`` trees, each on a bootstrap resample (unless disabled).

    ``feature_subset_size`` features are drawn afresh at every split; the
    default is ``floor(log2(d)) + 1``. Setting it to ``d`` with
    ``bootstrap=False`` and one tree reproduces :func:`train_tree`.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if data.y is None:
        raise ValueError("training data must be labeled")
    d = data.X.shape[1]
    if d == 0:
        raise ValueError("no features enabled")
    subset = default_subset_size(d) if feature_subset_size is None else int(feature_subset_size)
    if not 1 <= subset <= d:
        raise ValueError(f"feature_subset_size must be in [1, {d}]")
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    max_features = None if subset >= d else subset
    jobs_args = [(data, s, bootstrap, max_features, min_leaf, min_gain) for s in seeds]
    if jobs > 1 and n_trees > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(_grow, jobs_args))
    else:
        trees = [_grow(a) for a in jobs_args]
    params = {"n_trees": n_trees, "feature_subset_size": subset, "seed": seed,
              "bootstrap": bool(bootstrap), "min_leaf": int(min_leaf), "min_gain": float(min_gain)}
    return ForestModel(tuple(trees), tuple(data.names), params)


def _vote(n_user: int, n_trees: int) -> tuple[str, float]:
    # ties go to automatic
    if n_user * 2 > n_trees:
        return USER_ACTION, n_user / n_trees
    return AUTOMATIC, (n_trees - n_user) / n_trees


def predict_forest(model: ForestModel, vector: FeatureVector | Mapping) -> tuple[str, float]:
    n_user = sum(route(t.root, vector).label == USER_ACTION for t in model.trees)
    return _vote(n_user, len(model.trees))


def forest_votes(model: ForestModel, data: Dataset) -> np.ndarray:
    """Number of trees voting user-action, per row."""
    votes = np.zeros(len(data), dtype=np.int64)
    for tree in model.trees:
        votes += predict_p_user(tree.root, data) > 0.5
    return votes


def predict_forest_dataset(model: ForestModel, data: Dataset) -> np.ndarray:
    votes = forest_votes(model, data)
    return (votes * 2 > len(model.trees)).astype(np.int8)
