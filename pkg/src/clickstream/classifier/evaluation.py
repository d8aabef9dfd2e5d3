"""Per-class metrics, stratified k-fold cross-validation and learning curves."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ..features import USER_ACTION
from .dataset import Dataset
from .forest import ForestModel, predict_forest_dataset, train_forest
from .tree import TreeModel, predict_dataset, train_tree


@dataclass(frozen=True)
class EvalReport:
    """Metrics for the user-action class. Undefined ratios are None."""

    accuracy: float | None
    precision: float | None
    recall: float | None
    f_measure: float | None
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        def fmt(x):
            return "n/a" if x is None else f"{x:.4f}"
        return "\n".join([
            f"{'accuracy':<10} {fmt(self.accuracy)}",
            f"{'precision':<10} {fmt(self.precision)}",
            f"{'recall':<10} {fmt(self.recall)}",
            f"{'f_measure':<10} {fmt(self.f_measure)}",
            f"TP={self.tp} FP={self.fp} TN={self.tn} FN={self.fn}",
        ])


def _as_binary(values) -> np.ndarray:
    arr = list(values) if not isinstance(values, np.ndarray) else values
    if isinstance(arr, np.ndarray) and arr.dtype.kind in "biu":
        return arr.astype(np.int8)
    return np.array([v == USER_ACTION or v is True or v == 1 for v in arr], dtype=np.int8)


def compute_metrics(predictions: Sequence, truths: Sequence) -> EvalReport:
    """Confusion counts and derived ratios, user-action being the positive class.

    Labels may be ``"user_action"``/``"automatic"`` strings or 1/0.
    """
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths differ in length")
    p = _as_binary(predictions)
    t = _as_binary(truths)
    tp = int(((p == 1) & (t == 1)).sum())
    fp = int(((p == 1) & (t == 0)).sum())
    tn = int(((p == 0) & (t == 0)).sum())
    fn = int(((p == 0) & (t == 1)).sum())
    n = tp + fp + tn + fn
    accuracy = (tp + tn) / n if n else None
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    if precision is None or recall is None:
        f = None
    elif precision + recall == 0:
        f = 0.0
    else:
        f = 2 * precision * recall / (precision + recall)
    return EvalReport(accuracy, precision, recall, f, tp, fp, tn, fn)


# --------------------------------------------------------------------------
# Model dispatch
# --------------------------------------------------------------------------

Model = TreeModel | ForestModel


def train_model(data: Dataset, kind: str = "tree", **params) -> Model:
    if kind == "tree":
        return train_tree(data, **params)
    if kind == "forest":
        return train_forest(data, **params)
    raise ValueError(f"unknown model kind {kind!r}")


def predict_labels(model: Model, data: Dataset) -> np.ndarray:
    if isinstance(model, ForestModel):
        return predict_forest_dataset(model, data)
    return predict_dataset(model, data)


# --------------------------------------------------------------------------
# Cross-validation
# --------------------------------------------------------------------------

def stratified_folds(y: np.ndarray, k: int, seed: int | None = 0) -> np.ndarray:
    """Fold index per example; each class is spread round-robin after shuffling."""
    if k < 2:
        raise ValueError("k must be >= 2")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    folds = np.empty(y.shape[0], dtype=np.int64)
    offset = 0
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        if idx.shape[0] < k:
            raise ValueError(f"class {cls} has {idx.shape[0]} examples, fewer than k={k}")
        idx = rng.permutation(idx)
        # rotate the start so fold sizes stay balanced across classes
        folds[idx] = (np.arange(idx.shape[0]) + offset) % k
        offset = (offset + idx.shape[0]) % k
    return folds


def out_of_fold_predictions(data: Dataset, k: int = 10, seed: int | None = 0, kind: str = "tree",
                            jobs: int = 1, **params) -> np.ndarray:
    if data.y is None:
        raise ValueError("cross-validation needs labeled data")
    folds = stratified_folds(data.y, k, seed)
    pred = np.empty(len(data), dtype=np.int8)
    tasks = [(data, folds, f, kind, params) for f in range(k)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fold_task, tasks))
    else:
        results = [_fold_task(t) for t in tasks]
    for f, fold_pred in enumerate(results):
        pred[folds == f] = fold_pred
    return pred


def _fold_task(task) -> np.ndarray:
    data, folds, f, kind, params = task
    test = folds == f
    model = train_model(data.subset(~test), kind, **params)
    return predict_labels(model, data.subset(test))


def cross_validate(data: Dataset, k: int = 10, seed: int | None = 0, kind: str = "tree",
                   jobs: int = 1, **params) -> EvalReport:
    """Stratified k-fold CV; metrics on the pooled out-of-fold predictions."""
    pred = out_of_fold_predictions(data, k, seed, kind, jobs, **params)
    return compute_metrics(pred, data.y)


def learning_curve(groups: Sequence[Dataset], k: int = 10, seed: int | None = 0, kind: str = "tree",
                   **params) -> list[dict]:
    """Train on the first n groups (order shuffled by ``seed``), test on the rest.

    Returns one entry per n = 1..G-1 with the k-fold CV report on the training
    groups and the report on the held-out groups.
    """
    if len(groups) < 2:
        raise ValueError("learning_curve needs at least two groups")
    order = np.random.default_rng(seed).permutation(len(groups))
    ordered = [groups[i] for i in order]
    out = []
    for n in range(1, len(groups)):
        train = concat(ordered[:n])
        rest = concat(ordered[n:])
        cv = cross_validate(train, k=k, seed=seed, kind=kind, **params)
        model = train_model(train, kind, **params)
        holdout = compute_metrics(predict_labels(model, rest), rest.y)
        out.append({"n": n, "groups": [int(i) for i in order[:n]], "cv": cv, "holdout": holdout})
    return out


def concat(parts: Sequence[Dataset]) -> Dataset:
    """Stack datasets with the same columns, re-encoding categorical codes."""
    first = parts[0]
    X = np.concatenate([p.X for p in parts], axis=0)
    vocabs = []
    for j, kind in enumerate(first.kinds):
        if kind == "numeric":
            vocabs.append(None)
            continue
        merged: dict[str, int] = {}
        offset = 0
        for p in parts:
            remap = np.array([merged.setdefault(s, len(merged)) for s in p.vocabs[j]], dtype=np.float64)
            if remap.size:
                X[offset:offset + len(p), j] = remap[p.X[:, j].astype(np.int64)]
            offset += len(p)
        vocabs.append(list(merged))
    y = None if any(p.y is None for p in parts) else np.concatenate([p.y for p in parts])
    return Dataset(first.names, first.kinds, X, vocabs, y)
