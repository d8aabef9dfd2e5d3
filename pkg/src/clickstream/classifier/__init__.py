"""User-action vs automatic-action classifiers."""

from .dataset import Dataset
from .evaluation import (
    EvalReport,
    compute_metrics,
    concat,
    cross_validate,
    learning_curve,
    out_of_fold_predictions,
    predict_labels,
    stratified_folds,
    train_model,
)
from .forest import ForestModel, predict_forest, train_forest
from .model_io import ModelFormatError, load_model, save_model
from .splits import information_gain
from .tree import CategoricalSplit, Leaf, NumericSplit, TreeModel, predict, train_tree


def rank_features(data: Dataset) -> list[tuple[str, float]]:
    """Information gain of every feature column, highest first."""
    if data.y is None:
        raise ValueError("ranking needs labeled data")
    scores = []
    for j, name in enumerate(data.names):
        numeric = data.kinds[j] == "numeric"
        scores.append((name, information_gain(data.column_values(j), data.y, numeric=numeric)))
    return sorted(scores, key=lambda s: -s[1])


def classify(model, vector) -> tuple[str, float]:
    """Predict one vector with either model type."""
    if isinstance(model, ForestModel):
        return predict_forest(model, vector)
    return predict(model, vector)


__all__ = [
    "CategoricalSplit",
    "Dataset",
    "EvalReport",
    "ForestModel",
    "Leaf",
    "ModelFormatError",
    "NumericSplit",
    "TreeModel",
    "classify",
    "compute_metrics",
    "concat",
    "cross_validate",
    "information_gain",
    "learning_curve",
    "load_model",
    "out_of_fold_predictions",
    "predict",
    "predict_forest",
    "predict_labels",
    "rank_features",
    "save_model",
    "stratified_folds",
    "train_forest",
    "train_model",
    "train_tree",
]
