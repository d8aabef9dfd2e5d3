"""Dense encoding of feature vectors for training and batch prediction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..features import FEATURE_KINDS, FEATURE_NAMES, MISSING_CATEGORY, USER_ACTION, FeatureVector


def category_value(value) -> str:
    """Text form of a categorical/boolean feature value as stored in trees."""
    if value is None:
        return MISSING_CATEGORY
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return str(value)


def split_kind(feature_kind: str) -> str:
    return "numeric" if feature_kind == "numeric" else "categorical"


@dataclass
class Dataset:
    """Column-encoded examples.

    Numeric columns hold floats with NaN for MISSING. Categorical columns hold
    integer codes (stored as float) into ``vocabs[j]``. ``y`` is 1 for
    user-actions and 0 for automatic-actions.
    """

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    X: np.ndarray
    vocabs: list
    y: np.ndarray | None = None

    def __len__(self):
        return self.X.shape[0]

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], names: Sequence[str] = FEATURE_NAMES,
                     labeled: bool | None = None) -> Dataset:
        names = tuple(names)
        kinds = tuple(split_kind(FEATURE_KINDS[n]) for n in names)
        n = len(vectors)
        X = np.empty((n, len(names)), dtype=np.float64)
        vocabs: list = []
        for j, (name, kind) in enumerate(zip(names, kinds)):
            col = [getattr(v, name) for v in vectors]
            if kind == "numeric":
                X[:, j] = [np.nan if x is None else float(x) for x in col]
                vocabs.append(None)
            else:
                index: dict[str, int] = {}
                codes = [index.setdefault(category_value(x), len(index)) for x in col]
                X[:, j] = codes
                vocabs.append(list(index))
        if labeled is None:
            labeled = n > 0 and all(v.label is not None for v in vectors)
        y = None
        if labeled:
            y = np.fromiter((v.label == USER_ACTION for v in vectors), dtype=np.int8, count=n)
        return cls(names, kinds, X, vocabs, y)

    def subset(self, idx) -> Dataset:
        return Dataset(self.names, self.kinds, self.X[idx], self.vocabs,
                       None if self.y is None else self.y[idx])

    def column_values(self, j: int) -> list:
        """Decoded values of column ``j`` (None for missing numerics)."""
        col = self.X[:, j]
        if self.kinds[j] == "numeric":
            return [None if np.isnan(x) else float(x) for x in col]
        vocab = self.vocabs[j]
        return [vocab[int(c)] for c in col]
