"""Entropy, information gain and split search shared by IG ranking and trees."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def binary_entropy(pos, total):
    """Entropy in bits of a binary label distribution; vectorized, 0 for empty."""
    pos = np.asarray(pos, dtype=np.float64)
    total = np.asarray(total, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, pos / np.where(total > 0, total, 1.0), 0.0)
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
              + np.where(q > 0, q * np.log2(np.where(q > 0, q, 1.0)), 0.0))
    return h


def partition_entropy(sizes) -> float:
    """Entropy in bits of the partition sizes themselves (C4.5 split info)."""
    sizes = np.asarray(sizes, dtype=np.float64)
    sizes = sizes[sizes > 0]
    n = sizes.sum()
    if n == 0:
        return 0.0
    p = sizes / n
    return float(-(p * np.log2(p)).sum())


@dataclass
class Split:
    """Best split of one feature at one node."""

    feature: int
    gain: float
    split_info: float
    threshold: float | None = None      # numeric only
    codes: np.ndarray | None = None     # categorical: codes present at the node

    @property
    def gain_ratio(self) -> float:
        return self.gain / self.split_info if self.split_info > 0 else 0.0


def numeric_split(values: np.ndarray, y: np.ndarray, parent_h: float, feature: int = 0,
                  min_branch: int = 1) -> Split | None:
    """Best threshold on a numeric column; NaN values form a third partition.

    Candidate thresholds are midpoints between consecutive distinct values,
    plus (when there are missing values) the present/absent split alone. Each
    of the two threshold branches must hold at least ``min_branch`` examples.
    Returns None when no non-trivial partition exists.
    """
    n = values.shape[0]
    missing = np.isnan(values)
    n_miss = int(missing.sum())
    pos_miss = int(y[missing].sum()) if n_miss else 0
    present = ~missing
    vp = values[present]
    yp = y[present]
    n_pres = vp.shape[0]
    pos_pres = int(yp.sum())
    h_miss = float(binary_entropy(pos_miss, n_miss)) * n_miss

    best: Split | None = None
    if n_pres >= 2:
        order = np.argsort(vp, kind="stable")
        vs = vp[order]
        cpos = np.cumsum(yp[order])
        cut = np.nonzero(vs[:-1] < vs[1:])[0]
        if min_branch > 1 and cut.size:
            cut = cut[(cut + 1 >= min_branch) & (n_pres - cut - 1 >= min_branch)]
        if cut.size:
            left_n = cut + 1.0
            left_pos = cpos[cut]
            right_n = n_pres - left_n
            right_pos = pos_pres - left_pos
            cond = (left_n * binary_entropy(left_pos, left_n)
                    + right_n * binary_entropy(right_pos, right_n) + h_miss) / n
            gains = parent_h - cond
            k = int(np.argmax(gains))
            i = cut[k]
            lo, hi = vs[i], vs[i + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = Split(feature, float(gains[k]),
                         partition_entropy([left_n[k], right_n[k], n_miss]), threshold=float(thr))
    if n_miss and n_pres:
        cond = (float(binary_entropy(pos_pres, n_pres)) * n_pres + h_miss) / n
        gain = parent_h - cond
        if best is None or gain > best.gain:
            best = Split(feature, float(gain), partition_entropy([n_pres, n_miss]),
                         threshold=float(vp.max()))
    return best


def categorical_split(codes: np.ndarray, y: np.ndarray, parent_h: float, feature: int = 0,
                      min_branch: int = 1) -> Split | None:
    """Multiway split on every code present at the node."""
    c = codes.astype(np.int64)
    counts = np.bincount(c)
    present = np.nonzero(counts)[0]
    if present.size < 2:
        return None
    if min_branch > 1 and int((counts[present] >= min_branch).sum()) < 2:
        return None
    pos = np.bincount(c, weights=y.astype(np.float64))
    n = c.shape[0]
    cond = float((counts[present] * binary_entropy(pos[present], counts[present])).sum()) / n
    return Split(feature, parent_h - cond, partition_entropy(counts[present]), codes=present)


def information_gain(values: Sequence, labels: Sequence, numeric: bool | None = None) -> float:
    """Information gain (bits) of binary ``labels`` from partitioning by ``values``.

    Categorical values partition by equality. Numeric values (``numeric=True``,
    or auto-detected when every non-None value is an int/float but not bool)
    are discretized at the single best threshold. Missing numeric values carry
    no information: the gain is computed on the known values and scaled by
    the known fraction, as C4.5 does.
    """
    n = len(values)
    if n == 0:
        raise ValueError("information_gain of empty input")
    if len(labels) != n:
        raise ValueError("values and labels differ in length")
    y = _binary_labels(labels)
    parent_h = float(binary_entropy(y.sum(), n))
    if numeric is None:
        numeric = all(v is None or (isinstance(v, (int, float, np.integer, np.floating))
                                    and not isinstance(v, (bool, np.bool_))) for v in values)
    if numeric:
        col = np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)
        known = ~np.isnan(col)
        n_known = int(known.sum())
        if n_known == 0:
            return 0.0
        yk = y[known]
        split = numeric_split(col[known], yk, float(binary_entropy(yk.sum(), n_known)))
        if split is None:
            return 0.0
        return max(0.0, split.gain) * n_known / n
    else:
        index: dict = {}
        col = np.array([index.setdefault(v, len(index)) for v in values], dtype=np.int64)
        split = categorical_split(col, y, parent_h)
    return max(0.0, split.gain) if split is not None else 0.0


def _binary_labels(labels: Sequence) -> np.ndarray:
    # entropy is symmetric in the two classes, so any 0/1 mapping will do
    seen: dict = {}
    out = np.fromiter((seen.setdefault(v, len(seen)) for v in labels), dtype=np.int64)
    if len(seen) > 2:
        raise ValueError("labels must be binary")
    return out.astype(np.int8)
