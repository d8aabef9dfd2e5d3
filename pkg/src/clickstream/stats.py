"""ECDFs, the two-sample Kolmogorov-Smirnov test and Tukey outliers."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


def ecdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Points ``(x, F(x))`` of the right-continuous empirical CDF, one per distinct x."""
    if len(values) == 0:
        raise ValueError("ecdf of an empty sample")
    xs, counts = np.unique(np.asarray(values, dtype=np.float64), return_counts=True)
    n = int(counts.sum())
    cum = np.cumsum(counts)
    return [(float(x), float(c) / n) for x, c in zip(xs, cum)]


def write_ecdf_csv(path, values: Sequence[float], header=("value", "ecdf")) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for x, f in ecdf(values):
            writer.writerow([repr(x), repr(f)])


def kolmogorov_sf(x: float) -> float:
    """Survival function of the limiting Kolmogorov distribution, P(K > x).

    Uses the alternating series ``2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)``;
    for small ``x`` (where that series converges slowly) the Jacobi-theta form
    of the CDF is used instead.
    """
    if x < 0.05:
        # the CDF is below 1e-200 here
        return 1.0
    if x < 1.0:
        # CDF = sqrt(2 pi)/x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))
        c = math.pi ** 2 / (8.0 * x * x)
        total = 0.0
        for k in range(1, 50):
            term = math.exp(-((2 * k - 1) ** 2) * c)
            total += term
            if term < 1e-17 * total:
                break
        return max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / x * total)
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < 1e-17:
            break
    return min(1.0, max(0.0, 2.0 * total))


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    reject: bool


def ks_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """Largest vertical distance between the two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("KS test needs two non-empty samples")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> KSResult:
    """Two-sided two-sample KS test with the asymptotic p-value.

    The statistic is scaled by ``sqrt(n m / (n + m))`` before evaluating the
    Kolmogorov survival function; the null is rejected when ``p < alpha``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    d = ks_statistic(a, b)
    n, m = len(a), len(b)
    en = math.sqrt(n * m / (n + m))
    p = kolmogorov_sf(en * d)
    return KSResult(d, p, p < alpha)


@dataclass(frozen=True)
class TukeyResult:
    q1: float
    q3: float
    lower_fence: float
    upper_fence: float
    outliers: list

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def tukey_outliers(values: Sequence[float], k: float = 1.5) -> TukeyResult:
    """Flag values beyond ``k`` IQRs outside the quartiles (linear-interpolation quantiles)."""
    if len(values) < 4:
        raise ValueError("tukey_outliers needs at least 4 values")
    arr = np.asarray(values, dtype=np.float64)
    q1, q3 = np.percentile(arr, [25, 75])
    iqr = q3 - q1
    lo, hi = q1 - k * iqr, q3 + k * iqr
    outliers = [v for v in values if v < lo or v > hi]
    return TukeyResult(float(q1), float(q3), float(lo), float(hi), outliers)


def summary(values: Sequence[float]) -> dict:
    """Count, mean, median and quartiles; empty input gives count 0 only."""
    if len(values) == 0:
        return {"count": 0}
    arr = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return {"count": int(arr.size), "mean": float(arr.mean()), "median": float(med),
            "q1": float(q1), "q3": float(q3), "min": float(arr.min()), "max": float(arr.max())}
