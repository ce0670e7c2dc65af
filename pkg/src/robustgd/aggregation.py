"""Plain and robust aggregation rules over worker vectors.

The robust rule is the coordinate-wise trimmed mean: per coordinate, drop
the `trim` smallest and `trim` largest values and average the rest. Its
worst-case squared deviation from the honest average is controlled by the
robustness coefficient 6k/(N-2k) * (1 + k/(N-2k)).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AggregatorSpec",
    "average",
    "coordinate_trimmed_mean",
    "aggregate",
    "trim_robustness_coeff",
    "point_trim_robustness_coeff",
]


@dataclass(frozen=True)
class AggregatorSpec:
    """Server aggregation rule: plain average or trimmed mean with `trim` per side."""

    kind: str  # "average" | "trimmed_mean"
    trim: int = 0

    def __post_init__(self):
        if self.kind not in ("average", "trimmed_mean"):
            raise ValueError(f"unknown aggregator kind {self.kind!r}")
        if self.trim < 0:
            raise ValueError(f"trim must be non-negative, got {self.trim}")
        if self.kind == "average" and self.trim != 0:
            raise ValueError("average aggregator takes no trim parameter")


def _as_matrix(vectors) -> np.ndarray:
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("expected a non-empty stack of equal-length vectors")
    # adversarial NaN/Inf would silently poison the coordinate sort
    if not np.isfinite(arr).all():
        raise ValueError("aggregation input contains non-finite entries")
    return arr


def average(vectors) -> np.ndarray:
    """Arithmetic mean of the input vectors."""
    return _as_matrix(vectors).mean(axis=0)


def coordinate_trimmed_mean(vectors, trim: int) -> np.ndarray:
    """Coordinate-wise trimmed mean with `trim` values dropped per side.

    Requires n > 2 * trim. Sorting is stable; ties cannot affect the output
    since only the retained values are averaged.
    """
    arr = _as_matrix(vectors)
    n = arr.shape[0]
    trim = int(trim)
    if trim < 0:
        raise ValueError(f"trim must be non-negative, got {trim}")
    if n <= 2 * trim:
        raise ValueError(f"need n > 2*trim input vectors, got n={n}, trim={trim}")
    if trim == 0:
        return arr.mean(axis=0)
    ordered = np.sort(arr, axis=0, kind="stable")
    return ordered[trim : n - trim].mean(axis=0)


def aggregate(vectors, spec: AggregatorSpec) -> np.ndarray:
    if spec.kind == "average":
        return average(vectors)
    return coordinate_trimmed_mean(vectors, spec.trim)


def trim_robustness_coeff(n: int, f: int) -> float:
    """Coefficient bounding the trimmed mean's squared error against the
    honest average when f of n vectors are arbitrary: 6f/(n-2f)*(1+f/(n-2f)).
    """
    n, f = int(n), int(f)
    if f < 0:
        raise ValueError(f"f must be non-negative, got {f}")
    if n <= 2 * f:
        raise ValueError(f"need n > 2f, got n={n}, f={f}")
    ratio = f / (n - 2 * f)
    return 6.0 * ratio * (1.0 + ratio)


def point_trim_robustness_coeff(m: int, b: int) -> float:
    """Same coefficient at the data-point level (b of m points corrupted)."""
    # one shared formula so the choice of variant lives in a single place
    return trim_robustness_coeff(m, b)
