"""Small numeric helpers used by several modules."""
from __future__ import annotations

import math

import numpy as np


def round_half_up(x: float) -> int:
    """Round a nonnegative real quota to the nearest integer, halves up."""
    return int(math.floor(x + 0.5))


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with shrinking windows at the edges."""
    v = np.asarray(values, dtype=np.float64)
    if window <= 1:
        return v.copy()
    n = v.shape[0]
    half = window // 2
    csum = np.concatenate(([0.0], np.cumsum(v)))
    idx = np.arange(n)
    lo = np.clip(idx - half, 0, n)
    hi = np.clip(idx + half + 1, 0, n)
    return (csum[hi] - csum[lo]) / (hi - lo)
