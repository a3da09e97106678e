"""Label-noise removal by thresholding the hardest samples.

Samples are ranked hardest-first and either a fixed fraction or an
automatically detected elbow of the cumulative hardness curve decides
how many of them to drop.  The cumulative curve carries each sample's
normalized share of inverted hardness, so a heavy head (suspected
noise) bends it early.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import moving_average, round_half_up
from .dynamics import EnsembleHardness, Estimator, hardness_order
from .errors import DegenerateInputError, IncompatibilityError, NoElbowError

MODES = ("fraction", "elbow")


@dataclass(frozen=True)
class CumulativeCurve:
    """Hardest-first sample order with prefix hardness mass."""

    order: np.ndarray       # (n,) sample ids, hardest first
    mass: np.ndarray        # (n,) per-sample normalized mass in that order
    cumulative: np.ndarray  # (n,) prefix sums, ending at 1.0


@dataclass(frozen=True)
class DenoisePlan:
    mode: str
    threshold_fraction: float
    estimator: Estimator
    removed_ids: np.ndarray  # sorted
    per_class_removed: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "threshold_fraction": self.threshold_fraction,
            "estimator": self.estimator.value,
            "removed_ids": [int(i) for i in self.removed_ids],
            "per_class_removed": [int(c) for c in self.per_class_removed],
        }


def hardness_mass(eh: EnsembleHardness) -> np.ndarray:
    """Per-sample nonnegative mass proportional to how hard a sample is.

    Estimators whose values already grow with hardness contribute their
    raw values; inverted estimators contribute regularized reciprocals.
    The reciprocal's input is shifted, when needed, so its minimum sits
    at least 5% of the value spread above zero; otherwise one sample
    arbitrarily close to zero would swallow the entire mass budget.
    Equal hardness always yields equal mass, hence a linear curve.
    """
    v = np.asarray(eh.values, dtype=np.float64)
    if eh.estimator.higher_is_harder:
        mass = v.copy()
        if (mass < 0).any():
            raise ValueError(f"{eh.estimator.value} values must be nonnegative")
    else:
        floor = max(0.05 * (v.max() - v.min()), 1e-6)
        if v.min() < floor:
            v = v + (floor - v.min())
        mass = 1.0 / v
    return mass


def cumulative_hardness(eh: EnsembleHardness, mass=None) -> CumulativeCurve:
    """Normalized prefix hardness mass over the hardest-first ordering."""
    n = len(eh.values)
    if n < 2:
        raise ValueError("need at least 2 samples")
    mass = hardness_mass(eh) if mass is None else np.asarray(mass, dtype=np.float64)
    if len(mass) != n:
        raise IncompatibilityError("mass vector length does not match hardness")
    if (mass < 0).any():
        raise ValueError("mass must be nonnegative")
    total = mass.sum()
    if total <= 0.0:
        raise DegenerateInputError("hardness carries no mass to accumulate")
    order = hardness_order(eh.values, eh.estimator, hardest_first=True)
    ordered = mass[order] / total
    return CumulativeCurve(order=order, mass=ordered, cumulative=np.cumsum(ordered))


def elbow_threshold(curve: CumulativeCurve, smooth_fraction: float = 0.005) -> int:
    """Rank of the first elbow of the cumulative curve.

    The elbow is the first local maximum of the distance between the
    curve and the straight chord from (0, 0) to (n, 1); the distance
    profile is lightly smoothed to ignore single-rank noise spikes.
    Returns the number of samples before the bend (1-based count).
    """
    y = curve.cumulative
    n = len(y)
    r = np.arange(1, n + 1)
    dist = y - r / n  # chord deviation, proportional to perpendicular distance
    window = max(1, round_half_up(smooth_fraction * n))
    smoothed = moving_average(dist, window)
    if np.abs(smoothed).max() < 1e-12:
        raise NoElbowError("curve is linear; no elbow to detect")
    running_max = -np.inf
    for i in range(n - 1):
        if smoothed[i] >= running_max:
            running_max = smoothed[i]
            if smoothed[i + 1] < smoothed[i]:
                return i + 1
    return n


def denoise_plan(eh: EnsembleHardness, labels, mode: str = "fraction",
                 fraction: float | None = None) -> DenoisePlan:
    """Drop the hardest samples by fixed fraction or detected elbow."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    labels = np.asarray(labels, dtype=np.int64)
    n = len(eh.values)
    if len(labels) != n:
        raise IncompatibilityError("labels and hardness have different lengths")
    if mode == "fraction":
        if fraction is None or not 0.0 < fraction < 1.0:
            raise ValueError("fraction mode needs 0 < fraction < 1")
        count = round_half_up(fraction * n)
    else:
        count = elbow_threshold(cumulative_hardness(eh))
    order = hardness_order(eh.values, eh.estimator, hardest_first=True)
    removed = np.sort(order[:count])
    histogram = np.bincount(labels[removed], minlength=int(labels.max()) + 1)
    return DenoisePlan(mode=mode, threshold_fraction=count / n,
                       estimator=eh.estimator, removed_ids=removed,
                       per_class_removed=histogram)
