"""Easiest-first pruning plans at dataset and class level.

Dataset-level pruning (DLP) drops the globally easiest fraction of the
data and therefore skews class proportions toward hard classes;
class-level pruning (CLP) drops the same fraction from every class
independently and preserves balance.  `overlap` compares which indices
two plans share.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import round_half_up
from .dynamics import EnsembleHardness, Estimator, hardness_order
from .errors import IncompatibilityError

MODES = ("dlp", "clp")


@dataclass(frozen=True)
class PruningPlan:
    mode: str
    rate: float
    estimator: Estimator
    pruned_ids: np.ndarray  # sorted unique sample ids
    n_samples: int

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "rate": self.rate,
            "estimator": self.estimator.value,
            "pruned_ids": [int(i) for i in self.pruned_ids],
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PruningPlan":
        return cls(
            mode=data["mode"],
            rate=float(data["rate"]),
            estimator=Estimator(data["estimator"]),
            pruned_ids=np.asarray(sorted(data["pruned_ids"]), dtype=np.int64),
            n_samples=int(data["n_samples"]),
        )

    def retained_ids(self) -> np.ndarray:
        mask = np.ones(self.n_samples, dtype=bool)
        mask[self.pruned_ids] = False
        return np.flatnonzero(mask)


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"pruning rate {rate} outside [0, 1)")


def dlp_plan(eh: EnsembleHardness, labels, rate: float) -> PruningPlan:
    """Remove the globally easiest round(rate*n) samples."""
    _check_rate(rate)
    n = len(eh.values)
    count = round_half_up(rate * n)
    order = hardness_order(eh.values, eh.estimator)
    pruned = np.sort(order[:count])
    return PruningPlan("dlp", float(rate), eh.estimator, pruned, n)


def clp_plan(eh: EnsembleHardness, labels, rate: float) -> PruningPlan:
    """Remove the easiest round(rate*n_c) samples inside every class."""
    _check_rate(rate)
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(eh.values):
        raise IncompatibilityError("labels and hardness have different lengths")
    n = len(eh.values)
    pruned_parts = []
    for c in range(int(labels.max()) + 1):
        members = np.flatnonzero(labels == c)
        count = round_half_up(rate * len(members))
        order = hardness_order(eh.values[members], eh.estimator)
        pruned_parts.append(members[order[:count]])
    pruned = np.sort(np.concatenate(pruned_parts)) if pruned_parts else np.empty(0, np.int64)
    return PruningPlan("clp", float(rate), eh.estimator, pruned, n)


def per_class_removals(plan: PruningPlan, labels) -> np.ndarray:
    """Histogram of pruned samples per class."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != plan.n_samples:
        raise IncompatibilityError("labels do not match the plan's dataset size")
    k = int(labels.max()) + 1
    return np.bincount(labels[plan.pruned_ids], minlength=k)


def overlap(a: PruningPlan, b: PruningPlan) -> tuple[float, float]:
    """Shared pruned indices as a fraction of each plan's size.

    Returns (|A&B|/|A|, |A&B|/|B|); the two numbers differ when the
    plans prune different amounts.
    """
    if a.n_samples != b.n_samples:
        raise IncompatibilityError("plans cover datasets of different sizes")
    if len(a.pruned_ids) == 0 or len(b.pruned_ids) == 0:
        raise ValueError("overlap is undefined for an empty plan")
    shared = len(np.intersect1d(a.pruned_ids, b.pruned_ids, assume_unique=True))
    return shared / len(a.pruned_ids), shared / len(b.pruned_ids)
