"""Ensemble-size robustness of hardness estimators.

Adding a model to an ensemble shifts hardness estimates; these metrics
quantify how much the downstream artifacts move.  Per-class resampling
counts are compared by absolute difference, pruned index sets by the
percentage of newly pruned indices, and prefix-ensemble sweeps trace
both as the ensemble grows one model at a time.  A Spearman helper
correlates class hardness against class accuracy with an exact
permutation p-value for small class counts.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sstats

from .dynamics import EnsembleHardness, HardnessVector, aggregate_ensemble
from .errors import DegenerateInputError, IncompatibilityError
from .pruning import PruningPlan, dlp_plan
from .resampling import CountVector, base_ratios, class_hardness, scale_ratios, target_counts

TASKS = ("resampling_counts", "pruning_indices", "class_accuracy")


@dataclass(frozen=True)
class StabilityCurve:
    """Metric values indexed by ensemble size.

    For transition tasks, row j of `y` compares prefix ensembles of
    size x[j] and x[j]+1; columns follow `series` (class ids or pruning
    rates).  The class_accuracy task stores running prefix means.
    """

    task: str
    x: np.ndarray        # (steps,) ensemble sizes
    y: np.ndarray        # (steps, len(series))
    series: tuple
    estimator: str | None = None


def absolute_difference(counts_a: CountVector, counts_b: CountVector) -> np.ndarray:
    """Per-class |target_b - target_a|."""
    if len(counts_a.values) != len(counts_b.values):
        raise IncompatibilityError("count vectors have different class counts")
    return np.abs(counts_b.values - counts_a.values).astype(np.int64)


def pruning_stability(p_j: PruningPlan, p_j1: PruningPlan) -> float:
    """Percentage of indices pruned at size j+1 that were not pruned at j."""
    if p_j.n_samples != p_j1.n_samples:
        raise IncompatibilityError("plans cover datasets of different sizes")
    if p_j.rate != p_j1.rate:
        raise IncompatibilityError("plans use different pruning rates")
    if len(p_j.pruned_ids) == 0:
        raise DegenerateInputError("stability undefined for an empty baseline plan")
    new = np.setdiff1d(p_j1.pruned_ids, p_j.pruned_ids, assume_unique=True)
    return len(new) / len(p_j.pruned_ids) * 100.0


def ensemble_sweep(per_model, labels=None, task: str = "resampling_counts",
                   alpha: float = 1.0, rates=(0.1,)) -> StabilityCurve:
    """Trace a transition metric over prefix ensembles of growing size.

    `per_model` is a list of HardnessVector for the resampling and
    pruning tasks, or a list of per-class accuracy vectors for the
    class_accuracy task (whose curve holds running means instead of
    transitions).
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if len(per_model) < 2:
        raise ValueError("a sweep needs at least 2 models")

    if task == "class_accuracy":
        acc = np.stack([np.asarray(v, dtype=np.float64) for v in per_model])
        J, k = acc.shape
        y = np.vstack([acc[:j].mean(axis=0) for j in range(1, J + 1)])
        return StabilityCurve(task, np.arange(1, J + 1), y, tuple(range(k)))

    vectors: list[HardnessVector] = list(per_model)
    estimator = vectors[0].estimator
    J = len(vectors)
    prefix = [aggregate_ensemble(vectors[:j]) for j in range(1, J + 1)]

    if task == "resampling_counts":
        labels = np.asarray(labels, dtype=np.int64)
        sizes = np.bincount(labels)

        def counts_for(eh: EnsembleHardness) -> CountVector:
            rv = scale_ratios(base_ratios(class_hardness(eh, labels)), alpha)
            return target_counts(rv, sizes)

        per_j = [counts_for(eh) for eh in prefix]
        y = np.vstack([absolute_difference(per_j[j], per_j[j + 1])
                       for j in range(J - 1)])
        return StabilityCurve(task, np.arange(1, J), y,
                              tuple(range(len(sizes))), estimator.value)

    rates = tuple(float(r) for r in rates)
    plans = {r: [dlp_plan(eh, labels, r) for eh in prefix] for r in rates}
    y = np.empty((J - 1, len(rates)))
    for col, r in enumerate(rates):
        for j in range(J - 1):
            y[j, col] = pruning_stability(plans[r][j], plans[r][j + 1])
    return StabilityCurve(task, np.arange(1, J), y, rates, estimator.value)


def recommended_ensemble_size(curves, thresholds) -> int | None:
    """Smallest transition step at which all curves stay below threshold.

    `thresholds` is either a single number applied everywhere or a
    mapping from task name to threshold.  Returns None when no step
    qualifies across every supplied curve.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("no curves supplied")

    def limit(task: str) -> float:
        if isinstance(thresholds, dict):
            return float(thresholds[task])
        return float(thresholds)

    common = sorted(set.intersection(*(set(c.x.tolist()) for c in curves)))
    for j in common:
        ok = True
        for c in curves:
            row = c.y[np.flatnonzero(c.x == j)[0]]
            if not (row <= limit(c.task)).all():
                ok = False
                break
        if ok:
            return int(j)
    return None


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float((xc * xc).sum()) * float((yc * yc).sum()))
    if denom == 0.0:
        raise DegenerateInputError("correlation undefined for constant input")
    return float((xc * yc).sum()) / denom


def spearman_class_correlation(class_values, class_accuracy,
                               max_exact: int = 10) -> tuple[float, float]:
    """Spearman rank correlation with mid-rank ties.

    The two-sided p-value enumerates all pairings exactly up to
    `max_exact` classes and falls back to the t approximation above
    that.  Returns (rho, p).
    """
    values = np.asarray(getattr(class_values, "values", class_values), dtype=np.float64)
    acc = np.asarray(class_accuracy, dtype=np.float64)
    k = len(values)
    if k < 3:
        raise ValueError("need at least 3 classes")
    if len(acc) != k:
        raise IncompatibilityError("hardness and accuracy vectors differ in length")
    rx = _midranks(values)
    ry = _midranks(acc)
    rho = _pearson(rx, ry)

    if k <= max_exact:
        count = 0
        total = 0
        threshold = abs(rho) - 1e-12
        for perm in itertools.permutations(range(k)):
            r = _pearson(rx, ry[list(perm)])
            if abs(r) >= threshold:
                count += 1
            total += 1
        p = count / total
    else:
        if abs(rho) >= 1.0:
            p = 0.0
        else:
            t = rho * math.sqrt((k - 2) / (1.0 - rho * rho))
            p = 2.0 * float(_sstats.t.sf(abs(t), df=k - 2))
    return rho, p
