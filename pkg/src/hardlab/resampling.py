"""Class ratios, target counts and concrete resampling plans.

The pipeline turns ensemble hardness into an integer sample budget per
class: per-class mean hardness, an inversion for estimators where low
means hard, a mean-anchored spread factor alpha, then totals-preserving
normalization with largest-remainder rounding.  Plans record, per
sample, how many copies survive plus interpolation recipes for
synthetic samples, so a resampled dataset is reproducible from the
original data and the plan alone.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EnsembleHardness, Estimator
from .errors import (
    DegenerateClassError,
    DegenerateInputError,
    IncompatibilityError,
    OverScalingError,
)
from .geometry import FeatureSet

STRATEGIES = ("random_dup", "smote", "easy_weighted", "hard_weighted")
MODES = ("full", "no_oversampling", "no_undersampling")
SMOTE_NEIGHBORS = 5


@dataclass(frozen=True)
class ClassHardness:
    values: np.ndarray  # (k,) mean member hardness per class
    ensemble_size: int
    estimator: Estimator


@dataclass(frozen=True)
class RatioVector:
    values: np.ndarray  # (k,) resampling ratios
    alpha: float


@dataclass(frozen=True)
class CountVector:
    values: np.ndarray  # (k,) integer target sizes


@dataclass(frozen=True)
class ClassPlanEntry:
    class_id: int
    original: int
    target: int
    action: str  # "oversample" | "undersample" | "keep"


@dataclass
class ResamplingPlan:
    strategy: str
    alpha: float
    seed: int
    classes: list[ClassPlanEntry]
    multiplicities: dict[int, int]
    synthetic: list[tuple[int, int, float]] = field(default_factory=list)

    def planned_size(self, labels: np.ndarray, class_id: int) -> int:
        """Copies plus synthetics the plan delivers for one class."""
        member_ids = np.flatnonzero(labels == class_id)
        copies = sum(self.multiplicities[int(i)] for i in member_ids)
        synth = sum(1 for a, _, _ in self.synthetic if labels[a] == class_id)
        return copies + synth

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "alpha": self.alpha,
            "seed": self.seed,
            "classes": [
                {"class_id": e.class_id, "original": e.original,
                 "target": e.target, "action": e.action}
                for e in self.classes
            ],
            "multiplicities": [[int(i), int(m)] for i, m in sorted(self.multiplicities.items())],
            "synthetic": [[int(a), int(b), float(t)] for a, b, t in self.synthetic],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "ResamplingPlan":
        return cls(
            strategy=data["strategy"],
            alpha=float(data["alpha"]),
            seed=int(data["seed"]),
            classes=[ClassPlanEntry(int(e["class_id"]), int(e["original"]),
                                    int(e["target"]), e["action"])
                     for e in data["classes"]],
            multiplicities={int(i): int(m) for i, m in data["multiplicities"]},
            synthetic=[(int(a), int(b), float(t)) for a, b, t in data["synthetic"]],
        )


def class_hardness(eh: EnsembleHardness, labels: np.ndarray,
                   k_classes: int | None = None) -> ClassHardness:
    """Mean hardness of each class's members."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(eh.values):
        raise IncompatibilityError("labels and hardness have different lengths")
    if k_classes is None:
        k_classes = int(labels.max()) + 1
    values = np.empty(k_classes, dtype=np.float64)
    for c in range(k_classes):
        members = labels == c
        if not members.any():
            raise DegenerateClassError(f"class {c} has no samples")
        values[c] = eh.values[members].mean()
    return ClassHardness(values, eh.ensemble_size, eh.estimator)


def base_ratios(ch: ClassHardness) -> RatioVector:
    """Ratios proportional to class hardness.

    Estimators where high values already mean hard map through directly;
    AUM is inverted, after shifting all class means into positive
    territory when any of them is nonpositive.
    """
    h = ch.values.astype(np.float64)
    if ch.estimator is Estimator.AUM:
        if h.min() <= 0.0:
            shift = abs(h.min()) + 1e-6
            warnings.warn(
                f"nonpositive class-mean AUM; shifting all means by {shift:.3g} "
                "before inversion", stacklevel=2)
            h = h + shift
        if h.min() <= 0.0:
            raise DegenerateInputError("class-mean AUM nonpositive even after shift")
        ratios = 1.0 / h
    else:
        if h.min() < 0.0:
            raise ValueError(f"{ch.estimator.value} class means must be nonnegative")
        if not h.any():
            raise DegenerateInputError(
                f"all {ch.estimator.value} class means are zero; no signal")
        ratios = h.copy()
    return RatioVector(ratios, alpha=1.0)


def scale_ratios(rv: RatioVector, alpha: float) -> RatioVector:
    """Widen or collapse the ratio spread around the mean ratio.

    alpha=1 returns the input values unchanged (exact short circuit) and
    alpha=0 collapses every ratio onto the mean.  Scaling that pushes a
    ratio to zero or below reports the offending class and the largest
    usable alpha.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    values = rv.values
    if alpha == 1.0:
        return RatioVector(values.copy(), alpha=1.0)
    mean = values.mean()
    scaled = mean + alpha * (values - mean)
    if alpha > 1.0 and (scaled <= 0.0).any():
        offender = int(np.argmin(scaled))
        deltas = mean - values
        shrinking = deltas > 0
        max_alpha = float((mean / deltas[shrinking]).min()) if shrinking.any() else np.inf
        raise OverScalingError(offender, max_alpha)
    return RatioVector(scaled, alpha=float(alpha))


def target_counts(rv: RatioVector, class_sizes: np.ndarray) -> CountVector:
    """Integer per-class targets that sum exactly to the original total.

    Real-valued targets are proportional to size times ratio, rescaled
    so the totals match, then rounded by largest remainder with ties
    broken by the smaller class id.
    """
    sizes = np.asarray(class_sizes, dtype=np.int64)
    if len(sizes) != len(rv.values):
        raise IncompatibilityError("ratio and size vectors have different lengths")
    if (sizes <= 0).any():
        raise ValueError("class sizes must be positive")
    ratios = rv.values
    if ratios.sum() <= 0.0:
        raise DegenerateInputError("total ratio is zero")
    raw = sizes * ratios
    total = int(sizes.sum())
    if raw.sum() <= 0.0:
        raise DegenerateInputError("all weighted class quotas are zero")
    quotas = raw * (total / raw.sum())
    base = np.floor(quotas).astype(np.int64)
    remainder = total - int(base.sum())
    if remainder < 0 or remainder > len(sizes):
        raise AssertionError("largest-remainder bookkeeping out of range")
    fracs = quotas - base
    order = np.lexsort((np.arange(len(sizes)), -fracs))
    base[order[:remainder]] += 1
    assert int(base.sum()) == total
    return CountVector(base)


def selection_weight(x, beta: float = 5.0):
    """Sampling weight over normalized rank x in [0, 1].

    Equals 1 at x=0 and 0.5 at x=1, strictly decreasing in between, so
    the extreme of a sorted ordering is picked about twice as often as
    its other end while mid-ranked samples taper gradually.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    arr = np.asarray(x, dtype=np.float64)
    if (arr < 0).any() or (arr > 1).any():
        raise ValueError("x must lie in [0, 1]")
    w = 0.5 + 0.5 * np.expm1(-beta * (1.0 - arr)) / np.expm1(-beta)
    return float(w) if np.isscalar(x) or arr.ndim == 0 else w


def undersample_plan(sample_ids, hardness, target: int,
                     estimator: Estimator) -> np.ndarray:
    """Ids retained after dropping the easiest samples down to `target`."""
    ids = np.asarray(sample_ids, dtype=np.int64)
    values = np.asarray(hardness, dtype=np.float64)
    if len(ids) != len(values):
        raise IncompatibilityError("ids and hardness have different lengths")
    if target > len(ids):
        raise ValueError(f"target {target} exceeds class size {len(ids)}")
    if target < 0:
        raise ValueError("target must be nonnegative")
    key = values if estimator.higher_is_harder else -values
    order = np.lexsort((ids, key))  # easiest first, ties by smaller id
    retained = ids[order[len(ids) - target:]]
    return np.sort(retained)


def _same_class_neighbors(ids: np.ndarray, features: np.ndarray,
                          n_neighbors: int) -> dict[int, np.ndarray]:
    X = features[ids]
    diffs = X[:, None, :] - X[None, :, :]
    dists = np.sqrt((diffs * diffs).sum(axis=-1))
    np.fill_diagonal(dists, np.inf)
    order = np.argsort(dists, axis=1, kind="stable")[:, :n_neighbors]
    return {int(ids[i]): ids[order[i]] for i in range(len(ids))}


def oversample_plan(sample_ids, hardness, target: int, strategy: str,
                    estimator: Estimator, fs: FeatureSet | None = None,
                    seed=0) -> tuple[dict[int, int], list[tuple[int, int, float]]]:
    """Multiplicities and synthetic recipes growing one class to `target`.

    random_dup duplicates uniformly; easy_weighted and hard_weighted
    draw with probabilities from `selection_weight` over the rank after
    sorting ascending or descending by hardness; smote emits (parent_a,
    parent_b, t) recipes with parent_b one of parent_a's same-class
    nearest neighbors and t uniform on [0, 1).
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    ids = np.sort(np.asarray(sample_ids, dtype=np.int64))
    values = np.asarray(hardness, dtype=np.float64)[np.argsort(np.asarray(sample_ids))]
    size = len(ids)
    if target < size:
        raise ValueError(f"target {target} below class size {size}")
    multiplicities = {int(i): 1 for i in ids}
    recipes: list[tuple[int, int, float]] = []
    extra = target - size
    if extra == 0:
        return multiplicities, recipes
    rng = np.random.default_rng(seed)

    if strategy == "smote" and fs is None:
        raise ValueError("smote needs the feature set to find neighbors")
    if strategy == "smote" and size == 1:
        warnings.warn("smote on a single-sample class falls back to duplication",
                      stacklevel=2)
        strategy = "random_dup"

    if strategy == "random_dup":
        picks = rng.choice(ids, size=extra, replace=True)
        for p in picks:
            multiplicities[int(p)] += 1
    elif strategy in ("easy_weighted", "hard_weighted"):
        key = values if estimator.higher_is_harder else -values
        if strategy == "hard_weighted":
            key = -key  # hardest first
        order = np.lexsort((ids, key))
        ranked = ids[order]
        x = np.zeros(size) if size == 1 else np.arange(size) / (size - 1)
        w = selection_weight(x)
        probs = w / w.sum()
        picks = rng.choice(ranked, size=extra, replace=True, p=probs)
        for p in picks:
            multiplicities[int(p)] += 1
    else:  # smote
        n_nb = min(SMOTE_NEIGHBORS, size - 1)
        neighbors = _same_class_neighbors(ids, fs.features, n_nb)
        for _ in range(extra):
            a = int(ids[rng.integers(size)])
            candidates = neighbors[a]
            b = int(candidates[rng.integers(len(candidates))])
            recipes.append((a, b, float(rng.random())))
    return multiplicities, recipes


def build_resampling_plan(eh: EnsembleHardness, labels, alpha: float = 1.0,
                          strategy: str = "random_dup",
                          fs: FeatureSet | None = None, seed: int = 0,
                          mode: str = "full") -> ResamplingPlan:
    """Full per-class plan: hardness -> ratios -> targets -> actions.

    Classes whose target falls below their size are undersampled, those
    above are oversampled, exact matches are kept.  The ablation modes
    skip one side, leaving those classes untouched.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    labels = np.asarray(labels, dtype=np.int64)
    ch = class_hardness(eh, labels)
    rv = scale_ratios(base_ratios(ch), alpha)
    sizes = np.bincount(labels, minlength=len(ch.values))
    counts = target_counts(rv, sizes)

    entries: list[ClassPlanEntry] = []
    multiplicities: dict[int, int] = {}
    synthetic: list[tuple[int, int, float]] = []
    for c in range(len(sizes)):
        member_ids = np.flatnonzero(labels == c)
        member_hardness = eh.values[member_ids]
        size = int(sizes[c])
        target = int(counts.values[c])
        if target < size and mode != "no_undersampling":
            retained = undersample_plan(member_ids, member_hardness, target, eh.estimator)
            kept = set(int(i) for i in retained)
            for i in member_ids:
                multiplicities[int(i)] = 1 if int(i) in kept else 0
            entries.append(ClassPlanEntry(c, size, target, "undersample"))
        elif target > size and mode != "no_oversampling":
            sub_seed = np.random.SeedSequence(entropy=seed, spawn_key=(c,))
            mult, recipes = oversample_plan(
                member_ids, member_hardness, target, strategy, eh.estimator,
                fs=fs, seed=sub_seed)
            multiplicities.update(mult)
            synthetic.extend(recipes)
            entries.append(ClassPlanEntry(c, size, target, "oversample"))
        else:
            for i in member_ids:
                multiplicities[int(i)] = 1
            entries.append(ClassPlanEntry(c, size, size, "keep"))
    return ResamplingPlan(strategy=strategy, alpha=float(alpha), seed=int(seed),
                          classes=entries, multiplicities=multiplicities,
                          synthetic=synthetic)


def materialize_resampling_plan(plan: ResamplingPlan, fs: FeatureSet) -> FeatureSet:
    """Apply a plan to real features: copies first, then interpolations."""
    from .geometry import make_feature_set

    rows = []
    labels = []
    for i in sorted(plan.multiplicities):
        m = plan.multiplicities[i]
        if m <= 0:
            continue
        rows.extend([fs.features[i]] * m)
        labels.extend([fs.labels[i]] * m)
    for a, b, t in plan.synthetic:
        rows.append(fs.features[a] + t * (fs.features[b] - fs.features[a]))
        labels.append(fs.labels[a])
    return make_feature_set(np.vstack(rows), np.asarray(labels), fs.k_classes)
