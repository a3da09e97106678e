"""Exact kNN search and data-based hardness metrics on raw features.

The metrics operate on a labeled feature matrix and split into three
levels:

* centroid metrics  DCC, DNOC, CDR           (instance level)
* kNN metrics       MDSC, ADSC, MDOC, ADOC, MDR, ADR, AD, N3, CP
* dispersion        V, MAXL, AVGL             (class level)

Neighborhood metrics use the k nearest Euclidean neighbors (k=40 by
default) excluding the sample itself.  When a neighborhood holds no
same-class member the same-class distances are reported as +inf; when
it holds no other-class member the other-class distances are reported
as 0.  Ratio metrics are formed after that replacement with the rules
zero numerator -> 0, infinite numerator -> +inf, zero denominator with
a positive numerator -> +inf.

`classify_distribution` sorts a metric's values, inspects the gradient
of the sorted curve and files the metric into one of three shape
families (logarithmic, inverse_cumulative, exponential), returning the
rank indices that split the samples into difficulty segments.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from ._util import round_half_up
from .errors import (
    CorruptionError,
    DegenerateClassError,
    DegenerateInputError,
    FormatError,
    IncompatibilityError,
    ValidationError,
)

DEFAULT_K = 40

INSTANCE_METRICS = (
    "DCC", "DNOC", "CDR",
    "MDSC", "ADSC", "MDOC", "ADOC", "MDR", "ADR", "AD", "N3", "CP",
)
CLASS_METRICS = ("V", "MAXL", "AVGL")

FEATURE_MAGIC = b"HFEA"
FEATURE_VERSION = 1
_FEATURE_HEADER = struct.Struct("<4sIQII")

FAMILIES = ("logarithmic", "inverse_cumulative", "exponential")


@dataclass(frozen=True)
class FeatureSet:
    """Dense feature matrix with integer class labels."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray    # (n,) int64
    k_classes: int

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def validate(self) -> None:
        if self.features.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        if self.labels.shape != (self.n_samples,):
            raise ValidationError("labels length must match the sample count")
        if not np.isfinite(self.features).all():
            raise ValidationError("features contain NaN or infinite entries")
        if self.k_classes < 1:
            raise ValidationError("need at least one class")
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= self.k_classes:
            raise ValidationError("labels outside 0..k_classes-1")
        if self.n_samples < self.k_classes:
            raise ValidationError("fewer samples than classes")

    def class_indices(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


def make_feature_set(features, labels, k_classes: int | None = None) -> FeatureSet:
    features = np.ascontiguousarray(features, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if k_classes is None:
        k_classes = int(labels.max()) + 1 if labels.size else 0
    fs = FeatureSet(features, labels, int(k_classes))
    fs.validate()
    return fs


def write_features(fs: FeatureSet, path) -> None:
    """Serialize features and labels in the little-endian binary layout."""
    fs.validate()
    if fs.k_classes > 0xFFFF:
        raise ValidationError("label storage is 16-bit; too many classes")
    with open(path, "wb") as fh:
        fh.write(_FEATURE_HEADER.pack(
            FEATURE_MAGIC, FEATURE_VERSION, fs.n_samples, fs.dim, fs.k_classes))
        fh.write(np.ascontiguousarray(fs.labels, dtype="<u2").tobytes())
        fh.write(np.ascontiguousarray(fs.features, dtype="<f4").tobytes())


def read_features(path) -> FeatureSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _FEATURE_HEADER.size:
        raise CorruptionError(f"{path}: file shorter than the fixed header")
    magic, version, n, dim, k_classes = _FEATURE_HEADER.unpack_from(blob)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FEATURE_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    offset = _FEATURE_HEADER.size
    expected = 2 * n + 4 * n * dim
    if len(blob) - offset != expected:
        raise CorruptionError(
            f"{path}: payload is {len(blob) - offset} bytes, header implies {expected}")
    labels = np.frombuffer(blob, dtype="<u2", count=n, offset=offset).astype(np.int64)
    offset += 2 * n
    feats = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=offset)
    features = feats.reshape(n, dim).astype(np.float64)
    return make_feature_set(features, labels, k_classes)


@dataclass(frozen=True)
class NeighborTable:
    """Exact k nearest neighbors per sample, ascending by distance."""

    k: int
    neighbor_ids: np.ndarray    # (n, k) int64
    neighbor_dists: np.ndarray  # (n, k) float64


@dataclass(frozen=True)
class MetricTable:
    """Values of one metric at instance or class level."""

    metric: str
    level: str  # "instance" or "class"
    values: np.ndarray
    warning_count: int = 0


@dataclass(frozen=True)
class FamilyReport:
    """Shape family of a sorted metric curve plus its division ranks."""

    family: str
    division_points: tuple[int, ...]
    gradient_threshold: float


def _pairwise_block(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    diffs = queries[:, None, :] - points[None, :, :]
    return np.sqrt((diffs * diffs).sum(axis=-1))


def build_knn(fs: FeatureSet, k: int = DEFAULT_K, n_threads: int = 1) -> NeighborTable:
    """Exact Euclidean k nearest neighbors, self excluded, ties by id.

    Small problems use direct blocked differences; large ones switch to
    the Gram expansion for tractability (last-ulp distance rounding may
    then differ from the naive formula, which only matters for exact
    tie reproduction at scales far beyond the oracle-checked regime).
    """
    fs.validate()
    n = fs.n_samples
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the sample count {n}")
    if k < 1:
        raise ValueError("k must be at least 1")
    X = fs.features
    use_gram = n * fs.dim > 2_000_000
    sq_norms = (X * X).sum(axis=1) if use_gram else None

    block = max(1, int(8_000_000 // max(1, n * fs.dim)))
    starts = list(range(0, n, block))

    def one_block(start: int) -> tuple[np.ndarray, np.ndarray]:
        stop = min(start + block, n)
        q = X[start:stop]
        if use_gram:
            d2 = sq_norms[start:stop, None] + sq_norms[None, :] - 2.0 * (q @ X.T)
            np.maximum(d2, 0.0, out=d2)
            dists = np.sqrt(d2)
        else:
            dists = _pairwise_block(q, X)
        rows = np.arange(start, stop)
        dists[rows - start, rows] = np.inf
        order = np.argsort(dists, axis=1, kind="stable")[:, :k]
        return order, np.take_along_axis(dists, order, axis=1)

    if n_threads > 1 and len(starts) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one_block, starts))
    else:
        results = [one_block(s) for s in starts]

    ids = np.vstack([r[0] for r in results]).astype(np.int64)
    dists = np.vstack([r[1] for r in results])
    return NeighborTable(k=k, neighbor_ids=ids, neighbor_dists=dists)


def class_centroids(fs: FeatureSet) -> np.ndarray:
    """Per-class mean feature vectors; every class must be populated."""
    cents = np.empty((fs.k_classes, fs.dim), dtype=np.float64)
    for c in range(fs.k_classes):
        members = fs.class_indices(c)
        if members.size == 0:
            raise DegenerateClassError(f"class {c} has no samples")
        cents[c] = fs.features[members].mean(axis=0)
    return cents


def centroid_metrics(fs: FeatureSet) -> dict[str, MetricTable]:
    """DCC, DNOC and their ratio CDR for every sample.

    DCC is the distance to the own-class centroid, DNOC the distance to
    the nearest other-class centroid, CDR their quotient.  A zero DNOC
    makes CDR +inf; such cases are counted on the CDR table.
    """
    fs.validate()
    cents = class_centroids(fs)
    diffs = fs.features[:, None, :] - cents[None, :, :]
    dists = np.sqrt((diffs * diffs).sum(axis=-1))  # (n, k)
    rows = np.arange(fs.n_samples)
    dcc = dists[rows, fs.labels]
    masked = dists.copy()
    masked[rows, fs.labels] = np.inf
    dnoc = masked.min(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cdr = np.where(dnoc == 0.0, np.inf, dcc / dnoc)
    n_warn = int((dnoc == 0.0).sum())
    if n_warn:
        warnings.warn(
            f"{n_warn} samples sit exactly on an other-class centroid; "
            "their CDR is reported as +inf", stacklevel=2)
    return {
        "DCC": MetricTable("DCC", "instance", dcc),
        "DNOC": MetricTable("DNOC", "instance", dnoc),
        "CDR": MetricTable("CDR", "instance", cdr, warning_count=n_warn),
    }


def _ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    if np.isinf(num) or den == 0.0:
        return np.inf
    return num / den


def knn_metrics(fs: FeatureSet, nt: NeighborTable) -> dict[str, MetricTable]:
    """Neighborhood metrics over the k nearest neighbors of each sample."""
    fs.validate()
    n = fs.n_samples
    if nt.neighbor_ids.shape[0] != n:
        raise IncompatibilityError("neighbor table was built for a different set")
    k = nt.k
    mdsc = np.empty(n)
    adsc = np.empty(n)
    mdoc = np.empty(n)
    adoc = np.empty(n)
    mdr = np.empty(n)
    adr = np.empty(n)
    ad = np.empty(n)
    n3 = np.empty(n)
    cp = np.empty(n)
    labels = fs.labels
    for i in range(n):
        ids = nt.neighbor_ids[i]
        dists = nt.neighbor_dists[i]
        same = labels[ids] == labels[i]
        d_same = dists[same]
        d_other = dists[~same]
        mdsc[i] = d_same.min() if d_same.size else np.inf
        adsc[i] = d_same.mean() if d_same.size else np.inf
        mdoc[i] = d_other.min() if d_other.size else 0.0
        adoc[i] = d_other.mean() if d_other.size else 0.0
        mdr[i] = _ratio(mdsc[i], mdoc[i])
        adr[i] = _ratio(adsc[i], adoc[i])
        ad[i] = dists.mean()
        n3[i] = 0.0 if same[0] else 1.0
        cp[i] = d_other.size / k
    out = {
        "MDSC": mdsc, "ADSC": adsc, "MDOC": mdoc, "ADOC": adoc,
        "MDR": mdr, "ADR": adr, "AD": ad, "N3": n3, "CP": cp,
    }
    return {m: MetricTable(m, "instance", v) for m, v in out.items()}


def dispersion_metrics(fs: FeatureSet) -> dict[str, MetricTable]:
    """Class-level spread measures from the per-class covariance spectrum.

    MAXL and AVGL are the largest and the mean covariance eigenvalue
    (unbiased m-1 normalization, the mean taken over all d eigenvalues).
    V is the square root of the determinant of the biased (1/m) second
    moment of the centered class matrix, evaluated through the singular
    values for stability; a rank-deficient class yields V = 0.
    """
    fs.validate()
    maxl = np.zeros(fs.k_classes)
    avgl = np.zeros(fs.k_classes)
    vol = np.zeros(fs.k_classes)
    d = fs.dim
    for c in range(fs.k_classes):
        members = fs.class_indices(c)
        m = members.size
        if m < 2:
            raise DegenerateClassError(f"class {c} needs at least 2 samples")
        Z = fs.features[members] - fs.features[members].mean(axis=0)
        s = np.linalg.svd(Z, compute_uv=False)
        lam = s * s / (m - 1)
        maxl[c] = lam[0] if lam.size else 0.0
        avgl[c] = lam.sum() / d
        if m <= d:
            continue  # centered rank is at most m-1 < d, so det = 0
        tol = s[0] * max(m, d) * np.finfo(np.float64).eps
        if s[-1] <= tol or (s.size < d):
            continue
        log_v = np.log(s[:d]).sum() - 0.5 * d * np.log(m)
        vol[c] = np.exp(log_v)
    return {
        "V": MetricTable("V", "class", vol),
        "MAXL": MetricTable("MAXL", "class", maxl),
        "AVGL": MetricTable("AVGL", "class", avgl),
    }


def compute_metric_tables(fs: FeatureSet, k: int = DEFAULT_K,
                          n_threads: int = 1) -> dict[str, MetricTable]:
    """All instance- and class-level metrics in one pass."""
    tables = centroid_metrics(fs)
    nt = build_knn(fs, k=min(k, fs.n_samples - 1), n_threads=n_threads)
    tables.update(knn_metrics(fs, nt))
    tables.update(dispersion_metrics(fs))
    return tables


def _bool_runs(flags: np.ndarray, value: bool) -> list[tuple[int, int]]:
    runs = []
    start = None
    for i, flag in enumerate(flags):
        if bool(flag) is value and start is None:
            start = i
        elif bool(flag) is not value and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def _plateau_runs(below: np.ndarray, window: int) -> list[tuple[int, int]]:
    # an above-threshold streak shorter than the persistence window does
    # not count as persistent either, so interior gaps that short are
    # absorbed into the surrounding plateau
    filled = below.copy()
    for a, b in _bool_runs(below, False):
        if a > 0 and b < len(below) - 1 and b - a + 1 < window:
            filled[a:b + 1] = True
    return [(a, b) for a, b in _bool_runs(filled, True) if b - a + 1 >= window]


def classify_distribution(values) -> FamilyReport:
    """File a metric into a shape family from its sorted-value gradient.

    The sorted curve's forward differences are thresholded at the bottom
    2.5% of their range.  Where the gradient stays below that threshold
    for at least 1% of consecutive ranks counts as a plateau.  A plateau
    only at the high-rank end gives the logarithmic family, only at the
    low-rank end the exponential family, and interior or two-sided
    plateaus the inverse_cumulative family.  Division points are the
    plateau boundaries; +inf values sort to the top block and gradients
    touching them are clamped to the largest finite gradient.
    """
    if isinstance(values, MetricTable):
        values = values.values
    v = np.asarray(values, dtype=np.float64)
    if np.isnan(v).any() or np.isneginf(v).any():
        raise ValidationError("metric values must be finite or +inf")
    finite = np.isfinite(v)
    if finite.sum() < 10:
        raise ValueError("need at least 10 finite values to classify")
    v = np.sort(v)
    n = v.shape[0]
    if v[0] == v[-1]:
        raise DegenerateInputError("constant values have no distribution shape")

    with np.errstate(invalid="ignore"):
        g = np.diff(v)
    both_inf = np.isinf(v[:-1]) & np.isinf(v[1:])
    g[both_inf] = 0.0
    finite_g = g[np.isfinite(g)]
    if finite_g.size == 0:
        raise DegenerateInputError("no finite gradient on the sorted curve")
    g_max = finite_g.max()
    g_min = finite_g.min()
    g = np.minimum(g, g_max)  # clamp the finite->inf jump
    if g_max == g_min:
        raise DegenerateInputError("gradient is constant; no plateau exists")
    threshold = g_min + 0.025 * (g_max - g_min)

    window = max(1, round_half_up(0.01 * n))
    below = g < threshold
    runs = _plateau_runs(below, window)
    if len(runs) == 1 and runs[0] == (0, n - 2):
        # gap filling erased the only structural jump (a step-like
        # curve); classify from the raw runs instead
        runs = [(a, b) for a, b in _bool_runs(below, True) if b - a + 1 >= window]
    if not runs:
        raise DegenerateInputError("no persistent low-gradient region found")
    if len(runs) == 1 and runs[0] == (0, n - 2):
        raise DegenerateInputError("plateau spans the entire curve")

    last_g = n - 2
    touches_low = any(a == 0 for a, _ in runs)
    touches_high = any(b == last_g for _, b in runs)
    boundaries: list[int] = []
    for a, b in runs:
        if a > 0:
            boundaries.append(a)
        if b < last_g:
            boundaries.append(b + 1)
    boundaries = sorted(set(boundaries))
    if not boundaries:
        raise DegenerateInputError("plateau spans the entire curve")

    interior = any(a > 0 and b < last_g for a, b in runs)
    if touches_high and not touches_low and not interior:
        family = "logarithmic"
        points = (boundaries[0],)
    elif touches_low and not touches_high and not interior:
        family = "exponential"
        points = (boundaries[-1],)
    else:
        family = "inverse_cumulative"
        lo = boundaries[0]
        hi = boundaries[-1]
        if hi == lo:
            hi = min(lo + 1, n - 1)
        points = (lo, hi)
    points = tuple(int(np.clip(p, 1, n - 1)) for p in points)
    return FamilyReport(family=family, division_points=points,
                        gradient_threshold=float(threshold))
