"""Independent brute-force reference implementations used by the tests.

Everything here recomputes results from first principles (full scans,
explicit loops, enumeration) without touching the library's data
structures, so agreement with the library is meaningful.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def knn_oracle(features: np.ndarray, labels: np.ndarray, k: int):
    """All twelve instance-level metrics by a full O(n^2) scan.

    Returns a dict of metric name -> (n,) array.  One full distance row
    is computed per sample and the neighbor list re-sorted from scratch
    with python's tuple sort (ascending distance, ties by the smaller
    sample id, the sample itself excluded).
    """
    n = len(features)
    k_classes = int(labels.max()) + 1

    centroids = np.vstack([features[labels == c].mean(axis=0) for c in range(k_classes)])

    out = {name: np.empty(n) for name in
           ("DCC", "DNOC", "CDR", "MDSC", "ADSC", "MDOC", "ADOC",
            "MDR", "ADR", "AD", "N3", "CP")}
    for i in range(n):
        x = features[i]
        y = labels[i]
        cent_d = np.sqrt(((centroids - x) ** 2).sum(axis=1))
        dcc = float(cent_d[y])
        dnoc = min(float(cent_d[c]) for c in range(k_classes) if c != y) \
            if k_classes > 1 else np.inf
        out["DCC"][i] = dcc
        out["DNOC"][i] = dnoc
        out["CDR"][i] = np.inf if dnoc == 0.0 else dcc / dnoc

        row = np.sqrt(((features - x) ** 2).sum(axis=1))
        pairs = sorted((float(row[j]), j) for j in range(n) if j != i)
        nearest = pairs[:k]
        d_same = np.array([d for d, j in nearest if labels[j] == y])
        d_other = np.array([d for d, j in nearest if labels[j] != y])
        mdsc = d_same.min() if d_same.size else np.inf
        adsc = d_same.mean() if d_same.size else np.inf
        mdoc = d_other.min() if d_other.size else 0.0
        adoc = d_other.mean() if d_other.size else 0.0
        out["MDSC"][i] = mdsc
        out["ADSC"][i] = adsc
        out["MDOC"][i] = mdoc
        out["ADOC"][i] = adoc
        out["MDR"][i] = ratio_rule(mdsc, mdoc)
        out["ADR"][i] = ratio_rule(adsc, adoc)
        out["AD"][i] = np.array([d for d, _ in nearest]).mean()
        out["N3"][i] = 0.0 if labels[nearest[0][1]] == y else 1.0
        out["CP"][i] = len(d_other) / k
    return out


def ratio_rule(num: float, den: float) -> float:
    """Replacement rule for ratio metrics over the neighborhood values."""
    if num == 0.0:
        return 0.0
    if math.isinf(num) or den == 0.0:
        return math.inf
    return num / den


def brute_knn(features: np.ndarray, k: int):
    """(ids, dists) per sample via exhaustive sorted scan."""
    n = len(features)
    ids = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k))
    for i in range(n):
        pairs = []
        for j in range(n):
            if j == i:
                continue
            d = math.sqrt(float(((features[i] - features[j]) ** 2).sum()))
            pairs.append((d, j))
        pairs.sort()
        ids[i] = [j for _, j in pairs[:k]]
        dists[i] = [d for d, _ in pairs[:k]]
    return ids, dists


def groupby_mean(values: np.ndarray, labels: np.ndarray) -> np.ndarray:
    k = int(labels.max()) + 1
    return np.array([np.mean([v for v, l in zip(values, labels) if l == c])
                     for c in range(k)])


def apportion(quotas, total: int) -> list[int]:
    """Largest-remainder rounding, ties to the smaller index."""
    floors = [math.floor(q) for q in quotas]
    rem = total - sum(floors)
    fracs = sorted(range(len(quotas)),
                   key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in fracs[:rem]:
        floors[i] += 1
    return floors


def easiest_ids(values: np.ndarray, higher_is_harder: bool, count: int) -> set[int]:
    """Sort-and-slice oracle for easiest-first selections."""
    keyed = sorted(range(len(values)),
                   key=lambda i: ((values[i] if higher_is_harder else -values[i]), i))
    return set(keyed[:count])


def hardest_ids(values: np.ndarray, higher_is_harder: bool, count: int) -> set[int]:
    keyed = sorted(range(len(values)),
                   key=lambda i: ((-values[i] if higher_is_harder else values[i]), i))
    return set(keyed[:count])


def spearman_rho(x, y) -> float:
    """Pearson correlation of mid-ranks, computed with plain python."""
    def ranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        r = [0.0] * len(v)
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            for t in range(i, j + 1):
                r[order[t]] = (i + j) / 2 + 1
            i = j + 1
        return r

    rx, ry = ranks(list(x)), ranks(list(y))
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den


def spearman_exact_p(x, y) -> tuple[float, float]:
    """Two-sided permutation p by full enumeration."""
    rho = spearman_rho(x, y)
    y = list(y)
    count = 0
    total = 0
    for perm in itertools.permutations(y):
        if abs(spearman_rho(x, perm)) >= abs(rho) - 1e-12:
            count += 1
        total += 1
    return rho, count / total


def confusion_metrics(predictions, labels, k: int):
    """Per-class precision and recall from an explicit confusion matrix."""
    cm = np.zeros((k, k), dtype=int)
    for p, t in zip(predictions, labels):
        cm[t, p] += 1
    precision = np.zeros(k)
    recall = np.zeros(k)
    for c in range(k):
        pred_c = cm[:, c].sum()
        true_c = cm[c, :].sum()
        precision[c] = cm[c, c] / pred_c if pred_c else 0.0
        recall[c] = cm[c, c] / true_c if true_c else 0.0
    return precision, recall
