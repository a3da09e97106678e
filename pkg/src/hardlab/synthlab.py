"""Synthetic blob datasets and a native reference learner.

Gaussian class clouds with controllable overlap stand in for image
datasets at desk scale.  A linear softmax classifier trained with
mini-batch SGD (momentum, weight decay, step learning-rate decay)
produces genuine training dynamics: per epoch and per sample it logs
the margin, the cross-entropy loss, a correctness bit and the softmax
error norm, for every sample in the set.  Class precision and recall
come from a stratified 20% held-out split that the gradient updates
never see.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsLog
from .errors import TrainingDivergedError, ValidationError
from .geometry import FeatureSet, make_feature_set


@dataclass(frozen=True)
class BlobSpec:
    """Layout of Gaussian class clouds."""

    centers: np.ndarray          # (k, dim)
    scales: tuple[float, ...]    # per-class standard deviation
    per_class_n: tuple[int, ...]
    seed: int = 0

    @property
    def k_classes(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def validate(self) -> None:
        if len(self.scales) != self.k_classes or len(self.per_class_n) != self.k_classes:
            raise ValidationError("scales and per_class_n must have one entry per class")
        if any(s <= 0 for s in self.scales):
            raise ValueError("scales must be positive")
        if any(n < 2 for n in self.per_class_n):
            raise ValueError("every class needs at least 2 samples")


def generate_blobs(spec: BlobSpec) -> FeatureSet:
    """Sample the clouds; identical seeds give bit-identical features."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    rows = []
    labels = []
    for c in range(spec.k_classes):
        n_c = spec.per_class_n[c]
        rows.append(spec.centers[c] + spec.scales[c] * rng.standard_normal((n_c, spec.dim)))
        labels.extend([c] * n_c)
    return make_feature_set(np.vstack(rows), np.asarray(labels), spec.k_classes)


def four_blob_spec(seed: int = 0, per_class: int = 500) -> BlobSpec:
    """Three tight, well-separated clouds plus one wide central cloud.

    The central class overlaps all of its neighbors and is the hard
    class by construction; the outer three are easy.
    """
    centers = np.array([
        [-6.0, 0.0],
        [6.0, 0.0],
        [0.0, 6.0],
        [0.0, 0.0],
    ])
    return BlobSpec(centers=centers, scales=(0.8, 0.8, 0.8, 1.8),
                    per_class_n=(per_class,) * 4, seed=seed)


FOUR_BLOB_HARD_CLASS = 3


def two_blob_spec(seed: int = 0, per_class: int = 400,
                  separation: float = 12.0,
                  hard_scale: float = 0.4, easy_scale: float = 2.0) -> BlobSpec:
    """Two clouds with a uniform hardness gap between them.

    The learner's boundary settles right next to the tight class 0, so
    its samples collect uniformly smaller margins than the wide class 1
    sitting far on the other side: class 1 is the easy class, class 0
    the hard one, with no overlap between the two margin ranges.
    """
    centers = np.array([[0.0, 0.0], [separation, 0.0]])
    return BlobSpec(centers=centers, scales=(hard_scale, easy_scale),
                    per_class_n=(per_class, per_class), seed=seed)


TWO_BLOB_HARD_CLASS = 0


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 128
    lr_decay_epochs: tuple[int, ...] = (60, 120, 160)
    lr_decay_factor: float = 0.2
    seed: int = 0
    heldout_fraction: float = 0.2

    def validate(self, n_samples: int) -> None:
        if self.epochs < 2:
            raise ValueError("need at least 2 epochs")
        if self.batch_size < 1 or self.batch_size > n_samples:
            raise ValueError("batch size must be in 1..n_samples")
        if not 0.0 < self.heldout_fraction < 1.0:
            raise ValueError("heldout fraction must be in (0, 1)")


@dataclass(frozen=True)
class PerClassMetrics:
    precision: np.ndarray
    recall: np.ndarray
    precision_defined: np.ndarray  # False where no sample was predicted as c


@dataclass(frozen=True)
class ReferenceRun:
    log: DynamicsLog
    metrics: PerClassMetrics
    weights: np.ndarray      # (k, d)
    bias: np.ndarray         # (k,)
    train_ids: np.ndarray
    heldout_ids: np.ndarray

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(features @ self.weights.T + self.bias, axis=1)


def class_metrics(predictions, labels, k_classes: int | None = None) -> PerClassMetrics:
    """One-vs-rest precision and recall per class.

    Precision of a class nobody was assigned to is reported as 0 and
    flagged through `precision_defined`.
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels have different lengths")
    if k_classes is None:
        k_classes = int(max(predictions.max(), labels.max())) + 1
    precision = np.zeros(k_classes)
    recall = np.zeros(k_classes)
    defined = np.ones(k_classes, dtype=bool)
    for c in range(k_classes):
        tp = int(((predictions == c) & (labels == c)).sum())
        pred_c = int((predictions == c).sum())
        true_c = int((labels == c).sum())
        if pred_c == 0:
            defined[c] = False
        else:
            precision[c] = tp / pred_c
        recall[c] = tp / true_c if true_c else 0.0
    return PerClassMetrics(precision, recall, defined)


def _stratified_split(labels: np.ndarray, heldout_fraction: float,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    train_parts = []
    held_parts = []
    for c in range(int(labels.max()) + 1):
        members = np.flatnonzero(labels == c)
        members = rng.permutation(members)
        n_held = max(1, int(round(heldout_fraction * len(members))))
        held_parts.append(np.sort(members[:n_held]))
        train_parts.append(np.sort(members[n_held:]))
    return np.concatenate(train_parts), np.concatenate(held_parts)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def train_reference(fs: FeatureSet, cfg: TrainConfig,
                    model_id: str | None = None) -> ReferenceRun:
    """Train the linear softmax learner and log full dynamics.

    Gradient steps only ever touch the stratified training split, but
    the per-epoch channels are recorded for every sample in the set so
    downstream plans can index the whole dataset.
    """
    fs.validate()
    cfg.validate(fs.n_samples)
    rng = np.random.default_rng(cfg.seed)
    X = fs.features
    y = fs.labels
    n, d = X.shape
    k = fs.k_classes
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0

    train_ids, heldout_ids = _stratified_split(y, cfg.heldout_fraction, rng)
    Xt = X[train_ids]
    yt = y[train_ids]
    onehot_t = onehot[train_ids]

    W = 0.01 * rng.standard_normal((k, d))
    b = np.zeros(k)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)
    lr = cfg.learning_rate
    decay_at = set(cfg.lr_decay_epochs)

    margin = np.empty((cfg.epochs, n), dtype=np.float32)
    loss = np.empty((cfg.epochs, n), dtype=np.float32)
    correct = np.empty((cfg.epochs, n), dtype=bool)
    errnorm = np.empty((cfg.epochs, n), dtype=np.float32)

    n_train = len(train_ids)
    # divergence is detected from the epoch-end pass, so intermediate
    # overflow in a blown-up model is expected rather than a bug
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            if epoch in decay_at:
                lr *= cfg.lr_decay_factor
            perm = rng.permutation(n_train)
            for start in range(0, n_train, cfg.batch_size):
                batch = perm[start:start + cfg.batch_size]
                Xb = Xt[batch]
                logits = Xb @ W.T + b
                p = _softmax(logits)
                g = (p - onehot_t[batch]) / len(batch)
                gW = g.T @ Xb + cfg.weight_decay * W
                gb = g.sum(axis=0) + cfg.weight_decay * b
                vW = cfg.momentum * vW + gW
                vb = cfg.momentum * vb + gb
                W -= lr * vW
                b -= lr * vb

            logits = X @ W.T + b
            true_logit = logits[np.arange(n), y]
            others = logits.copy()
            others[np.arange(n), y] = -np.inf
            margin_e = true_logit - others.max(axis=1)
            m = logits.max(axis=1)
            logsum = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
            loss_e = logsum - true_logit
            p_all = _softmax(logits)
            err_e = np.sqrt(((p_all - onehot) ** 2).sum(axis=1))
            if not (np.isfinite(margin_e).all() and np.isfinite(loss_e).all()):
                raise TrainingDivergedError(epoch)
            e = epoch - 1
            margin[e] = margin_e
            loss[e] = loss_e
            correct[e] = np.argmax(logits, axis=1) == y
            errnorm[e] = err_e

    log = DynamicsLog(
        n_samples=n, n_epochs=cfg.epochs,
        model_id=model_id or f"ref-seed{cfg.seed}",
        margin=margin, loss=loss, correct=correct, errnorm=errnorm,
    )
    log.validate()
    preds = np.argmax(X[heldout_ids] @ W.T + b, axis=1)
    metrics = class_metrics(preds, y[heldout_ids], k)
    return ReferenceRun(log=log, metrics=metrics, weights=W, bias=b,
                        train_ids=train_ids, heldout_ids=heldout_ids)


def train_ensemble(fs: FeatureSet, cfg: TrainConfig, n_models: int,
                   model_prefix: str = "ref") -> list[ReferenceRun]:
    """Independent runs whose seeds step from cfg.seed."""
    from dataclasses import replace

    runs = []
    for i in range(n_models):
        member = replace(cfg, seed=cfg.seed + i)
        runs.append(train_reference(fs, member, model_id=f"{model_prefix}-{cfg.seed + i}"))
    return runs
