"""Training-dynamics logs and the model-based hardness estimators.

A dynamics log stores, per epoch and per sample, the signals a training
loop can cheaply observe: the classification margin, the loss, a
correctness bit and optionally the L2 norm of the softmax error vector.
Three instance-level hardness estimators are derived from these signals:

* AUM        - mean margin across epochs (low values mean hard samples)
* EL2N       - softmax error norm at an early probe epoch (high = hard)
* Forgetting - count of correct-to-incorrect transitions (high = hard)

Per-model estimates from an ensemble are averaged elementwise into a
single ensemble estimate.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    CorruptionError,
    FormatError,
    IncompatibilityError,
    MissingChannelError,
    ValidationError,
)

MAGIC = b"HDYN"
FORMAT_VERSION = 1

#: Channel names in their fixed on-disk order (flag bits 0..3).
CHANNEL_ORDER = ("margin", "loss", "correct", "errnorm")
_CHANNEL_BIT = {name: 1 << i for i, name in enumerate(CHANNEL_ORDER)}

_HEADER = struct.Struct("<4sIQIIH")


class Estimator(str, Enum):
    AUM = "aum"
    EL2N = "el2n"
    FORGETTING = "forgetting"

    @property
    def higher_is_harder(self) -> bool:
        """Polarity of the estimator: True when large values mean hard."""
        return self is not Estimator.AUM


@dataclass(frozen=True)
class DynamicsLog:
    """Per-epoch, per-sample training signals for one model.

    Every present channel is an (n_epochs, n_samples) array; absent
    channels are None.  `correct` is boolean, the others are float32.
    """

    n_samples: int
    n_epochs: int
    model_id: str
    margin: np.ndarray | None = None
    loss: np.ndarray | None = None
    correct: np.ndarray | None = None
    errnorm: np.ndarray | None = None

    @property
    def channels(self) -> frozenset[str]:
        return frozenset(
            name for name in CHANNEL_ORDER if getattr(self, name) is not None
        )

    def validate(self) -> None:
        if self.n_samples < 1 or self.n_epochs < 1:
            raise ValidationError("log must cover at least one sample and epoch")
        if not self.channels:
            raise ValidationError("log carries no channels")
        shape = (self.n_epochs, self.n_samples)
        for name in CHANNEL_ORDER:
            chan = getattr(self, name)
            if chan is None:
                continue
            if chan.shape != shape:
                raise ValidationError(
                    f"channel {name} has shape {chan.shape}, expected {shape}"
                )
            if name == "correct":
                continue
            bad = ~np.isfinite(chan)
            if name in ("loss", "errnorm"):
                bad |= chan < 0
            if bad.any():
                e, i = np.argwhere(bad)[0]
                raise ValidationError(
                    f"channel {name} invalid at epoch {e}, sample {i}"
                )


@dataclass(frozen=True)
class HardnessVector:
    """Instance-level hardness from a single model."""

    estimator: Estimator
    values: np.ndarray
    model_id: str

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EnsembleHardness:
    """Elementwise mean of per-model hardness vectors."""

    estimator: Estimator
    ensemble_size: int
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def write_dynamics(log: DynamicsLog, path) -> None:
    """Serialize a validated log in the little-endian binary layout."""
    log.validate()
    flags = 0
    for name in log.channels:
        flags |= _CHANNEL_BIT[name]
    model_id = log.model_id.encode("utf-8")
    if len(model_id) > 0xFFFF:
        raise ValidationError("model_id longer than 65535 bytes")
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, log.n_samples, log.n_epochs, flags, len(model_id)),
        model_id,
    ]
    for name in CHANNEL_ORDER:
        chan = getattr(log, name)
        if chan is None:
            continue
        if name == "correct":
            packed = np.packbits(chan.astype(np.uint8), axis=1, bitorder="little")
            parts.append(packed.tobytes())
        else:
            parts.append(np.ascontiguousarray(chan, dtype="<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def parse_dynamics(path) -> DynamicsLog:
    """Read and validate a dynamics file.

    Raises FormatError on a bad magic or version, CorruptionError when
    the payload size disagrees with the header, and ValidationError on
    non-finite or out-of-range channel values.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise CorruptionError(f"{path}: file shorter than the fixed header")
    magic, version, n, n_epochs, flags, id_len = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if flags == 0 or flags & ~0b1111:
        raise FormatError(f"{path}: invalid channel flags {flags:#x}")
    offset = _HEADER.size
    if len(blob) < offset + id_len:
        raise CorruptionError(f"{path}: truncated model id")
    model_id = blob[offset:offset + id_len].decode("utf-8")
    offset += id_len

    row_bytes = (n + 7) // 8
    expected = 0
    for name in CHANNEL_ORDER:
        if flags & _CHANNEL_BIT[name]:
            expected += n_epochs * (row_bytes if name == "correct" else 4 * n)
    if len(blob) - offset != expected:
        raise CorruptionError(
            f"{path}: payload is {len(blob) - offset} bytes, header implies {expected}"
        )

    channels: dict[str, np.ndarray] = {}
    for name in CHANNEL_ORDER:
        if not flags & _CHANNEL_BIT[name]:
            continue
        if name == "correct":
            size = n_epochs * row_bytes
            raw = np.frombuffer(blob, dtype=np.uint8, count=size, offset=offset)
            bits = np.unpackbits(raw.reshape(n_epochs, row_bytes), axis=1, bitorder="little")
            channels[name] = bits[:, :n].astype(bool)
        else:
            size = n_epochs * n * 4
            raw = np.frombuffer(blob, dtype="<f4", count=n_epochs * n, offset=offset)
            arr = raw.reshape(n_epochs, n)
            arr.flags.writeable = False
            channels[name] = arr
        offset += size

    log = DynamicsLog(n_samples=n, n_epochs=n_epochs, model_id=model_id, **channels)
    log.validate()
    return log


def compute_aum(log: DynamicsLog) -> HardnessVector:
    """Mean margin over all logged epochs; low values flag hard samples."""
    if log.margin is None:
        raise MissingChannelError("margin channel required for AUM")
    values = log.margin.mean(axis=0, dtype=np.float64)
    return HardnessVector(Estimator.AUM, values, log.model_id)


def compute_el2n(log: DynamicsLog, probe_epoch: int = 20) -> HardnessVector:
    """Softmax error norm at one early epoch; high values flag hard samples."""
    if log.errnorm is None:
        raise MissingChannelError("errnorm channel required for EL2N")
    if not 0 <= probe_epoch < log.n_epochs:
        raise IndexError(
            f"probe epoch {probe_epoch} outside 0..{log.n_epochs - 1}"
        )
    values = log.errnorm[probe_epoch].astype(np.float64)
    return HardnessVector(Estimator.EL2N, values, log.model_id)


def compute_forgetting(log: DynamicsLog, never_learned_max: bool = False) -> HardnessVector:
    """Count correct-to-incorrect transitions between consecutive epochs.

    A sample that is never predicted correctly has no such transition and
    scores 0 by default; `never_learned_max` instead assigns it n_epochs,
    one more than any achievable event count.
    """
    if log.correct is None:
        raise MissingChannelError("correct channel required for Forgetting")
    if log.n_epochs < 2:
        raise ValueError("forgetting needs at least two epochs")
    c = log.correct
    events = (c[:-1] & ~c[1:]).sum(axis=0).astype(np.float64)
    if never_learned_max:
        never = ~c.any(axis=0)
        events[never] = float(log.n_epochs)
    return HardnessVector(Estimator.FORGETTING, events, log.model_id)


def aggregate_ensemble(vectors: list[HardnessVector]) -> EnsembleHardness:
    """Elementwise mean of same-kind, same-length hardness vectors."""
    if not vectors:
        raise IncompatibilityError("cannot aggregate an empty ensemble")
    first = vectors[0]
    for v in vectors[1:]:
        if v.estimator is not first.estimator:
            raise IncompatibilityError(
                f"mixed estimators: {first.estimator.value} vs {v.estimator.value}"
            )
        if len(v) != len(first):
            raise IncompatibilityError(
                f"mixed lengths: {len(first)} vs {len(v)}"
            )
    stacked = np.stack([v.values for v in vectors])
    return EnsembleHardness(first.estimator, len(vectors), stacked.mean(axis=0))


def hardness_order(values: np.ndarray, estimator: Estimator, hardest_first: bool = False) -> np.ndarray:
    """Sample indices ordered easiest-first (or hardest-first) by polarity.

    Ties are broken by the smaller sample id so every consumer of an
    ordering (pruning, undersampling, denoising) agrees bit for bit.
    """
    values = np.asarray(values, dtype=np.float64)
    key = values if estimator.higher_is_harder else -values
    if hardest_first:
        key = -key
    ids = np.arange(len(values))
    return np.lexsort((ids, key))
