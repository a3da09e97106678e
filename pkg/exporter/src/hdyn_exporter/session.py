"""Recording session that turns raw logits into an HDYN dynamics file.

A training loop calls `record_batch` with the sample ids, logits and
labels of every batch it sees, closes each epoch once all samples were
observed, and finally writes a binary file any HDYN consumer can parse.
All derived channels (margin, loss, correctness, softmax error norm)
are computed here from the logits, so the hook works with any framework
that can hand over a batch of logits as an array.
"""
from __future__ import annotations

import struct

import numpy as np

MAGIC = b"HDYN"
FORMAT_VERSION = 1
CHANNEL_ORDER = ("margin", "loss", "correct", "errnorm")
_CHANNEL_BIT = {name: 1 << i for i, name in enumerate(CHANNEL_ORDER)}
_HEADER = struct.Struct("<4sIQIIH")


class ProtocolError(Exception):
    """The caller violated the once-per-sample-per-epoch contract."""


class HookSession:
    """Buffers per-sample dynamics for a fixed number of epochs.

    The channel set is fixed when the session opens; every sample id in
    0..n_samples-1 must be recorded exactly once per epoch before
    `close_epoch`, and `write` requires exactly `n_epochs` closed
    epochs.
    """

    def __init__(self, n_samples: int, n_epochs: int, model_id: str,
                 channels=CHANNEL_ORDER):
        if n_samples < 1 or n_epochs < 1:
            raise ValueError("need at least one sample and one epoch")
        channels = tuple(channels)
        unknown = set(channels) - set(CHANNEL_ORDER)
        if unknown:
            raise ValueError(f"unknown channels: {sorted(unknown)}")
        if not channels:
            raise ValueError("at least one channel is required")
        self.n_samples = int(n_samples)
        self.n_epochs = int(n_epochs)
        self.model_id = str(model_id)
        self.channels = tuple(c for c in CHANNEL_ORDER if c in channels)
        self._epochs: dict[str, list[np.ndarray]] = {c: [] for c in self.channels}
        self._current: dict[str, np.ndarray] = {}
        self._seen = np.zeros(self.n_samples, dtype=bool)
        self._open_epoch()

    def _open_epoch(self) -> None:
        self._seen[:] = False
        for name in self.channels:
            dtype = bool if name == "correct" else np.float32
            self._current[name] = np.zeros(self.n_samples, dtype=dtype)

    @property
    def closed_epochs(self) -> int:
        return len(self._epochs[self.channels[0]])

    def record_batch(self, sample_ids, logits, labels) -> None:
        """Derive and buffer all channels for one batch of logits."""
        ids = np.asarray(sample_ids, dtype=np.int64)
        logits = np.asarray(logits, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if logits.ndim != 2 or len(ids) != logits.shape[0] or len(labels) != len(ids):
            raise ValueError("sample_ids, logits rows and labels must align")
        if ids.min(initial=0) < 0 or ids.max(initial=0) >= self.n_samples:
            raise ProtocolError("sample id outside the session range")
        if len(np.unique(ids)) != len(ids) or self._seen[ids].any():
            dupes = sorted(set(ids[self._seen[ids]].tolist())
                           | {int(i) for i in ids.tolist()
                              if list(ids.tolist()).count(int(i)) > 1})
            raise ProtocolError(f"samples recorded twice this epoch: {dupes[:10]}")
        if labels.min(initial=0) < 0 or labels.max(initial=0) >= logits.shape[1]:
            raise ValueError("label outside the logit width")

        rows = np.arange(len(ids))
        assigned = logits[rows, labels]
        masked = logits.copy()
        masked[rows, labels] = -np.inf
        margin = assigned - masked.max(axis=1)

        peak = logits.max(axis=1)
        logsum = peak + np.log(np.exp(logits - peak[:, None]).sum(axis=1))
        loss = logsum - assigned

        # argmax resolves ties toward the lowest class id
        correct = np.argmax(logits, axis=1) == labels

        probs = np.exp(logits - logsum[:, None])
        onehot = np.zeros_like(probs)
        onehot[rows, labels] = 1.0
        errnorm = np.sqrt(((probs - onehot) ** 2).sum(axis=1))

        derived = {"margin": margin, "loss": loss, "correct": correct,
                   "errnorm": errnorm}
        for name in self.channels:
            self._current[name][ids] = derived[name].astype(
                self._current[name].dtype)
        self._seen[ids] = True

    def close_epoch(self) -> None:
        """Seal the epoch; every sample must have been recorded."""
        if not self._seen.all():
            missing = np.flatnonzero(~self._seen)
            raise ProtocolError(
                f"epoch closed with {len(missing)} unrecorded samples: "
                f"{missing[:10].tolist()}")
        if self.closed_epochs >= self.n_epochs:
            raise ProtocolError("all declared epochs are already closed")
        for name in self.channels:
            self._epochs[name].append(self._current[name])
        self._open_epoch()

    def write(self, path) -> None:
        """Serialize the session as a little-endian HDYN file."""
        if self.closed_epochs != self.n_epochs:
            raise ProtocolError(
                f"{self.closed_epochs} epochs closed, {self.n_epochs} declared")
        flags = 0
        for name in self.channels:
            flags |= _CHANNEL_BIT[name]
        model_id = self.model_id.encode("utf-8")
        parts = [
            _HEADER.pack(MAGIC, FORMAT_VERSION, self.n_samples, self.n_epochs,
                         flags, len(model_id)),
            model_id,
        ]
        for name in self.channels:
            stacked = np.vstack(self._epochs[name])
            if name == "correct":
                packed = np.packbits(stacked.astype(np.uint8), axis=1,
                                     bitorder="little")
                parts.append(packed.tobytes())
            else:
                parts.append(np.ascontiguousarray(stacked, dtype="<f4").tobytes())
        with open(path, "wb") as fh:
            fh.write(b"".join(parts))
