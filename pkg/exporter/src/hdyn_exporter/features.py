"""Thin converter from array archives to HFEA feature files.

Datasets prepared as .npz archives (keys `features` with shape (n, d)
and `labels` with shape (n,)) are exported, optionally restricted to an
explicit index list, into the binary feature layout the planning
toolkit reads.
"""
from __future__ import annotations

import argparse
import struct
import sys

import numpy as np

FEATURE_MAGIC = b"HFEA"
FEATURE_VERSION = 1
_FEATURE_HEADER = struct.Struct("<4sIQII")


def write_feature_file(features, labels, k_classes: int, path) -> None:
    features = np.ascontiguousarray(features, dtype="<f4")
    labels = np.ascontiguousarray(labels, dtype="<u2")
    n, d = features.shape
    with open(path, "wb") as fh:
        fh.write(_FEATURE_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, n, d,
                                      int(k_classes)))
        fh.write(labels.tobytes())
        fh.write(features.tobytes())


def export_npz(npz_path, out_path, indices=None) -> int:
    data = np.load(npz_path)
    features = np.asarray(data["features"], dtype=np.float64)
    labels = np.asarray(data["labels"], dtype=np.int64)
    if features.ndim > 2:
        features = features.reshape(features.shape[0], -1)
    if indices is not None:
        indices = np.asarray(indices, dtype=np.int64)
        features = features[indices]
        labels = labels[indices]
    k_classes = int(labels.max()) + 1
    write_feature_file(features, labels, k_classes, out_path)
    return len(labels)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hdyn-export-features",
        description="export an npz archive (features, labels) as an HFEA file")
    parser.add_argument("npz", help="archive with 'features' and 'labels' arrays")
    parser.add_argument("out", help="destination .hfea path")
    parser.add_argument("--indices", default=None,
                        help="comma-separated sample indices to keep")
    args = parser.parse_args(argv)
    indices = None
    if args.indices:
        indices = [int(t) for t in args.indices.split(",") if t]
    try:
        n = export_npz(args.npz, args.out, indices)
    except (OSError, KeyError, ValueError, IndexError) as exc:
        print(f"hdyn-export-features: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {n} samples to {args.out}")
    return 0


def entrypoint() -> None:
    sys.exit(main())
