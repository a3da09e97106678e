"""Command-line front end composing the planning pipeline.

Every subcommand accepts --seed, --out-dir and --threads (environment
variable HLAB_THREADS is the fallback), writes its artifacts plus a
`<command>_manifest.json` echoing the effective parameters, and is
deterministic under a fixed seed.  Exit codes: 0 success, 1 module
error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .denoise import denoise_plan
from .dynamics import (
    Estimator,
    aggregate_ensemble,
    compute_aum,
    compute_el2n,
    compute_forgetting,
    parse_dynamics,
    write_dynamics,
)
from .errors import HardlabError
from .geometry import (
    INSTANCE_METRICS,
    classify_distribution,
    compute_metric_tables,
    read_features,
    write_features,
)
from .pruning import PruningPlan, clp_plan, dlp_plan, overlap, per_class_removals
from .resampling import (
    base_ratios,
    build_resampling_plan,
    class_hardness,
    scale_ratios,
    target_counts,
)
from .stability import ensemble_sweep, spearman_class_correlation
from .synthlab import BlobSpec, TrainConfig, four_blob_spec, generate_blobs, train_reference

ESTIMATORS = {e.value: e for e in Estimator}


def _float_repr(x) -> str:
    return repr(float(x))


def _write_json(path: Path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    inputs, outputs, status: str = "ok", error: str | None = None) -> Path:
    params = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": command,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": params.get("seed"),
        "parameters": {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()},
        "version": __version__,
        "status": status,
    }
    if error is not None:
        manifest["error"] = error
    path = out_dir / f"{command.replace('-', '_')}_manifest.json"
    _write_json(path, manifest)
    return path


def _load_hardness_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["sample_id", "hardness"]:
            raise HardlabError(f"{path}: expected a sample_id,hardness CSV")
        pairs = [(int(r[0]), float(r[1])) for r in reader]
    pairs.sort()
    if [i for i, _ in pairs] != list(range(len(pairs))):
        raise HardlabError(f"{path}: sample ids must cover 0..n-1")
    return np.array([v for _, v in pairs])


def _ensemble_from_args(args) -> "EnsembleHardness":
    from .dynamics import EnsembleHardness

    values = _load_hardness_csv(args.hardness)
    return EnsembleHardness(ESTIMATORS[args.estimator], args.ensemble_size, values)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t)


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t)


# ---------------------------------------------------------------- commands

def cmd_synth(args, out_dir: Path) -> tuple[list, list]:
    if args.preset == "four-blob":
        spec = four_blob_spec(seed=args.seed, per_class=args.per_class[0])
    else:
        centers = np.array([[float(v) for v in pt.split(",")]
                            for pt in args.centers.split(";")])
        per_class = args.per_class if len(args.per_class) > 1 \
            else args.per_class * len(centers)
        scales = args.scales if len(args.scales) > 1 else args.scales * len(centers)
        spec = BlobSpec(centers=centers, scales=scales,
                        per_class_n=per_class, seed=args.seed)
    fs = generate_blobs(spec)
    out = out_dir / "features.hfea"
    write_features(fs, out)
    return [], [out]


def cmd_train_ref(args, out_dir: Path) -> tuple[list, list]:
    fs = read_features(args.features)
    cfg = TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                      momentum=args.momentum, weight_decay=args.weight_decay,
                      batch_size=args.batch_size,
                      lr_decay_epochs=args.decay_epochs,
                      lr_decay_factor=args.decay_factor, seed=args.seed)
    model_id = args.model_id or f"ref-seed{args.seed}"
    run = train_reference(fs, cfg, model_id=model_id)
    dyn_path = out_dir / f"dynamics_{model_id}.hdyn"
    write_dynamics(run.log, dyn_path)
    metrics_path = out_dir / f"metrics_{model_id}.csv"
    rows = [
        (c, _float_repr(run.metrics.precision[c]), _float_repr(run.metrics.recall[c]),
         int(run.metrics.precision_defined[c]))
        for c in range(fs.k_classes)
    ]
    _write_csv(metrics_path, ["class_id", "precision", "recall", "precision_defined"], rows)
    return [args.features], [dyn_path, metrics_path]


def cmd_estimate(args, out_dir: Path) -> tuple[list, list]:
    vectors = []
    for path in args.dynamics:
        log = parse_dynamics(path)
        if args.estimator == "aum":
            vectors.append(compute_aum(log))
        elif args.estimator == "el2n":
            vectors.append(compute_el2n(log, probe_epoch=args.probe_epoch))
        else:
            vectors.append(compute_forgetting(log, never_learned_max=args.never_learned_max))
    eh = aggregate_ensemble(vectors)
    out = out_dir / "hardness.csv"
    _write_csv(out, ["sample_id", "hardness"],
               [(i, _float_repr(v)) for i, v in enumerate(eh.values)])
    return list(args.dynamics), [out]


def cmd_ratios(args, out_dir: Path) -> tuple[list, list]:
    eh = _ensemble_from_args(args)
    fs = read_features(args.features)
    ch = class_hardness(eh, fs.labels, fs.k_classes)
    rv = scale_ratios(base_ratios(ch), args.alpha)
    sizes = np.bincount(fs.labels, minlength=fs.k_classes)
    counts = target_counts(rv, sizes)
    base = base_ratios(ch)
    out = out_dir / "ratios.csv"
    rows = [
        (c, int(sizes[c]), _float_repr(ch.values[c]), _float_repr(base.values[c]),
         _float_repr(rv.values[c]), int(counts.values[c]))
        for c in range(fs.k_classes)
    ]
    _write_csv(out, ["class_id", "size", "class_hardness", "base_ratio",
                     "scaled_ratio", "target"], rows)
    return [args.hardness, args.features], [out]


def cmd_resample(args, out_dir: Path) -> tuple[list, list]:
    eh = _ensemble_from_args(args)
    fs = read_features(args.features)
    plan = build_resampling_plan(eh, fs.labels, alpha=args.alpha,
                                 strategy=args.strategy, fs=fs,
                                 seed=args.seed, mode=args.mode)
    out = out_dir / "resampling_plan.json"
    _write_json(out, plan.to_json_dict())
    return [args.hardness, args.features], [out]


def cmd_prune(args, out_dir: Path) -> tuple[list, list]:
    eh = _ensemble_from_args(args)
    fs = read_features(args.features)
    fn = dlp_plan if args.mode == "dlp" else clp_plan
    plan = fn(eh, fs.labels, args.rate)
    plan_path = out_dir / "pruning_plan.json"
    _write_json(plan_path, plan.to_json_dict())
    removed = per_class_removals(plan, fs.labels)
    sizes = np.bincount(fs.labels, minlength=fs.k_classes)
    hist_path = out_dir / "pruning_histogram.csv"
    _write_csv(hist_path, ["class_id", "removed", "class_size", "removed_fraction"],
               [(c, int(removed[c]), int(sizes[c]), _float_repr(removed[c] / sizes[c]))
                for c in range(fs.k_classes)])
    return [args.hardness, args.features], [plan_path, hist_path]


def cmd_overlap(args, out_dir: Path) -> tuple[list, list]:
    with open(args.plan_a) as fh:
        plan_a = PruningPlan.from_json_dict(json.load(fh))
    with open(args.plan_b) as fh:
        plan_b = PruningPlan.from_json_dict(json.load(fh))
    frac_a, frac_b = overlap(plan_a, plan_b)
    out = out_dir / "overlap.json"
    _write_json(out, {
        "shared_over_a": frac_a,
        "shared_over_b": frac_b,
        "size_a": len(plan_a.pruned_ids),
        "size_b": len(plan_b.pruned_ids),
    })
    return [args.plan_a, args.plan_b], [out]


def cmd_stability(args, out_dir: Path) -> tuple[list, list]:
    inputs: list = []
    if args.task == "class-accuracy":
        per_model = []
        for path in args.metrics:
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                rows = sorted(reader, key=lambda r: int(r["class_id"]))
                per_model.append([float(r["recall"]) for r in rows])
            inputs.append(path)
        curve = ensemble_sweep(per_model, task="class_accuracy")
    else:
        vectors = []
        for path in args.dynamics:
            log = parse_dynamics(path)
            if args.estimator == "aum":
                vectors.append(compute_aum(log))
            elif args.estimator == "el2n":
                vectors.append(compute_el2n(log, probe_epoch=args.probe_epoch))
            else:
                vectors.append(compute_forgetting(log))
            inputs.append(path)
        fs = read_features(args.features)
        inputs.append(args.features)
        task = args.task.replace("-", "_")
        curve = ensemble_sweep(vectors, fs.labels, task=task,
                               alpha=args.alpha, rates=args.rates)
    out = out_dir / "stability.csv"
    rows = []
    for step, j in enumerate(curve.x):
        for col, series in enumerate(curve.series):
            rows.append((int(j), curve.task, series, _float_repr(curve.y[step, col])))
    _write_csv(out, ["j", "metric", "class_or_rate", "value"], rows)
    return inputs, [out]


def cmd_denoise(args, out_dir: Path) -> tuple[list, list]:
    eh = _ensemble_from_args(args)
    fs = read_features(args.features)
    plan = denoise_plan(eh, fs.labels, mode=args.mode, fraction=args.fraction)
    plan_path = out_dir / "denoise_plan.json"
    _write_json(plan_path, plan.to_json_dict())
    hist_path = out_dir / "denoise_histogram.csv"
    sizes = np.bincount(fs.labels, minlength=fs.k_classes)
    _write_csv(hist_path, ["class_id", "removed", "class_size", "removed_fraction"],
               [(c, int(plan.per_class_removed[c]), int(sizes[c]),
                 _float_repr(plan.per_class_removed[c] / sizes[c]))
                for c in range(fs.k_classes)])
    return [args.hardness, args.features], [plan_path, hist_path]


def cmd_metrics(args, out_dir: Path) -> tuple[list, list]:
    fs = read_features(args.features)
    tables = compute_metric_tables(fs, k=args.k, n_threads=args.threads)
    values_path = out_dir / "metric_values.csv"
    rows = []
    for name in sorted(tables):
        table = tables[name]
        for i, v in enumerate(table.values):
            rows.append((i, name, "inf" if np.isinf(v) else _float_repr(v)))
    _write_csv(values_path, ["sample_id", "metric", "value"], rows)
    outputs = [values_path]
    for name in INSTANCE_METRICS:
        report_path = out_dir / f"family_{name}.json"
        try:
            report = classify_distribution(tables[name])
            _write_json(report_path, {
                "metric": name,
                "family": report.family,
                "division_points": list(report.division_points),
                "gradient_threshold": report.gradient_threshold,
            })
        except HardlabError as exc:
            _write_json(report_path, {"metric": name, "error": str(exc)})
        except ValueError as exc:
            _write_json(report_path, {"metric": name, "error": str(exc)})
        outputs.append(report_path)
    return [args.features], outputs


def cmd_correlate(args, out_dir: Path) -> tuple[list, list]:
    eh = _ensemble_from_args(args)
    fs = read_features(args.features)
    ch = class_hardness(eh, fs.labels, fs.k_classes)
    with open(args.accuracy, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = sorted(reader, key=lambda r: int(r["class_id"]))
        acc = np.array([float(r["recall"]) for r in rows])
    rho, p = spearman_class_correlation(ch, acc)
    out = out_dir / "correlation.json"
    _write_json(out, {"rho": rho, "p": p, "k_classes": fs.k_classes})
    return [args.hardness, args.features, args.accuracy], [out]


def cmd_report(args, out_dir: Path) -> tuple[list, list]:
    """Full pipeline: estimate, ratios, plans, summary report."""
    vectors = []
    for path in args.dynamics:
        log = parse_dynamics(path)
        vectors.append(compute_aum(log) if args.estimator == "aum"
                       else compute_el2n(log, probe_epoch=args.probe_epoch)
                       if args.estimator == "el2n" else compute_forgetting(log))
    eh = aggregate_ensemble(vectors)
    fs = read_features(args.features)

    hardness_path = out_dir / "hardness.csv"
    _write_csv(hardness_path, ["sample_id", "hardness"],
               [(i, _float_repr(v)) for i, v in enumerate(eh.values)])

    ch = class_hardness(eh, fs.labels, fs.k_classes)
    rv = scale_ratios(base_ratios(ch), args.alpha)
    sizes = np.bincount(fs.labels, minlength=fs.k_classes)
    counts = target_counts(rv, sizes)

    resampling = build_resampling_plan(eh, fs.labels, alpha=args.alpha,
                                       strategy=args.strategy, fs=fs, seed=args.seed)
    resample_path = out_dir / "resampling_plan.json"
    _write_json(resample_path, resampling.to_json_dict())

    dlp = dlp_plan(eh, fs.labels, args.rate)
    clp = clp_plan(eh, fs.labels, args.rate)
    dlp_path = out_dir / "dlp_plan.json"
    clp_path = out_dir / "clp_plan.json"
    _write_json(dlp_path, dlp.to_json_dict())
    _write_json(clp_path, clp.to_json_dict())
    dn = denoise_plan(eh, fs.labels, mode="fraction", fraction=args.fraction)
    denoise_path = out_dir / "denoise_plan.json"
    _write_json(denoise_path, dn.to_json_dict())

    frac_a, frac_b = overlap(dlp, clp)
    report = {
        "n_samples": fs.n_samples,
        "k_classes": fs.k_classes,
        "estimator": args.estimator,
        "ensemble_size": eh.ensemble_size,
        "alpha": args.alpha,
        "class_hardness": [float(v) for v in ch.values],
        "targets": [int(v) for v in counts.values],
        "class_sizes": [int(v) for v in sizes],
        "pruning": {
            "rate": args.rate,
            "dlp_pruned": len(dlp.pruned_ids),
            "clp_pruned": len(clp.pruned_ids),
            "overlap_dlp_clp": [frac_a, frac_b],
        },
        "denoise_removed": len(dn.removed_ids),
    }
    report_path = out_dir / "report.json"
    _write_json(report_path, report)
    return (list(args.dynamics) + [args.features],
            [hardness_path, resample_path, dlp_path, clp_path, denoise_path, report_path])


# ------------------------------------------------------------------ parser

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("HLAB_THREADS", "1")))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic blob dataset")
    p.add_argument("--preset", choices=["four-blob", "custom"], default="custom")
    p.add_argument("--centers", default="0,0;6,0",
                   help="semicolon-separated center coordinates")
    p.add_argument("--scales", type=_parse_floats, default=(1.0,))
    p.add_argument("--per-class", type=_parse_ints, default=(100,))
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-ref", help="train the reference learner")
    p.add_argument("--features", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--decay-epochs", type=_parse_ints, default=(60, 120, 160))
    p.add_argument("--decay-factor", type=float, default=0.2)
    p.add_argument("--model-id", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_train_ref)

    p = sub.add_parser("estimate", help="ensemble hardness from dynamics files")
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), required=True)
    p.add_argument("--dynamics", nargs="+", required=True)
    p.add_argument("--probe-epoch", type=int, default=20)
    p.add_argument("--never-learned-max", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("ratios", help="class ratios and integer targets")
    p.add_argument("--hardness", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--ensemble-size", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_ratios)

    p = sub.add_parser("resample", help="build a resampling plan")
    p.add_argument("--hardness", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--strategy", choices=["random_dup", "smote", "easy_weighted",
                                          "hard_weighted"], default="random_dup")
    p.add_argument("--mode", choices=["full", "no_oversampling", "no_undersampling"],
                   default="full")
    p.add_argument("--ensemble-size", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("prune", help="build a pruning plan")
    p.add_argument("--hardness", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), required=True)
    p.add_argument("--mode", choices=["dlp", "clp"], required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--ensemble-size", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("overlap", help="compare two pruning plans")
    p.add_argument("--plan-a", required=True)
    p.add_argument("--plan-b", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("stability", help="ensemble-size sweep curves")
    p.add_argument("--task", choices=["resampling-counts", "pruning-indices",
                                      "class-accuracy"], required=True)
    p.add_argument("--dynamics", nargs="*", default=[])
    p.add_argument("--metrics", nargs="*", default=[])
    p.add_argument("--features", default=None)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), default="aum")
    p.add_argument("--probe-epoch", type=int, default=20)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--rates", type=_parse_floats, default=(0.1,))
    _add_common(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("denoise", help="hardest-sample removal plan")
    p.add_argument("--hardness", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), required=True)
    p.add_argument("--mode", choices=["fraction", "elbow"], required=True)
    p.add_argument("--fraction", type=float, default=None)
    p.add_argument("--ensemble-size", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("metrics", help="data-based metric tables and families")
    p.add_argument("--features", required=True)
    p.add_argument("--k", type=int, default=40)
    _add_common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("correlate", help="class hardness vs class accuracy")
    p.add_argument("--hardness", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), required=True)
    p.add_argument("--accuracy", required=True,
                   help="per-class metrics CSV from train-ref")
    p.add_argument("--ensemble-size", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("report", help="run the full pipeline and summarize")
    p.add_argument("--features", required=True)
    p.add_argument("--dynamics", nargs="+", required=True)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS), default="aum")
    p.add_argument("--probe-epoch", type=int, default=20)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--strategy", choices=["random_dup", "smote", "easy_weighted",
                                          "hard_weighted"], default="random_dup")
    p.add_argument("--rate", type=float, default=0.2)
    p.add_argument("--fraction", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        inputs, outputs = args.func(args, out_dir)
    except (HardlabError, ValueError, IndexError, OSError) as exc:
        print(f"hardlab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        _write_manifest(out_dir, args.command, args, [], [],
                        status="error", error=str(exc))
        return 1
    manifest = _write_manifest(out_dir, args.command, args, inputs, outputs)
    print(f"wrote {len(outputs)} artifacts and {manifest.name} to {out_dir}")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
