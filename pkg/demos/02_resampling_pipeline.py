"""Walkthrough: ensemble hardness to a concrete resampling plan.

Shows the full chain: per-class mean hardness, ratio inversion for AUM,
the spread knob alpha, totals-preserving integer targets, and finally a
plan with per-sample multiplicities and interpolation recipes that can
be materialized into a new feature set.
"""
import numpy as np

import hardlab as hl
from hardlab.dynamics import compute_aum


def main():
    fs = hl.generate_blobs(hl.four_blob_spec(seed=1, per_class=250))
    cfg = hl.TrainConfig(epochs=30, lr_decay_epochs=(18, 25), seed=1)
    runs = hl.train_ensemble(fs, cfg, 4)
    eh = hl.aggregate_ensemble([compute_aum(r.log) for r in runs])
    print(f"ensemble of {eh.ensemble_size} models, estimator {eh.estimator.value}")

    ch = hl.class_hardness(eh, fs.labels)
    base = hl.base_ratios(ch)
    print("class-mean AUM:   ", np.round(ch.values, 3))
    print("base ratios (1/H):", np.round(base.values, 4))

    sizes = np.bincount(fs.labels)
    print("\nalpha sweep (targets always sum to", int(sizes.sum()), "):")
    for alpha in (0.0, 1.0, 2.0):
        targets = hl.target_counts(hl.scale_ratios(base, alpha), sizes)
        print(f"  alpha={alpha:.1f} -> targets {targets.values}")

    plan = hl.build_resampling_plan(eh, fs.labels, alpha=1.0, strategy="smote",
                                    fs=fs, seed=99)
    for entry in plan.classes:
        print(f"  class {entry.class_id}: {entry.original} -> {entry.target}"
              f" ({entry.action})")
    print(f"synthetic recipes: {len(plan.synthetic)}")

    resampled = hl.materialize_resampling_plan(plan, fs)
    print("materialized dataset size:", resampled.n_samples,
          "| class sizes:", np.bincount(resampled.labels))


if __name__ == "__main__":
    main()
