"""Walkthrough: how stable are hardness-based decisions in ensemble size?

Grows a prefix ensemble one model at a time and traces two transition
metrics: the per-class absolute change in resampling targets and the
percentage of freshly pruned indices.  The smallest ensemble below a
chosen tolerance is the recommended operating point.  A Spearman check
relates class hardness to held-out class recall.
"""
import numpy as np

import hardlab as hl
from hardlab.dynamics import compute_aum


def main():
    fs = hl.generate_blobs(hl.four_blob_spec(seed=3, per_class=250))
    cfg = hl.TrainConfig(epochs=30, lr_decay_epochs=(18, 25), seed=30)
    runs = hl.train_ensemble(fs, cfg, 8)
    vectors = [compute_aum(r.log) for r in runs]

    counts_curve = hl.ensemble_sweep(vectors, fs.labels, task="resampling_counts")
    print("absolute target change per class when adding model j+1:")
    for step, j in enumerate(counts_curve.x):
        print(f"  j={j}: {counts_curve.y[step].astype(int)}")

    prune_curve = hl.ensemble_sweep(vectors, fs.labels, task="pruning_indices",
                                    rates=(0.1, 0.3))
    print("\npruned-index churn (%) at rates 0.1 / 0.3:")
    for step, j in enumerate(prune_curve.x):
        print(f"  j={j}: {np.round(prune_curve.y[step], 2)}")

    j = hl.recommended_ensemble_size(
        [counts_curve, prune_curve],
        thresholds={"resampling_counts": 10.0, "pruning_indices": 5.0})
    print("\nsmallest ensemble with both metrics inside tolerance:", j)

    eh = hl.aggregate_ensemble(vectors)
    ch = hl.class_hardness(eh, fs.labels)
    recall = np.mean([r.metrics.recall for r in runs], axis=0)
    rho, p = hl.spearman_class_correlation(-ch.values, recall)
    print(f"hardness vs recall: rho={rho:+.2f} (exact permutation p={p:.3f})")


if __name__ == "__main__":
    main()
