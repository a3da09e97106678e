"""Walkthrough: data-based hardness metrics straight from raw features.

No training involved: centroid distances, neighborhood composition and
class dispersion are computed from the feature matrix alone, then each
metric's sorted-value curve is filed into a shape family with adaptive
easy/medium/hard division points.
"""
import numpy as np

import hardlab as hl
from hardlab.errors import HardlabError


def main():
    fs = hl.generate_blobs(hl.four_blob_spec(seed=5, per_class=250))
    tables = hl.compute_metric_tables(fs, k=40)

    print("class-level dispersion:")
    for name in hl.CLASS_METRICS:
        print(f"  {name:5s} {np.round(tables[name].values, 3)}")
    print("(the wide central class 3 dominates)\n")

    print("instance metrics, mean by class (class 3 = overlapped):")
    for name in ("DCC", "CP", "N3", "MDOC", "AD"):
        values = tables[name].values
        means = [values[fs.labels == c].mean() for c in range(4)]
        print(f"  {name:5s} {np.round(means, 3)}")

    print("\nshape family of each instance metric:")
    for name in hl.INSTANCE_METRICS:
        try:
            report = hl.classify_distribution(tables[name])
            print(f"  {name:5s} {report.family:19s} division at "
                  f"{report.division_points}")
        except (HardlabError, ValueError) as exc:
            print(f"  {name:5s} unclassifiable ({exc})")


if __name__ == "__main__":
    main()
