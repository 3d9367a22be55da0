#!/usr/bin/env python3
"""Write the Wine and Breast cancer tables bundled with scikit-learn as CSV.

Usage: export_public_data.py [OUT_DIR]   (default: data/public next to this repo)
The acceptance binary picks the files up when present and skips them otherwise.
"""
import csv
import pathlib
import sys

from sklearn.datasets import load_breast_cancer, load_wine


def export(bunch, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        names = [n.replace(" ", "_") for n in bunch.feature_names]
        writer.writerow(names + ["label"])
        for row, target in zip(bunch.data, bunch.target):
            writer.writerow([repr(float(v)) for v in row] + [bunch.target_names[target]])
    print(f"wrote {len(bunch.data)} rows to {path}")


def main():
    default = pathlib.Path(__file__).resolve().parent.parent / "data" / "public"
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else default
    out.mkdir(parents=True, exist_ok=True)
    export(load_wine(), out / "wine.csv")
    export(load_breast_cancer(), out / "breast_cancer.csv")


if __name__ == "__main__":
    main()
