#!/usr/bin/env python3
"""Materialize the benchmark datasets into a local data directory.

Wine and Breast Cancer Wisconsin (Diagnostic) come from scikit-learn's
bundled dataset module and need no network. Covertype, Fashion-MNIST, and
Steel Plates Faults are downloaded (scikit-learn fetcher, the Fashion-MNIST
release files, and OpenML respectively) and therefore need internet access.

File formats written here match what hqcbench.datasets expects:
  wine.csv, breastcancer.csv, covertype.csv  -- header row, features, label last
  steel.csv                                  -- header, 27 features, 7 one-hot targets
  fashion-mnist-train-{images-idx3,labels-idx1}-ubyte  -- raw IDX

Usage: python scripts/fetch_data.py [--data-dir data] [--datasets wine,breastcancer,...]
"""
from __future__ import annotations

import argparse
import csv
import gzip
import shutil
import sys
import urllib.request
from pathlib import Path

FASHION_BASE = "https://github.com/zalandoresearch/fashion-mnist/raw/master/data/fashion/"
FASHION_FILES = {
    "train-images-idx3-ubyte.gz": "fashion-mnist-train-images-idx3-ubyte",
    "train-labels-idx1-ubyte.gz": "fashion-mnist-train-labels-idx1-ubyte",
}
STEEL_OPENML_ID = 1504  # steel-plates-fault


def _write_csv(path: Path, X, y, feature_names=None):
    n_features = X.shape[1]
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(n_features)]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(names + ["label"])
        for row, label in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])
    print(f"wrote {path} ({X.shape[0]} rows, {n_features} features)")


def fetch_wine(data_dir: Path):
    from sklearn.datasets import load_wine
    bundle = load_wine()
    _write_csv(data_dir / "wine.csv", bundle.data, bundle.target, bundle.feature_names)


def fetch_breastcancer(data_dir: Path):
    from sklearn.datasets import load_breast_cancer
    bundle = load_breast_cancer()
    _write_csv(data_dir / "breastcancer.csv", bundle.data, bundle.target, bundle.feature_names)


def fetch_covertype(data_dir: Path):
    from sklearn.datasets import fetch_covtype
    bundle = fetch_covtype()  # downloads on first use
    _write_csv(data_dir / "covertype.csv", bundle.data, bundle.target)


def fetch_fashionmnist(data_dir: Path):
    for remote, local in FASHION_FILES.items():
        target = data_dir / local
        if target.exists():
            print(f"{target} already present")
            continue
        url = FASHION_BASE + remote
        print(f"downloading {url}")
        gz_path = data_dir / remote
        urllib.request.urlretrieve(url, gz_path)
        with gzip.open(gz_path, "rb") as src, open(target, "wb") as dst:
            shutil.copyfileobj(src, dst)
        gz_path.unlink()
        print(f"wrote {target}")


def fetch_steel(data_dir: Path):
    from sklearn.datasets import fetch_openml
    bundle = fetch_openml(data_id=STEEL_OPENML_ID, as_frame=True, parser="auto")
    frame = bundle.frame
    # OpenML 1504 ships 27 features and a single class column (1..7); expand
    # to the repository's one-hot layout so the loader exercises argmax.
    label_col = bundle.target.astype(int)
    features = frame.drop(columns=[bundle.target.name])
    path = data_dir / "steel.csv"
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(features.columns) + [f"fault{i}" for i in range(1, 8)])
        for (_, row), label in zip(features.iterrows(), label_col):
            onehot = [1 if label == i else 0 for i in range(1, 8)]
            writer.writerow([repr(float(v)) for v in row.tolist()] + onehot)
    print(f"wrote {path} ({features.shape[0]} rows)")


FETCHERS = {
    "wine": fetch_wine,
    "breastcancer": fetch_breastcancer,
    "covertype": fetch_covertype,
    "fashionmnist": fetch_fashionmnist,
    "steel": fetch_steel,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--data-dir", default="data")
    parser.add_argument("--datasets", default=",".join(FETCHERS),
                        help="comma-separated subset to fetch")
    args = parser.parse_args(argv)
    data_dir = Path(args.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    failures = []
    for name in [n.strip() for n in args.datasets.split(",") if n.strip()]:
        if name not in FETCHERS:
            print(f"unknown dataset {name!r}; known: {sorted(FETCHERS)}", file=sys.stderr)
            failures.append(name)
            continue
        try:
            FETCHERS[name](data_dir)
        except Exception as exc:
            print(f"could not fetch {name}: {exc}", file=sys.stderr)
            failures.append(name)
    if failures:
        print(f"incomplete: {failures} (network likely required)", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
