"""Desk-scale synthetic classification corpus with fixed seeds.

Four families of three datasets each:

* ``blobs``: Gaussian clusters, 2-4 classes
* ``xor``: two-class checkerboard on two features plus noise columns
* ``rings``: concentric circles plus noise columns
* ``mixed``: imbalanced, redundant/noise features, categorical columns and missing cells

The last dataset of blobs, xor and rings goes to ``test``; everything else
(9 datasets) goes to ``train``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.datasets import make_blobs, make_circles, make_classification

from ._util import derive_seed, rng_from, sk_seed
from .data import CATEGORICAL, NUMERIC, Column, Dataset, save_dataset

CORPUS_SEED = 20240611
FAMILIES = ("blobs", "xor", "rings", "mixed")
TEST_FAMILIES = ("blobs", "xor", "rings")


def _blobs(rng, seed):
    n = int(rng.integers(150, 241))
    k = int(rng.integers(2, 5))
    p = int(rng.integers(4, 9))
    X, y = make_blobs(n_samples=n, centers=k, n_features=p, cluster_std=float(rng.uniform(1.5, 3.5)),
                      random_state=sk_seed(seed))
    return X, y


def _xor(rng, seed):
    n = int(rng.integers(150, 241))
    noise = int(rng.integers(2, 7))
    base = rng.uniform(-1, 1, size=(n, 2))
    y = ((base[:, 0] > 0) ^ (base[:, 1] > 0)).astype(int)
    flip = rng.random(n) < 0.05
    y[flip] = 1 - y[flip]
    X = np.hstack([base, rng.normal(scale=0.6, size=(n, noise))])
    return X, y


def _rings(rng, seed):
    n = int(rng.integers(150, 241))
    noise = int(rng.integers(2, 6))
    base, y = make_circles(n_samples=n, noise=float(rng.uniform(0.05, 0.15)), factor=float(rng.uniform(0.3, 0.6)),
                           random_state=sk_seed(seed))
    X = np.hstack([base, rng.normal(scale=0.5, size=(n, noise))])
    return X, y


def _mixed(rng, seed):
    n = int(rng.integers(160, 241))
    k = int(rng.integers(2, 4))
    weights = [0.7] + [0.3 / (k - 1)] * (k - 1)
    X, y = make_classification(n_samples=n, n_features=6, n_informative=3, n_redundant=2, n_repeated=0,
                               n_classes=k, n_clusters_per_class=1, weights=weights, flip_y=0.02,
                               random_state=sk_seed(seed))
    return X, y


_MAKERS = {"blobs": _blobs, "xor": _xor, "rings": _rings, "mixed": _mixed}


def make_dataset(family: str, index: int, seed: int = CORPUS_SEED) -> Dataset:
    s = derive_seed(seed, family, index)
    rng = rng_from(s)
    X, y = _MAKERS[family](rng, s)
    X = np.asarray(X, dtype=float)
    columns = [Column(f"x{j}", NUMERIC) for j in range(X.shape[1])]
    if family == "mixed":
        # two numeric columns become categorical by quantile binning
        n_cat = 2
        for j in range(n_cat):
            edges = np.quantile(X[:, j], [1 / 3, 2 / 3])
            X[:, j] = np.digitize(X[:, j], edges).astype(float)
            columns[j] = Column(f"c{j}", CATEGORICAL, ("low", "mid", "high"))
        holes = rng.random(X.shape) < 0.04
        holes[:, -1] = False
        X[holes] = np.nan
    y = np.asarray(y, dtype=np.int64)
    classes = tuple(f"class_{c}" for c in range(int(y.max()) + 1))
    return Dataset(f"{family}_{index}", tuple(columns), X, y, classes)


def corpus(seed: int = CORPUS_SEED) -> dict[str, list[Dataset]]:
    out = {"train": [], "test": []}
    for fam in FAMILIES:
        for i in range(3):
            d = make_dataset(fam, i, seed)
            split = "test" if fam in TEST_FAMILIES and i == 2 else "train"
            out[split].append(d)
    return out


def write_corpus(directory, seed: int = CORPUS_SEED) -> dict[str, list[Path]]:
    """Write ``train/`` and ``test/`` CSVs (with sidecar schemas) under ``directory``."""
    root = Path(directory)
    paths: dict[str, list[Path]] = {}
    for split, datasets in corpus(seed).items():
        (root / split).mkdir(parents=True, exist_ok=True)
        paths[split] = []
        for d in datasets:
            p = root / split / f"{d.name}.csv"
            save_dataset(d, p)
            paths[split].append(p)
    return paths
