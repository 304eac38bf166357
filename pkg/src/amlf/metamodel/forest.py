"""Random-forest and single-tree regressors plus a kNN regressor, all on dense float matrices.

NaN inputs are allowed everywhere. Trees route them through a default branch
learned at training time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .._util import derive_seed, rng_from
from ..errors import DegenerateTarget
from . import _kernels

MODEL_VERSION = 1


@dataclass(frozen=True)
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    default_left: np.ndarray
    value: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == _kernels.LEAF))

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        return _kernels.predict_tree(X, self.feature, self.threshold, self.left, self.right,
                                     self.default_left, self.value)

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "default_left": self.default_left.astype(int).tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_json(cls, obj) -> "RegressionTree":
        return cls(
            np.asarray(obj["feature"], dtype=np.int64),
            np.asarray(obj["threshold"], dtype=float),
            np.asarray(obj["left"], dtype=np.int64),
            np.asarray(obj["right"], dtype=np.int64),
            np.asarray(obj["default_left"], dtype=bool),
            np.asarray(obj["value"], dtype=float),
            np.asarray(obj["gain"], dtype=float),
        )


def grow_tree(X, y, sample, mtry: int, max_depth: int | None, seed: int, min_leaf: int = 1) -> RegressionTree:
    arrays = _kernels.build_tree(
        np.ascontiguousarray(X, dtype=float),
        np.ascontiguousarray(y, dtype=float),
        np.ascontiguousarray(sample, dtype=np.int64),
        int(mtry),
        -1 if max_depth is None else int(max_depth),
        int(min_leaf),
        int(seed) % (2**32),
    )
    return RegressionTree(*(np.array(a) for a in arrays))


def sqrt_features(p: int) -> int:
    return max(1, math.ceil(math.sqrt(p)))


@dataclass
class ForestModel:
    trees: list[RegressionTree]
    schema: tuple[str, ...]
    seed: int
    max_features: str = "sqrt"
    bootstrap: bool = True
    max_depth: int | None = None
    oob_available: bool = False
    kind: str = "rf"
    meta: dict = field(default_factory=dict)

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.schema):
            raise ValueError(f"expected {len(self.schema)} feature columns, got shape {X.shape}")
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += t.predict(X)
        return acc / len(self.trees)

    def importances(self) -> np.ndarray:
        """Impurity-decrease importances summed over trees, normalized to 1.

        A forest without a single split (constant target) spreads the mass
        uniformly so the scores still sum to one.
        """
        imp = np.zeros(len(self.schema))
        for t in self.trees:
            internal = t.feature != _kernels.LEAF
            np.add.at(imp, t.feature[internal], t.gain[internal])
        total = imp.sum()
        if total <= 0:
            return np.full(len(self.schema), 1.0 / len(self.schema))
        return imp / total

    def to_json(self) -> dict:
        return {
            "v": MODEL_VERSION,
            "kind": self.kind,
            "schema": list(self.schema),
            "seed": int(self.seed),
            "n_trees": self.n_trees,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "max_depth": self.max_depth,
            "oob_available": self.oob_available,
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, obj) -> "ForestModel":
        if obj.get("v") != MODEL_VERSION:
            raise ValueError(f"unsupported forest version {obj.get('v')!r}")
        return cls(
            trees=[RegressionTree.from_json(t) for t in obj["trees"]],
            schema=tuple(obj["schema"]),
            seed=int(obj["seed"]),
            max_features=obj["max_features"],
            bootstrap=bool(obj["bootstrap"]),
            max_depth=obj["max_depth"],
            oob_available=bool(obj["oob_available"]),
            kind=obj.get("kind", "rf"),
        )


def _check(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DegenerateTarget("no training rows")
    if X.shape[1] == 0:
        raise DegenerateTarget("no features")
    if X.shape[0] != y.shape[0]:
        raise ValueError("row count mismatch between X and y")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    return X, y


def _canonical(X, schema):
    """Columns sorted by feature name, so a permuted schema grows identical trees."""
    schema = tuple(schema)
    if len(schema) != X.shape[1] or len(set(schema)) != len(schema):
        raise ValueError("schema must name every column exactly once")
    order = np.array(sorted(range(len(schema)), key=lambda j: schema[j]), dtype=np.int64)
    return np.ascontiguousarray(X[:, order]), order


def _remap(tree: RegressionTree, order) -> RegressionTree:
    feat = np.where(tree.feature == _kernels.LEAF, _kernels.LEAF, order[np.maximum(tree.feature, 0)])
    return RegressionTree(feat, tree.threshold, tree.left, tree.right, tree.default_left, tree.value, tree.gain)


def fit_forest(X, y, schema, n_trees: int = 300, seed: int = 0, max_depth: int | None = None) -> ForestModel:
    """Bagged variance-reduction trees with ``ceil(sqrt(p))`` candidate features per split."""
    X, y = _check(X, y)
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    Xc, order = _canonical(X, schema)
    n, p = X.shape
    mtry = sqrt_features(p)
    trees = []
    for i in range(n_trees):
        s = derive_seed(seed, "tree", i)
        sample = rng_from(s).integers(0, n, size=n)
        trees.append(_remap(grow_tree(Xc, y, sample, mtry, max_depth, s), order))
    return ForestModel(trees, tuple(schema), seed, "sqrt", True, max_depth, False, "rf")


def fit_single_tree(X, y, schema, seed: int = 0, max_depth: int | None = 12) -> ForestModel:
    """One unbagged tree considering every feature at each split."""
    X, y = _check(X, y)
    Xc, order = _canonical(X, schema)
    tree = grow_tree(Xc, y, np.arange(X.shape[0]), X.shape[1], max_depth, derive_seed(seed, "tree", 0))
    return ForestModel([_remap(tree, order)], tuple(schema), seed, "all", False, max_depth, False, "dt")


class KnnRegressor:
    """Distance-weighted kNN on z-scored features; NaN cells become the column mean."""

    def __init__(self, k: int = 7):
        self.k = k

    def fit(self, X, y):
        X, y = _check(X, y)
        present = ~np.isnan(X)
        counts = present.sum(axis=0)
        sums = np.where(present, X, 0.0).sum(axis=0)
        self.mean_ = np.divide(sums, counts, out=np.zeros(X.shape[1]), where=counts > 0)
        Z = np.where(np.isnan(X), self.mean_, X)
        sd = Z.std(axis=0)
        self.scale_ = np.where(sd > 0, sd, 1.0)
        self.Z_ = (Z - self.mean_) / self.scale_
        self.y_ = y
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Z = (np.where(np.isnan(X), self.mean_, X) - self.mean_) / self.scale_
        k = min(self.k, len(self.y_))
        d = np.sqrt(((Z[:, None, :] - self.Z_[None]) ** 2).sum(axis=2))
        idx = np.argsort(d, axis=1, kind="stable")[:, :k]
        dk = np.take_along_axis(d, idx, axis=1)
        yk = self.y_[idx]
        out = np.empty(Z.shape[0])
        for i in range(Z.shape[0]):
            zero = dk[i] == 0
            if zero.any():
                out[i] = yk[i][zero].mean()
            else:
                w = 1.0 / dk[i]
                out[i] = float(np.dot(w, yk[i]) / w.sum())
        return out


LEARNERS = ("rf", "knn", "dt")


def fit_learner(kind: str, X, y, schema, seed: int = 0, n_trees: int = 300):
    if kind == "rf":
        return fit_forest(X, y, schema, n_trees=n_trees, seed=seed)
    if kind == "dt":
        return fit_single_tree(X, y, schema, seed=seed, max_depth=12)
    if kind == "knn":
        return KnnRegressor(7).fit(X, y)
    raise ValueError(f"unknown meta-learner {kind!r}; expected one of {LEARNERS}")
