"""Measure functions for the five classic meta-feature groups.

Each measure takes a :class:`Views` object and returns a dict of named
values. Several features may come from one measure (``skewness.mean`` and
``skewness.sd`` share one pass), which is also the unit of timing.
"""

from __future__ import annotations

import math
import warnings
from functools import cached_property

import numpy as np
from scipy import stats
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from ..data import CATEGORICAL, NUMERIC, Dataset, FixedPreprocessor, kfold_labels
from . import info_theory as it

GENERAL = "general"
STATISTICAL = "statistical"
INFO_THEORY = "info_theory"
MODEL_BASED = "model_based"
LANDMARKING = "landmarking"
PIPELINE_STATS = "pipeline_stats"

GROUP_ORDER = (GENERAL, STATISTICAL, INFO_THEORY, MODEL_BASED, LANDMARKING)
LANDMARK_FOLDS = 10
LANDMARK_SEED = 0


def summarize(values) -> tuple[float, float]:
    """(mean, sd) skipping NaN; sd uses n-1 and is NaN below two values."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return float("nan"), float("nan")
    sd = float(np.std(v, ddof=1)) if v.size > 1 else float("nan")
    return float(np.mean(v)), sd


def _pair(name, values):
    m, s = summarize(values)
    return {f"{name}.mean": m, f"{name}.sd": s}


class Views:
    """Row-canonicalized projections of a dataset shared by all measures.

    Rows are sorted lexicographically by (label, attributes) first so every
    measure, including the cross-validated landmarkers, ignores the original
    row order.
    """

    def __init__(self, d: Dataset):
        keys = [np.where(np.isnan(d.X[:, j]), np.inf, d.X[:, j]) for j in reversed(range(d.n_cols))]
        order = np.lexsort(keys + [d.y]) if d.n_cols else np.argsort(d.y, kind="stable")
        self.raw = d.subset(order)
        self.y = self.raw.y

    @cached_property
    def imputed(self) -> Dataset:
        return FixedPreprocessor().fit(self.raw).impute(self.raw)

    @cached_property
    def numeric(self) -> np.ndarray:
        """Unscaled numeric attributes plus category indicators."""
        blocks = []
        for j, col in enumerate(self.imputed.columns):
            v = self.imputed.X[:, j]
            if col.kind == NUMERIC:
                blocks.append(v[:, None])
            else:
                n_lev = max(len(col.levels), 1)
                onehot = np.zeros((len(v), n_lev))
                onehot[np.arange(len(v)), v.astype(np.int64)] = 1.0
                blocks.append(onehot)
        return np.hstack(blocks) if blocks else np.zeros((len(self.y), 0))

    @cached_property
    def processed(self) -> np.ndarray:
        fp = FixedPreprocessor().fit(self.raw)
        return np.asarray(fp.transform(self.raw).X)

    @cached_property
    def discrete(self) -> list[np.ndarray]:
        out = []
        for j, col in enumerate(self.imputed.columns):
            v = self.imputed.X[:, j]
            out.append(v.astype(np.int64) if col.kind == CATEGORICAL else it.discretize(v))
        return out

    @cached_property
    def folds(self):
        return kfold_labels(self.y, min(LANDMARK_FOLDS, len(self.y)), LANDMARK_SEED)


# ------------------------------------------------------------------ general


def _nr_inst(v):
    return {"nr_inst": float(v.raw.n_rows)}


def _nr_attr(v):
    return {"nr_attr": float(v.raw.n_cols)}


def _nr_class(v):
    return {"nr_class": float(np.unique(v.y).size)}


def _attr_to_inst(v):
    return {"attr_to_inst": v.raw.n_cols / v.raw.n_rows}


def _inst_to_attr(v):
    return {"inst_to_attr": v.raw.n_rows / v.raw.n_cols if v.raw.n_cols else float("nan")}


def _num_to_cat(v):
    kinds = v.raw.kinds
    n_cat = kinds.count(CATEGORICAL)
    return {"num_to_cat": kinds.count(NUMERIC) / n_cat if n_cat else float("nan")}


def _freq_class(v):
    counts = np.bincount(v.y)
    counts = counts[counts > 0]
    return _pair("freq_class", counts / counts.sum())


# -------------------------------------------------------------- statistical


def _columns(v):
    X = v.numeric
    return [X[:, j] for j in range(X.shape[1])]


def _mean(v):
    return _pair("mean", [c.mean() for c in _columns(v)])


def _sd(v):
    return _pair("sd", [c.std(ddof=1) if c.size > 1 else np.nan for c in _columns(v)])


def _moment(v, name, fn):
    vals = []
    for c in _columns(v):
        if c.size < 4 or np.ptp(c) == 0:
            vals.append(np.nan)
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vals.append(float(fn(c, bias=False)))
    return _pair(name, vals)


def _skewness(v):
    return _moment(v, "skewness", stats.skew)


def _kurtosis(v):
    return _moment(v, "kurtosis", stats.kurtosis)


def _iqr(v):
    return _pair("iqr", [np.subtract(*np.percentile(c, [75, 25])) for c in _columns(v)])


def _cor(v):
    X = v.numeric
    sd = X.std(axis=0) if X.size else np.zeros(0)
    keep = np.flatnonzero(sd > 0)
    if keep.size < 2:
        return _pair("cor", [])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        c = np.corrcoef(X[:, keep], rowvar=False)
    iu = np.triu_indices(keep.size, k=1)
    return _pair("cor", np.abs(c[iu]))


# -------------------------------------------------------------- info theory


def _class_ent(v):
    return {"class_ent": it.entropy(v.y)}


def _attr_ents(v):
    return [it.entropy(a) for a in v.discrete]


def _mut_infs(v):
    return [it.mutual_information(a, v.y) for a in v.discrete]


def _attr_ent(v):
    return _pair("attr_ent", _attr_ents(v))


def _joint_ent(v):
    return _pair("joint_ent", [it.joint_entropy(a, v.y) for a in v.discrete])


def _mut_inf(v):
    return _pair("mut_inf", _mut_infs(v))


def _eq_num_attr(v):
    mi = summarize(_mut_infs(v))[0]
    ok = np.isfinite(mi) and mi > 0
    return {"eq_num_attr": it.entropy(v.y) / mi if ok else float("nan")}


def _ns_ratio(v):
    mi = summarize(_mut_infs(v))[0]
    ae = summarize(_attr_ents(v))[0]
    ok = np.isfinite(mi) and mi > 0
    return {"ns_ratio": (ae - mi) / mi if ok else float("nan")}


def _attr_conc(v):
    cols = v.discrete
    vals = [it.goodman_kruskal_tau(cols[i], cols[j]) for i in range(len(cols)) for j in range(len(cols)) if i != j]
    return _pair("attr_conc", vals)


def _class_conc(v):
    return _pair("class_conc", [it.goodman_kruskal_tau(a, v.y) for a in v.discrete])


# -------------------------------------------------------------- model based


def _tree_measures(v):
    X = v.processed
    names = ("nodes", "leaves", "nodes_per_inst", "nodes_per_attr", "tree_depth.mean", "tree_depth.sd",
             "leaves_branch.mean", "leaves_branch.sd")
    if X.shape[1] == 0:
        return dict.fromkeys(names, float("nan"))
    tree = DecisionTreeClassifier(random_state=0).fit(X, v.y).tree_
    left, right = tree.children_left, tree.children_right
    depth = np.zeros(tree.node_count, dtype=np.int64)
    for node in range(tree.node_count):
        # children always carry larger ids than their parent
        if left[node] != -1:
            depth[left[node]] = depth[node] + 1
            depth[right[node]] = depth[node] + 1
    is_leaf = left == -1
    n_nodes = int((~is_leaf).sum())
    out = {
        "nodes": float(n_nodes),
        "leaves": float(is_leaf.sum()),
        "nodes_per_inst": n_nodes / X.shape[0],
        "nodes_per_attr": n_nodes / X.shape[1],
    }
    out.update(_pair("tree_depth", depth))
    out.update(_pair("leaves_branch", depth[is_leaf]))
    return out


# -------------------------------------------------------------- landmarking


def _info_gain(X, y):
    return np.array([it.mutual_information(it.discretize(X[:, j]), y) for j in range(X.shape[1])])


class _DiagonalDiscriminant:
    """Class means with pooled per-feature variances (no covariance inversion)."""

    def fit(self, X, y):
        self.classes_ = np.unique(y)
        self.means_ = np.array([X[y == c].mean(axis=0) for c in self.classes_])
        resid = X - self.means_[np.searchsorted(self.classes_, y)]
        dof = max(len(y) - len(self.classes_), 1)
        var = (resid**2).sum(axis=0) / dof
        self.var_ = np.where(var > 1e-12, var, 1.0)
        self.log_prior_ = np.log(np.array([np.mean(y == c) for c in self.classes_]))
        return self

    def predict(self, X):
        score = -0.5 * (((X[:, None, :] - self.means_[None]) ** 2) / self.var_).sum(axis=2) + self.log_prior_
        return self.classes_[np.argmax(score, axis=1)]


def _landmark(v, make, select=None):
    X, y = v.processed, v.y
    if X.shape[1] == 0:
        return float("nan")
    accs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for tr, te in v.folds:
            cols = select(X[tr], y[tr]) if select else slice(None)
            model = make().fit(X[tr][:, cols], y[tr])
            accs.append(float(np.mean(model.predict(X[te][:, cols]) == y[te])))
    return float(np.mean(accs))


def _one_nn(v):
    return {"one_nn": _landmark(v, lambda: KNeighborsClassifier(n_neighbors=1))}


def _stump():
    return DecisionTreeClassifier(max_depth=1, random_state=0)


def _best_node(v):
    return {"best_node": _landmark(v, _stump)}


def _worst_node(v):
    def weakest(X, y):
        g = _info_gain(X, y)
        return [int(np.argmin(g))]

    return {"worst_node": _landmark(v, _stump, weakest)}


def _naive_bayes(v):
    return {"naive_bayes": _landmark(v, GaussianNB)}


def _elite_nn(v):
    def elite(X, y):
        g = _info_gain(X, y)
        k = int(math.ceil(math.sqrt(X.shape[1])))
        order = sorted(range(X.shape[1]), key=lambda j: (-g[j], j))
        return sorted(order[:k])

    return {"elite_nn": _landmark(v, lambda: KNeighborsClassifier(n_neighbors=1), elite)}


def _linear_discr(v):
    return {"linear_discr": _landmark(v, _DiagonalDiscriminant)}


MEASURES = {
    GENERAL: [
        ("nr_inst", _nr_inst), ("nr_attr", _nr_attr), ("nr_class", _nr_class),
        ("attr_to_inst", _attr_to_inst), ("inst_to_attr", _inst_to_attr),
        ("num_to_cat", _num_to_cat), ("freq_class", _freq_class),
    ],
    STATISTICAL: [
        ("mean", _mean), ("sd", _sd), ("skewness", _skewness), ("kurtosis", _kurtosis),
        ("iqr", _iqr), ("cor", _cor),
    ],
    INFO_THEORY: [
        ("class_ent", _class_ent), ("attr_ent", _attr_ent), ("joint_ent", _joint_ent),
        ("mut_inf", _mut_inf), ("eq_num_attr", _eq_num_attr), ("ns_ratio", _ns_ratio),
        ("attr_conc", _attr_conc), ("class_conc", _class_conc),
    ],
    MODEL_BASED: [("tree", _tree_measures)],
    LANDMARKING: [
        ("one_nn", _one_nn), ("best_node", _best_node), ("worst_node", _worst_node),
        ("naive_bayes", _naive_bayes), ("elite_nn", _elite_nn), ("linear_discr", _linear_discr),
    ],
}
