"""Feature preprocessors and classifiers with their sampled hyperparameter spaces.

Every component is a named builder that turns a hyperparameter assignment
into a scikit-learn style estimator. The registry keeps registration order,
which also fixes the integer codes the meta-model sees.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ._util import canonical_json, rng_from, sha256_text, sk_seed
from .errors import DegenerateInput, InvalidAssignment, SingleClassFold, UnknownComponent

PREPROCESSOR = "preprocessor"
CLASSIFIER = "classifier"


@dataclass(frozen=True, order=True)
class ComponentId:
    kind: str
    name: str

    def __str__(self):
        return f"{self.kind}:{self.name}"


# ------------------------------------------------------------------- domains


@dataclass(frozen=True)
class RealRange:
    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("real range needs lo < hi")
        if self.log and self.lo <= 0:
            raise ValueError("log-scaled range needs lo > 0")

    def sample(self, rng):
        if self.log:
            return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))
        return float(rng.uniform(self.lo, self.hi))

    def contains(self, v) -> bool:
        return isinstance(v, (int, float)) and not isinstance(v, bool) and self.lo <= v <= self.hi

    def to_json(self):
        return {"type": "real", "lo": self.lo, "hi": self.hi, "log": self.log}


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int
    log: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("integer range needs lo < hi")

    def sample(self, rng):
        if self.log:
            v = math.exp(rng.uniform(math.log(self.lo), math.log(self.hi + 1)))
            return int(min(max(math.floor(v), self.lo), self.hi))
        return int(rng.integers(self.lo, self.hi + 1))

    def contains(self, v) -> bool:
        return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and self.lo <= v <= self.hi

    def to_json(self):
        return {"type": "int", "lo": self.lo, "hi": self.hi, "log": self.log}


@dataclass(frozen=True)
class Choice:
    options: tuple

    def __post_init__(self):
        if not self.options:
            raise ValueError("choice set must be non-empty")

    def sample(self, rng):
        return self.options[int(rng.integers(len(self.options)))]

    def contains(self, v) -> bool:
        return any(v == o and type(v) is type(o) for o in self.options)

    def to_json(self):
        return {"type": "choice", "options": list(self.options)}


def domain_from_json(obj):
    t = obj["type"]
    if t == "real":
        return RealRange(obj["lo"], obj["hi"], obj.get("log", False))
    if t == "int":
        return IntRange(obj["lo"], obj["hi"], obj.get("log", False))
    if t == "choice":
        return Choice(tuple(obj["options"]))
    raise ValueError(f"unknown domain type {t!r}")


@dataclass(frozen=True)
class HyperparamSpace:
    params: tuple[tuple[str, Any], ...] = ()

    def names(self):
        return [n for n, _ in self.params]

    def validate(self, assignment: dict) -> None:
        declared = dict(self.params)
        extra = set(assignment) - set(declared)
        if extra:
            raise InvalidAssignment(f"undeclared parameters {sorted(extra)}")
        for name, dom in self.params:
            if name not in assignment:
                raise InvalidAssignment(f"missing parameter {name!r}")
            if not dom.contains(assignment[name]):
                raise InvalidAssignment(f"{name}={assignment[name]!r} outside {dom}")

    def to_json(self):
        return [{"name": n, **d.to_json()} for n, d in self.params]


def sample_assignment(space: HyperparamSpace, seed: int) -> dict:
    """Draw every parameter independently and uniformly (log-uniform on log scales)."""
    rng = rng_from(seed)
    return {name: dom.sample(rng) for name, dom in space.params}


# ------------------------------------------------------------------ registry


@dataclass(frozen=True)
class ComponentSpec:
    id: ComponentId
    space: HyperparamSpace
    build: Callable = field(compare=False, repr=False)


class ComponentRegistry:
    def __init__(self):
        self._specs: dict[ComponentId, ComponentSpec] = {}

    def register(self, kind: str, name: str, space: HyperparamSpace, build: Callable) -> ComponentId:
        if kind not in (PREPROCESSOR, CLASSIFIER):
            raise ValueError(f"unknown component kind {kind!r}")
        cid = ComponentId(kind, name)
        if cid in self._specs:
            raise ValueError(f"{cid} already registered")
        self._specs[cid] = ComponentSpec(cid, space, build)
        return cid

    def _of(self, kind):
        return [s for s in self._specs.values() if s.id.kind == kind]

    @property
    def preprocessors(self) -> list[ComponentSpec]:
        return self._of(PREPROCESSOR)

    @property
    def classifiers(self) -> list[ComponentSpec]:
        return self._of(CLASSIFIER)

    def preprocessor_names(self) -> list[str]:
        return [s.id.name for s in self.preprocessors]

    def classifier_names(self) -> list[str]:
        return [s.id.name for s in self.classifiers]

    def get(self, kind: str, name: str) -> ComponentSpec:
        try:
            return self._specs[ComponentId(kind, name)]
        except KeyError:
            raise UnknownComponent(f"{kind}:{name}") from None

    def code(self, kind: str, name: str) -> int:
        names = self.preprocessor_names() if kind == PREPROCESSOR else self.classifier_names()
        try:
            return names.index(name)
        except ValueError:
            raise UnknownComponent(f"{kind}:{name}") from None

    def combos(self) -> list[tuple[str, str]]:
        return [(p, c) for p in self.preprocessor_names() for c in self.classifier_names()]

    def restrict(self, preprocessors=None, classifiers=None) -> "ComponentRegistry":
        """Sub-registry keeping registration order; unknown names raise."""
        keep_p = set(preprocessors) if preprocessors is not None else None
        keep_c = set(classifiers) if classifiers is not None else None
        for names, kind in ((keep_p, PREPROCESSOR), (keep_c, CLASSIFIER)):
            for n in names or ():
                self.get(kind, n)
        out = ComponentRegistry()
        for s in self._specs.values():
            keep = keep_p if s.id.kind == PREPROCESSOR else keep_c
            if keep is None or s.id.name in keep:
                out._specs[s.id] = s
        return out

    def manifest(self) -> dict:
        return {
            "v": 1,
            "preprocessors": [{"name": s.id.name, "space": s.space.to_json()} for s in self.preprocessors],
            "classifiers": [{"name": s.id.name, "space": s.space.to_json()} for s in self.classifiers],
        }

    def digest(self) -> str:
        return sha256_text(canonical_json(self.manifest()))


# ------------------------------------------------------------- preprocessors


class _Identity:
    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return np.asarray(X, dtype=float)


class _SelectPercentile:
    """Keep the top percentile of features ranked by mutual information with the class."""

    def __init__(self, percentile: float):
        self.percentile = percentile

    def fit(self, X, y):
        from .metafeatures.info_theory import discretize, mutual_information

        X = np.asarray(X, dtype=float)
        p = X.shape[1]
        scores = np.array([mutual_information(discretize(X[:, j]), y) for j in range(p)])
        n_keep = max(1, int(math.ceil(self.percentile / 100.0 * p)))
        order = sorted(range(p), key=lambda j: (-scores[j], j))
        self.support_ = np.sort(np.array(order[:n_keep], dtype=np.int64))
        self.scores_ = scores
        return self

    def transform(self, X):
        return np.asarray(X, dtype=float)[:, self.support_]


class _PCA:
    def __init__(self, variance_kept: float, whiten: bool):
        self.variance_kept = variance_kept
        self.whiten = whiten

    def fit(self, X, y=None):
        from sklearn.decomposition import PCA

        n, p = X.shape
        if min(n, p) <= 1:
            self.model_ = None
            return self
        self.model_ = PCA(n_components=self.variance_kept, whiten=self.whiten, svd_solver="full").fit(X)
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        return X if self.model_ is None else self.model_.transform(X)


class _Agglomeration:
    def __init__(self, n_clusters: int, linkage: str, pooling: str):
        self.n_clusters = n_clusters
        self.linkage = linkage
        self.pooling = pooling

    def fit(self, X, y=None):
        from sklearn.cluster import FeatureAgglomeration

        p = X.shape[1]
        k = min(self.n_clusters, p)
        if k < 2:
            self.model_ = None
            return self
        pool = {"mean": np.mean, "max": np.max, "median": np.median}[self.pooling]
        self.model_ = FeatureAgglomeration(n_clusters=k, linkage=self.linkage, pooling_func=pool).fit(X)
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        return X if self.model_ is None else self.model_.transform(X)


class _RandomProjection:
    def __init__(self, ratio: float, seed: int):
        self.ratio = ratio
        self.seed = seed

    def fit(self, X, y=None):
        p = X.shape[1]
        k = max(1, int(round(self.ratio * p)))
        rng = rng_from(self.seed)
        self.components_ = rng.normal(0.0, 1.0 / math.sqrt(k), size=(p, k))
        return self

    def transform(self, X):
        return np.asarray(X, dtype=float) @ self.components_


def _build_none(a, seed, shape):
    return _Identity()


def _build_pca(a, seed, shape):
    return _PCA(a["variance_kept"], a["whiten"])


def _build_poly(a, seed, shape):
    from sklearn.preprocessing import PolynomialFeatures

    return PolynomialFeatures(degree=a["degree"], interaction_only=a["interaction_only"], include_bias=False)


def _build_percentile(a, seed, shape):
    return _SelectPercentile(a["percentile"])


def _build_agglo(a, seed, shape):
    return _Agglomeration(a["n_clusters"], a["linkage"], a["pooling"])


def _build_projection(a, seed, shape):
    return _RandomProjection(a["ratio"], seed)


# --------------------------------------------------------------- classifiers


def _build_knn(a, seed, shape):
    from sklearn.neighbors import KNeighborsClassifier

    n_train = shape[0]
    return KNeighborsClassifier(n_neighbors=min(a["n_neighbors"], n_train), weights=a["weights"], p=a["p"])


def _build_tree(a, seed, shape):
    from sklearn.tree import DecisionTreeClassifier

    return DecisionTreeClassifier(
        criterion=a["criterion"],
        max_depth=a["max_depth"],
        min_samples_split=a["min_samples_split"],
        min_samples_leaf=a["min_samples_leaf"],
        random_state=sk_seed(seed),
    )


def _build_gnb(a, seed, shape):
    from sklearn.naive_bayes import GaussianNB

    return GaussianNB(var_smoothing=a["var_smoothing"])


def _build_bnb(a, seed, shape):
    from sklearn.naive_bayes import BernoulliNB

    return BernoulliNB(alpha=a["alpha"], fit_prior=a["fit_prior"], binarize=0.0)


def _sgd(loss, a, seed):
    from sklearn.linear_model import SGDClassifier

    return SGDClassifier(
        loss=loss,
        alpha=a["alpha"],
        penalty=a["penalty"],
        l1_ratio=a["l1_ratio"],
        max_iter=200,
        tol=1e-3,
        random_state=sk_seed(seed),
    )


def _build_logistic(a, seed, shape):
    return _sgd("log_loss", a, seed)


def _build_linsvm(a, seed, shape):
    return _sgd("hinge", a, seed)


def _forest_kwargs(a, seed):
    return dict(
        n_estimators=a["n_trees"],
        criterion=a["criterion"],
        max_features=a["max_features"],
        min_samples_leaf=a["min_samples_leaf"],
        bootstrap=a["bootstrap"],
        n_jobs=1,
        random_state=sk_seed(seed),
    )


def _build_rf(a, seed, shape):
    from sklearn.ensemble import RandomForestClassifier

    return RandomForestClassifier(**_forest_kwargs(a, seed))


def _build_et(a, seed, shape):
    from sklearn.ensemble import ExtraTreesClassifier

    return ExtraTreesClassifier(**_forest_kwargs(a, seed))


def _build_gb(a, seed, shape):
    from sklearn.ensemble import GradientBoostingClassifier

    return GradientBoostingClassifier(
        learning_rate=a["learning_rate"],
        n_estimators=a["n_estimators"],
        max_depth=a["max_depth"],
        subsample=a["subsample"],
        random_state=sk_seed(seed),
    )


def _build_ada(a, seed, shape):
    from sklearn.ensemble import AdaBoostClassifier
    from sklearn.tree import DecisionTreeClassifier

    return AdaBoostClassifier(
        estimator=DecisionTreeClassifier(max_depth=1),
        n_estimators=a["n_estimators"],
        learning_rate=a["learning_rate"],
        random_state=sk_seed(seed),
    )


_SGD_SPACE = HyperparamSpace((
    ("alpha", RealRange(1e-6, 1e-1, log=True)),
    ("penalty", Choice(("l2", "l1", "elasticnet"))),
    ("l1_ratio", RealRange(0.0, 1.0)),
))

_FOREST_SPACE = HyperparamSpace((
    ("n_trees", IntRange(8, 64)),
    ("criterion", Choice(("gini", "entropy"))),
    ("max_features", RealRange(0.1, 1.0)),
    ("min_samples_leaf", IntRange(1, 20)),
    ("bootstrap", Choice((True, False))),
))


def builtin_registry() -> ComponentRegistry:
    """The 6 preprocessors and 10 classifiers shipped with the package."""
    r = ComponentRegistry()
    P, C = PREPROCESSOR, CLASSIFIER
    r.register(P, "no_preprocessing", HyperparamSpace(), _build_none)
    r.register(P, "pca", HyperparamSpace((
        ("variance_kept", RealRange(0.5, 0.999)),
        ("whiten", Choice((False, True))),
    )), _build_pca)
    r.register(P, "polynomial", HyperparamSpace((
        ("degree", Choice((2, 3))),
        ("interaction_only", Choice((False, True))),
    )), _build_poly)
    r.register(P, "select_percentile", HyperparamSpace((
        ("percentile", RealRange(10.0, 90.0)),
    )), _build_percentile)
    r.register(P, "feature_agglomeration", HyperparamSpace((
        ("n_clusters", IntRange(2, 25)),
        ("linkage", Choice(("ward", "complete", "average"))),
        ("pooling", Choice(("mean", "median", "max"))),
    )), _build_agglo)
    r.register(P, "random_projection", HyperparamSpace((
        ("ratio", RealRange(0.1, 1.0)),
    )), _build_projection)

    r.register(C, "knn", HyperparamSpace((
        ("n_neighbors", IntRange(1, 25)),
        ("weights", Choice(("uniform", "distance"))),
        ("p", Choice((1, 2))),
    )), _build_knn)
    r.register(C, "decision_tree", HyperparamSpace((
        ("criterion", Choice(("gini", "entropy"))),
        ("max_depth", Choice((None, 2, 4, 8, 16))),
        ("min_samples_split", IntRange(2, 20)),
        ("min_samples_leaf", IntRange(1, 20)),
    )), _build_tree)
    r.register(C, "gaussian_nb", HyperparamSpace((
        ("var_smoothing", RealRange(1e-11, 1e-5, log=True)),
    )), _build_gnb)
    r.register(C, "bernoulli_nb", HyperparamSpace((
        ("alpha", RealRange(1e-2, 100.0, log=True)),
        ("fit_prior", Choice((True, False))),
    )), _build_bnb)
    r.register(C, "logistic_sgd", _SGD_SPACE, _build_logistic)
    r.register(C, "linear_svm_sgd", _SGD_SPACE, _build_linsvm)
    r.register(C, "random_forest", _FOREST_SPACE, _build_rf)
    r.register(C, "extra_trees", _FOREST_SPACE, _build_et)
    r.register(C, "gradient_boosting", HyperparamSpace((
        ("learning_rate", RealRange(1e-2, 5e-1, log=True)),
        ("n_estimators", IntRange(10, 60)),
        ("max_depth", IntRange(1, 5)),
        ("subsample", RealRange(0.5, 1.0)),
    )), _build_gb)
    r.register(C, "adaboost_stumps", HyperparamSpace((
        ("n_estimators", IntRange(10, 60)),
        ("learning_rate", RealRange(1e-2, 2.0, log=True)),
    )), _build_ada)
    return r


# ------------------------------------------------------------ fit / predict


def _check_table(X, what):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DegenerateInput(f"{what} is empty: shape {X.shape}")
    return X


def fit_preprocessor(registry: ComponentRegistry, name: str, assignment: dict, X_train, y_train=None, seed: int = 0):
    spec = registry.get(PREPROCESSOR, name)
    X_train = _check_table(X_train, "X_train")
    est = spec.build(assignment, seed, X_train.shape)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est.fit(X_train, y_train)
    return est


def transform(fitted, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        return np.zeros((0, fitted.transform(np.zeros((1, X.shape[1]))).shape[1]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return np.asarray(fitted.transform(X), dtype=float)


def fit_transform_preprocessor(registry, name, assignment, X_train, X_apply, y_train=None, seed=0) -> np.ndarray:
    """Fit on ``X_train`` only, then transform ``X_apply``."""
    return transform(fit_preprocessor(registry, name, assignment, X_train, y_train, seed), X_apply)


def fit_classifier(registry: ComponentRegistry, name: str, assignment: dict, X_train, y_train, seed: int = 0):
    spec = registry.get(CLASSIFIER, name)
    X_train = _check_table(X_train, "X_train")
    y_train = np.asarray(y_train)
    if np.unique(y_train).size < 2:
        raise SingleClassFold(f"{name}: training labels hold a single class")
    est = spec.build(assignment, seed, X_train.shape)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est.fit(X_train, y_train)
    return est


def predict(model, X) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return np.asarray(model.predict(np.asarray(X, dtype=float)))
