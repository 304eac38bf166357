"""Per-dataset search-space design: meta-model ranking with a quantile cut, plus baselines."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from ._util import canonical_json, rng_from, sha256_text
from .components import CLASSIFIER, PREPROCESSOR, ComponentId, ComponentRegistry
from .data import Dataset
from .errors import EmptyTrainSet, SchemaMismatch
from .metafeatures import MetaFeatureVector, PipelineStatsTable, extract_all_timed
from .metamodel.metadataset import feature_vector

SPACE_VERSION = 1

SPACE_JSON_SCHEMA = {
    "type": "object",
    "required": ["v", "combos", "provenance"],
    "properties": {
        "v": {"const": SPACE_VERSION},
        "combos": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": {"type": "string", "minLength": 1},
            },
        },
        "provenance": {
            "type": "object",
            "required": ["method"],
            "properties": {
                "method": {"type": "string"},
                "theta": {"type": ["number", "null"], "minimum": 0, "exclusiveMaximum": 1},
                "model_digest": {"type": ["string", "null"]},
            },
        },
    },
}


@dataclass(frozen=True)
class CombinationScore:
    preprocessor: ComponentId
    classifier: ComponentId
    predicted: float

    def __post_init__(self):
        if not math.isfinite(self.predicted):
            raise ValueError("predicted score must be finite")

    @property
    def combo(self) -> tuple[str, str]:
        return (self.preprocessor.name, self.classifier.name)


@dataclass(frozen=True)
class Threshold:
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.theta < 1.0):
            raise ValueError(f"theta must lie in [0, 1), got {self.theta}")


@dataclass(frozen=True)
class SearchSpace:
    combos: tuple[tuple[str, str], ...]
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        canon = tuple(sorted({(str(p), str(c)) for p, c in self.combos}))
        if not canon:
            raise ValueError("a search space needs at least one combination")
        object.__setattr__(self, "combos", canon)

    def __len__(self):
        return len(self.combos)

    def __contains__(self, combo):
        return tuple(combo) in set(self.combos)

    @property
    def preprocessors(self) -> list[str]:
        return sorted({p for p, _ in self.combos})

    @property
    def classifiers(self) -> list[str]:
        return sorted({c for _, c in self.combos})

    def issubset(self, other: "SearchSpace") -> bool:
        return set(self.combos) <= set(other.combos)

    def check(self, registry: ComponentRegistry) -> None:
        known = set(registry.combos())
        extra = [c for c in self.combos if c not in known]
        if extra:
            raise ValueError(f"combinations outside the registry: {extra}")

    def to_json(self) -> dict:
        return {"v": SPACE_VERSION, "combos": [list(c) for c in self.combos], "provenance": dict(self.provenance)}

    @classmethod
    def from_json(cls, obj) -> "SearchSpace":
        if obj.get("v") != SPACE_VERSION:
            raise ValueError(f"unsupported space version {obj.get('v')!r}")
        return cls(tuple(tuple(c) for c in obj["combos"]), dict(obj.get("provenance", {})))

    def digest(self) -> str:
        return sha256_text(canonical_json(self.to_json()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SearchSpace":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def full_space(registry: ComponentRegistry, method: str = "RS") -> SearchSpace:
    return SearchSpace(tuple(registry.combos()), {"method": method, "theta": None, "model_digest": None})


def score_all(model, mf: MetaFeatureVector, pstats: PipelineStatsTable,
              registry: ComponentRegistry) -> list[CombinationScore]:
    """Predicted best F1 for every registry combination, in registry order."""
    schema = model.schema
    missing = [n for n in getattr(model, "mf_names", []) if n not in mf.values]
    if missing:
        raise SchemaMismatch(f"meta-features required by the model are absent: {missing}")
    combos = registry.combos()
    try:
        X = np.array([feature_vector(schema, mf.values, pstats, registry, p, c) for p, c in combos])
    except Exception as exc:
        raise SchemaMismatch(str(exc)) from exc
    forest = getattr(model, "forest", model)
    pred = forest.predict(X)
    return [
        CombinationScore(ComponentId(PREPROCESSOR, p), ComponentId(CLASSIFIER, c), float(s))
        for (p, c), s in zip(combos, pred)
    ]


def quantile_cut(values, theta: float) -> float:
    """Value at ascending index ceil(theta*n)-1, clamped to [0, n-1].

    theta is read as the decimal it prints as, so 0.1 * 10 is exactly 1.
    """
    v = sorted(float(x) for x in values)
    n = len(v)
    idx = math.ceil(Fraction(repr(float(theta))) * n) - 1
    return v[min(max(idx, 0), n - 1)]


def quantile_filter(scores, t: Threshold | float, provenance: dict | None = None) -> SearchSpace:
    """Combinations whose predicted score reaches the lower theta-quantile; boundary ties kept."""
    theta = t.theta if isinstance(t, Threshold) else Threshold(float(t)).theta
    scores = list(scores)
    if not scores:
        raise ValueError("quantile_filter needs at least one score")
    q = quantile_cut([s.predicted for s in scores], theta)
    prov = {"method": "mtl", "theta": theta, "model_digest": None}
    prov.update(provenance or {})
    return SearchSpace(tuple(s.combo for s in scores if s.predicted >= q), prov)


def design_space_mtl(model, d: Dataset | MetaFeatureVector, theta: float, registry: ComponentRegistry,
                     model_digest: str | None = None) -> SearchSpace:
    if isinstance(d, Dataset):
        mf, _ = extract_all_timed(d)
    else:
        mf = d
    scores = score_all(model, mf, model.pstats, registry)
    prov = {"method": f"mtl-{theta:g}", "model_digest": model_digest or model.digest()}
    return quantile_filter(scores, Threshold(theta), prov)


def design_space_random(registry: ComponentRegistry, seed: int) -> SearchSpace:
    combos = registry.combos()
    pick = combos[int(rng_from(seed).integers(len(combos)))]
    return SearchSpace((pick,), {"method": "random", "theta": None, "model_digest": None, "seed": int(seed)})


def _landmark_matrix(train_mf: dict[str, dict[str, float]]):
    names = sorted(train_mf)
    feats = sorted({f for v in train_mf.values() for f in v})
    X = np.array([[train_mf[n].get(f, np.nan) for f in feats] for n in names], dtype=float)
    return names, feats, X


def nearest_dataset(train_mf: dict[str, dict[str, float]], query: dict[str, float]) -> str:
    """Closest training dataset by Euclidean distance on z-scored landmarkers.

    Means and deviations come from the training vectors; NaN cells (either
    side) are replaced by the training mean so they contribute zero.
    """
    if not train_mf:
        raise EmptyTrainSet("landmarking baseline needs at least one training dataset")
    names, feats, X = _landmark_matrix(train_mf)
    present = ~np.isnan(X)
    counts = present.sum(axis=0)
    mean = np.divide(np.where(present, X, 0.0).sum(axis=0), counts, out=np.zeros(len(feats)), where=counts > 0)
    Xf = np.where(present, X, mean)
    sd = Xf.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    q = np.array([query.get(f, np.nan) for f in feats], dtype=float)
    q = np.where(np.isnan(q), mean, q)
    dist = np.sqrt((((Xf - mean) / sd - (q - mean) / sd) ** 2).sum(axis=1))
    best = min(range(len(names)), key=lambda i: (dist[i], names[i]))
    return names[best]


def design_space_landmarking(train_mf: dict[str, dict[str, float]], train_best: dict[str, tuple[str, str]],
                             query_mf: dict[str, float]) -> SearchSpace:
    name = nearest_dataset(train_mf, query_mf)
    if name not in train_best:
        raise EmptyTrainSet(f"no best combination recorded for {name}")
    return SearchSpace((tuple(train_best[name]),), {"method": "landmarking", "theta": None,
                                                     "model_digest": None, "neighbor": name})


def design_space_autosklearn2(train_best: dict[str, tuple[str, str]]) -> SearchSpace:
    if not train_best:
        raise EmptyTrainSet("portfolio baseline needs at least one training dataset")
    return SearchSpace(tuple(tuple(c) for c in train_best.values()),
                       {"method": "autosklearn2", "theta": None, "model_digest": None})
