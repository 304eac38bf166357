"""Meta-dataset assembly: one row per (dataset, preprocessor, classifier) with a fixed schema."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..components import CLASSIFIER, PREPROCESSOR, ComponentId, ComponentRegistry
from ..errors import InvalidK, MissingMetaFeatures
from ..metafeatures import PipelineStatsTable, pipeline_stats_names
from ..metafeatures.pipeline_stats import _summary

PRE_CODE = "preprocessor_code"
CLF_CODE = "classifier_code"
CODE_FEATURES = (PRE_CODE, CLF_CODE)


@dataclass(frozen=True)
class MetaExample:
    dataset: str
    preprocessor: ComponentId
    classifier: ComponentId
    features: tuple[float, ...]
    target: float

    @property
    def combo(self) -> tuple[str, str]:
        return (self.preprocessor.name, self.classifier.name)


@dataclass(frozen=True)
class MetaDataset:
    schema: tuple[str, ...]
    rows: tuple[MetaExample, ...]

    def __len__(self):
        return len(self.rows)

    @property
    def X(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, len(self.schema)))
        return np.array([r.features for r in self.rows], dtype=float)

    @property
    def y(self) -> np.ndarray:
        return np.array([r.target for r in self.rows], dtype=float)

    @property
    def groups(self) -> np.ndarray:
        return np.array([r.dataset for r in self.rows])

    def datasets(self) -> list[str]:
        return sorted({r.dataset for r in self.rows})

    def select(self, mask) -> "MetaDataset":
        mask = np.asarray(mask)
        idx = np.flatnonzero(mask) if mask.dtype == bool else mask
        return MetaDataset(self.schema, tuple(self.rows[i] for i in idx))

    def restrict(self, names) -> "MetaDataset":
        """Keep only the named columns, in schema order."""
        names = set(names)
        unknown = names - set(self.schema)
        if unknown:
            raise KeyError(f"unknown meta-features {sorted(unknown)}")
        keep = [j for j, n in enumerate(self.schema) if n in names]
        rows = tuple(
            MetaExample(r.dataset, r.preprocessor, r.classifier, tuple(r.features[j] for j in keep), r.target)
            for r in self.rows
        )
        return MetaDataset(tuple(self.schema[j] for j in keep), rows)

    def with_pstats(self, table: PipelineStatsTable) -> "MetaDataset":
        """Rewrite the pipeline-statistics columns from another table."""
        cols = {n: j for j, n in enumerate(self.schema)}
        names = [n for n in pipeline_stats_names() if n in cols]
        if not names:
            return self
        rows = []
        for r in self.rows:
            f = list(r.features)
            vals = table.lookup(r.preprocessor.name, r.classifier.name)
            for n in names:
                f[cols[n]] = vals[n]
            rows.append(MetaExample(r.dataset, r.preprocessor, r.classifier, tuple(f), r.target))
        return MetaDataset(self.schema, tuple(rows))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", "preprocessor", "classifier", *self.schema, "target"])
            for r in self.rows:
                feats = ["" if math.isnan(v) else repr(float(v)) for v in r.features]
                w.writerow([r.dataset, r.preprocessor.name, r.classifier.name, *feats, repr(float(r.target))])


def feature_vector(schema, mf_values: dict, pstats: PipelineStatsTable, registry: ComponentRegistry,
                   preprocessor: str, classifier: str) -> tuple[float, ...]:
    """Features of one combination on one dataset, ordered by ``schema``.

    Names missing from ``mf_values`` come out as NaN.
    """
    vals = dict(mf_values)
    vals.update(pstats.lookup(preprocessor, classifier))
    vals[PRE_CODE] = float(registry.code(PREPROCESSOR, preprocessor))
    vals[CLF_CODE] = float(registry.code(CLASSIFIER, classifier))
    return tuple(float(vals.get(n, math.nan)) for n in schema)


def best_per_combo(runs, datasets=None) -> dict[tuple[str, str, str], float]:
    """Max cv_mean over ok runs, keyed by (dataset, preprocessor, classifier)."""
    keep = None if datasets is None else set(datasets)
    best: dict[tuple[str, str, str], float] = {}
    for r in runs:
        if not r.ok or r.cv_mean is None or (keep is not None and r.dataset not in keep):
            continue
        key = (r.dataset, *r.combo)
        if r.cv_mean > best.get(key, -math.inf):
            best[key] = r.cv_mean
    return best


def build_metadataset(runs, mf: dict, pstats: PipelineStatsTable, registry: ComponentRegistry,
                      mf_names=None, datasets=None) -> MetaDataset:
    """Assemble regression rows from stored runs.

    ``mf`` maps dataset name to its :class:`MetaFeatureVector`. The schema is
    ``mf_names`` (default: every name seen, in first-seen order over the
    sorted datasets), then the 15 pipeline statistics, then the two
    component codes.
    """
    best = best_per_combo(runs, datasets)
    names = sorted({k[0] for k in best})
    missing = [n for n in names if n not in mf]
    if missing:
        raise MissingMetaFeatures(f"no meta-features for {missing}")
    if mf_names is None:
        seen: dict[str, None] = {}
        for n in names:
            for f in mf[n].names():
                seen.setdefault(f, None)
        mf_names = list(seen)
    schema = (*mf_names, *pipeline_stats_names(), *CODE_FEATURES)
    known = set(registry.combos())
    rows = []
    for (ds, p, c), target in sorted(best.items()):
        if (p, c) not in known:
            continue
        feats = feature_vector(schema, mf[ds].values, pstats, registry, p, c)
        rows.append(MetaExample(ds, ComponentId(PREPROCESSOR, p), ComponentId(CLASSIFIER, c), feats, target))
    return MetaDataset(tuple(schema), tuple(rows))


def pstats_from_rows(md: MetaDataset, train_names) -> PipelineStatsTable:
    """Pipeline statistics recomputed from row targets of ``train_names`` only.

    Row targets already hold the per-(dataset, pair) maximum, so this equals
    running the statistics over the underlying runs of those datasets.
    """
    train = set(train_names)
    best: dict[tuple, dict[str, float]] = {}
    for r in md.rows:
        if r.dataset not in train:
            continue
        p, c = r.combo
        for key in (("classifier", c), ("preprocessor", p), ("pair", p, c)):
            per_ds = best.setdefault(key, {})
            if r.target > per_ds.get(r.dataset, -math.inf):
                per_ds[r.dataset] = r.target
    table = {k: _summary([v[ds] for ds in sorted(v)]) for k, v in best.items()}
    return PipelineStatsTable(table, tuple(sorted(train)))


def feature_importance(model) -> list[tuple[str, float]]:
    """(feature, score) sorted by descending importance, ties in schema order."""
    imp = model.importances()
    order = sorted(range(len(model.schema)), key=lambda j: (-imp[j], j))
    return [(model.schema[j], float(imp[j])) for j in order]


def select_top_k(md: MetaDataset, importances, k: int) -> MetaDataset:
    """Keep the ``k`` most important candidate features plus both component codes."""
    candidates = [n for n in md.schema if n not in CODE_FEATURES]
    if k < 1 or k > len(candidates):
        raise InvalidK(f"k={k} must lie in [1, {len(candidates)}]")
    ranked = [n for n, _ in importances if n in candidates]
    ranked += [n for n in candidates if n not in ranked]
    keep = set(ranked[:k]) | {n for n in CODE_FEATURES if n in md.schema}
    return md.restrict(keep)
