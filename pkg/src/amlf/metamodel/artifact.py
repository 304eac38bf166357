"""Trained meta-model bundle: forest, schema, pipeline statistics and baseline knowledge."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .._util import canonical_json, sha256_text
from ..components import ComponentRegistry
from ..errors import EmptyStore, MissingMetaFeatures
from ..evaluation import best_of
from ..metafeatures import (
    LANDMARKING,
    ExtractorTiming,
    MetaFeatureVector,
    PipelineStatsTable,
    compute_pipeline_stats,
    filter_by_median_time,
    pipeline_stats_names,
)
from .forest import ForestModel, fit_forest
from .metadataset import CODE_FEATURES, MetaDataset, build_metadataset, feature_importance, select_top_k

log = logging.getLogger(__name__)

ARTIFACT_VERSION = 1
DEFAULT_TIME_THRESHOLD_S = 0.1
DEFAULT_TOPK = 25
DEFAULT_TREES = 300


def train_forest(md: MetaDataset, n_trees: int = DEFAULT_TREES, seed: int = 0) -> ForestModel:
    return fit_forest(md.X, md.y, md.schema, n_trees=n_trees, seed=seed)


@dataclass
class MetaModel:
    forest: ForestModel
    pstats: PipelineStatsTable
    importances: list[tuple[str, float]]
    train_best: dict[str, tuple[str, str]]
    train_landmarking: dict[str, dict[str, float]]
    registry_manifest: dict
    provenance: dict = field(default_factory=dict)

    @property
    def schema(self) -> tuple[str, ...]:
        return self.forest.schema

    @property
    def mf_names(self) -> list[str]:
        """Dataset meta-features the forest consumes (codes and pipeline stats excluded)."""
        skip = set(pipeline_stats_names()) | set(CODE_FEATURES)
        return [n for n in self.schema if n not in skip]

    @property
    def registry_digest(self) -> str:
        return sha256_text(canonical_json(self.registry_manifest))

    def to_json(self) -> dict:
        return {
            "v": ARTIFACT_VERSION,
            "provenance": dict(self.provenance),
            "registry_manifest": self.registry_manifest,
            "importances": [[n, s] for n, s in self.importances],
            "train_best": {k: list(v) for k, v in sorted(self.train_best.items())},
            "train_landmarking": {
                k: {n: (None if np.isnan(x) else x) for n, x in v.items()}
                for k, v in sorted(self.train_landmarking.items())
            },
            "pstats": self.pstats.to_json(),
            "forest": self.forest.to_json(),
        }

    @classmethod
    def from_json(cls, obj) -> "MetaModel":
        if obj.get("v") != ARTIFACT_VERSION:
            raise ValueError(f"unsupported model version {obj.get('v')!r}")
        return cls(
            forest=ForestModel.from_json(obj["forest"]),
            pstats=PipelineStatsTable.from_json(obj["pstats"]),
            importances=[(n, float(s)) for n, s in obj["importances"]],
            train_best={k: tuple(v) for k, v in obj["train_best"].items()},
            train_landmarking={
                k: {n: float("nan") if x is None else float(x) for n, x in v.items()}
                for k, v in obj["train_landmarking"].items()
            },
            registry_manifest=obj["registry_manifest"],
            provenance=dict(obj.get("provenance", {})),
        )

    def digest(self) -> str:
        return sha256_text(canonical_json(self.to_json()))

    def save(self, path) -> str:
        text = canonical_json(self.to_json())
        Path(path).write_text(text, encoding="utf-8")
        return sha256_text(text)

    @classmethod
    def load(cls, path) -> "MetaModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def train_metamodel(runs, mf: dict[str, MetaFeatureVector], timing: ExtractorTiming | None,
                    registry: ComponentRegistry, train_names=None, topk: int = DEFAULT_TOPK,
                    n_trees: int = DEFAULT_TREES, seed: int = 0,
                    time_threshold_s: float = DEFAULT_TIME_THRESHOLD_S, store_digest: str = "") -> MetaModel:
    """Offline phase end to end.

    Meta-features whose median extraction time reaches ``time_threshold_s``
    are dropped, a forest ranks the rest, the top ``topk`` are kept and the
    final forest is refit on them.
    """
    runs = list(runs)
    if train_names is None:
        train_names = sorted({r.dataset for r in runs if r.ok})
    train_names = sorted(train_names)
    if not train_names:
        raise EmptyStore("no training datasets with successful runs")
    missing = [n for n in train_names if n not in mf]
    if missing:
        raise MissingMetaFeatures(f"no meta-features for {missing}")

    first = mf[train_names[0]]
    retained = first.names()
    if timing is not None:
        fast = filter_by_median_time(timing, time_threshold_s)
        # features without any timing entry are kept
        retained = [n for n in retained if n in fast or n not in timing.times]
    pstats = compute_pipeline_stats(runs, train_names)
    md = build_metadataset(runs, mf, pstats, registry, mf_names=retained, datasets=train_names)

    full = train_forest(md, n_trees, seed)
    ranking = feature_importance(full)
    n_candidates = len(md.schema) - len(CODE_FEATURES)
    k = min(topk, n_candidates)
    if k < topk:
        log.info("only %d candidate meta-features; keeping all of them", n_candidates)
    reduced = select_top_k(md, ranking, k)
    forest = train_forest(reduced, n_trees, seed)

    train_best = {}
    by_ds: dict[str, list] = {}
    train_set = set(train_names)
    for r in runs:
        if r.dataset in train_set:
            by_ds.setdefault(r.dataset, []).append(r)
    for ds in train_names:
        train_best[ds] = best_of(by_ds.get(ds, [])).combo
    landmark = {ds: mf[ds].of_group(LANDMARKING).values for ds in train_names}

    provenance = {
        "store_digest": store_digest,
        "registry_digest": registry.digest(),
        "train_datasets": train_names,
        "seed": int(seed),
        "n_trees": int(n_trees),
        "topk": int(k),
        "time_threshold_s": float(time_threshold_s),
        "n_rows": len(md),
        "retained_after_timing": len(retained),
    }
    return MetaModel(forest, pstats, feature_importance(forest), train_best, landmark,
                     registry.manifest(), provenance)
