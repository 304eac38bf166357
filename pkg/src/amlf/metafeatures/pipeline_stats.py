"""Pipeline Statistics meta-features.

For every classifier, preprocessor and preprocessor-classifier pair, take
the best cross-validated F1 each training dataset reached with it, then
summarize those per-dataset bests across datasets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyStore

STATS = ("min", "max", "mean", "median", "sd")
KINDS = ("classifier", "preprocessor", "pair")
_PREFIX = {"classifier": "c", "preprocessor": "pre", "pair": "p"}


def feature_names() -> list[str]:
    return [f"{_PREFIX[k]}_{s}_perf" for k in KINDS for s in STATS]


def _summary(values) -> dict[str, float]:
    v = np.asarray(values, dtype=float)
    return {
        "min": float(v.min()),
        "max": float(v.max()),
        "mean": float(v.mean()),
        "median": float(np.median(v)),
        "sd": float(v.std(ddof=1)) if v.size > 1 else 0.0,
    }


_NAN_SUMMARY = dict.fromkeys(STATS, float("nan"))


@dataclass
class PipelineStatsTable:
    summaries: dict[tuple, dict[str, float]] = field(default_factory=dict)
    train_names: tuple[str, ...] = ()

    def get(self, key: tuple) -> dict[str, float]:
        return self.summaries.get(tuple(key), _NAN_SUMMARY)

    def lookup(self, preprocessor: str, classifier: str) -> dict[str, float]:
        out = {}
        for kind, key in (
            ("classifier", ("classifier", classifier)),
            ("preprocessor", ("preprocessor", preprocessor)),
            ("pair", ("pair", preprocessor, classifier)),
        ):
            s = self.get(key)
            for stat in STATS:
                out[f"{_PREFIX[kind]}_{stat}_perf"] = s[stat]
        return out

    def to_json(self) -> dict:
        return {
            "train_names": list(self.train_names),
            "rows": [{"key": list(k), **v} for k, v in sorted(self.summaries.items())],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineStatsTable":
        table = {tuple(r["key"]): {s: float(r[s]) for s in STATS} for r in obj["rows"]}
        return cls(table, tuple(obj["train_names"]))


def compute_pipeline_stats(runs, train_names) -> PipelineStatsTable:
    """Summaries {min, max, mean, median, sd} of per-dataset best F1 per component key.

    Only ok records of datasets in ``train_names`` contribute.
    """
    train = set(train_names)
    best: dict[tuple, dict[str, float]] = {}
    for r in runs:
        if r.dataset not in train or r.status != "ok" or r.cv_mean is None:
            continue
        p, c = r.combo
        for key in (("classifier", c), ("preprocessor", p), ("pair", p, c)):
            per_ds = best.setdefault(key, {})
            if r.cv_mean > per_ds.get(r.dataset, -np.inf):
                per_ds[r.dataset] = r.cv_mean
    if not best:
        raise EmptyStore("no successful runs for the training datasets")
    table = {k: _summary([v[ds] for ds in sorted(v)]) for k, v in best.items()}
    return PipelineStatsTable(table, tuple(sorted(train)))
