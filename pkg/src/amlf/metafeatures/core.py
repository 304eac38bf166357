from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import Dataset
from .groups import GROUP_ORDER, MEASURES, Views


@dataclass
class MetaFeatureVector:
    values: dict[str, float] = field(default_factory=dict)
    groups: dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    def names(self) -> list[str]:
        return list(self.values)

    def get(self, name, default=float("nan")) -> float:
        return self.values.get(name, default)

    def merge(self, other: "MetaFeatureVector") -> "MetaFeatureVector":
        clash = set(self.values) & set(other.values)
        if clash:
            raise ValueError(f"duplicate meta-feature names {sorted(clash)}")
        return MetaFeatureVector({**self.values, **other.values}, {**self.groups, **other.groups})

    def restrict(self, names) -> "MetaFeatureVector":
        names = [n for n in names if n in self.values]
        return MetaFeatureVector({n: self.values[n] for n in names}, {n: self.groups[n] for n in names})

    def of_group(self, group: str) -> "MetaFeatureVector":
        return self.restrict([n for n, g in self.groups.items() if g == group])

    def to_json(self) -> dict:
        vals = {k: (None if v is None or math.isnan(v) else float(v)) for k, v in self.values.items()}
        return {"values": vals, "groups": dict(self.groups)}

    @classmethod
    def from_json(cls, obj: dict) -> "MetaFeatureVector":
        vals = {k: float("nan") if v is None else float(v) for k, v in obj["values"].items()}
        return cls(vals, dict(obj["groups"]))


@dataclass
class ExtractorTiming:
    """Per-feature wall times (seconds), one entry per extracted dataset."""

    times: dict[str, list[float]] = field(default_factory=dict)
    groups: dict[str, str] = field(default_factory=dict)

    def add(self, name: str, group: str, seconds: float) -> None:
        self.times.setdefault(name, []).append(float(seconds))
        self.groups[name] = group

    def extend(self, other: "ExtractorTiming") -> "ExtractorTiming":
        for name, ts in other.times.items():
            for t in ts:
                self.add(name, other.groups[name], t)
        return self

    def medians(self) -> dict[str, float]:
        return {n: float(np.median(ts)) for n, ts in self.times.items()}

    def report_rows(self) -> list[dict]:
        rows = []
        for n, ts in self.times.items():
            q1, med, q3 = np.percentile(ts, [25, 50, 75])
            rows.append({"feature": n, "group": self.groups[n], "median_s": med, "q1": q1, "q3": q3})
        return rows

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["feature", "group", "median_s", "q1", "q3"], lineterminator="\n")
            w.writeheader()
            for r in self.report_rows():
                w.writerow(r)

    def to_json(self) -> dict:
        return {"times": self.times, "groups": self.groups}

    @classmethod
    def from_json(cls, obj) -> "ExtractorTiming":
        return cls({k: list(v) for k, v in obj["times"].items()}, dict(obj["groups"]))


def _run(views: Views, group: str, timing: ExtractorTiming | None):
    values, groups = {}, {}
    for _, fn in MEASURES[group]:
        t0 = time.perf_counter()
        out = fn(views)
        dt = time.perf_counter() - t0
        for name, val in out.items():
            values[name] = float(val)
            groups[name] = group
            if timing is not None:
                timing.add(name, group, dt)
    return values, groups


def extract_group(d: Dataset, group: str) -> MetaFeatureVector:
    """Meta-features of one group; inapplicable features come back as NaN."""
    if group not in MEASURES:
        raise ValueError(f"unknown meta-feature group {group!r}")
    return MetaFeatureVector(*_run(Views(d), group, None))


def extract_all_timed(d: Dataset, groups=GROUP_ORDER) -> tuple[MetaFeatureVector, ExtractorTiming]:
    """All requested groups in canonical order, timing each measure on a monotonic clock.

    Features produced by one measure (e.g. the ``.mean``/``.sd`` pair) are
    each charged that measure's full time. Building the shared data views is
    not charged to any feature.
    """
    views = Views(d)
    timing = ExtractorTiming()
    mf = MetaFeatureVector()
    for g in GROUP_ORDER:
        if g in groups:
            mf = mf.merge(MetaFeatureVector(*_run(views, g, timing)))
    return mf, timing


def filter_by_median_time(t: ExtractorTiming, threshold_s: float) -> set[str]:
    return {n for n, m in t.medians().items() if m < threshold_s}


def save_metafeatures(path, mf: MetaFeatureVector, timing: ExtractorTiming | None = None, dataset: str = "") -> None:
    obj = {"v": 1, "dataset": dataset, **mf.to_json()}
    if timing is not None:
        obj["timing"] = timing.to_json()
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=False), encoding="utf-8")


def load_metafeatures(path) -> tuple[MetaFeatureVector, ExtractorTiming | None]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    timing = ExtractorTiming.from_json(obj["timing"]) if "timing" in obj else None
    return MetaFeatureVector.from_json(obj), timing
