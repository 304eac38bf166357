"""Rank statistics, significance tests and the benchmark report tables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import AllZeroDifferences, DegenerateMatrix, MissingBaseline, MissingScore, UnsupportedK

# Two-tailed Nemenyi critical values (studentized range / sqrt 2, infinite df), k = 2..10.
Q_ALPHA = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920),
}
WILCOXON_EXACT_MAX_N = 12


@dataclass(frozen=True)
class MethodMatrix:
    methods: tuple[str, ...]
    units: tuple[tuple, ...]
    scores: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        if s.shape != (len(self.units), len(self.methods)):
            raise ValueError(f"scores shape {s.shape} does not match {len(self.units)} units x {len(self.methods)} methods")
        if np.isnan(s).any():
            raise ValueError("MethodMatrix cells must be filled")
        object.__setattr__(self, "scores", s)

    @classmethod
    def from_cells(cls, cells: dict, methods, units, fill: float = 0.0) -> "MethodMatrix":
        """Build from {(unit, method): score}; absent or NaN cells count as ``fill``."""
        methods, units = tuple(methods), tuple(units)
        s = np.full((len(units), len(methods)), fill, dtype=float)
        for i, u in enumerate(units):
            for j, m in enumerate(methods):
                v = cells.get((u, m))
                if v is not None and not math.isnan(v):
                    s[i, j] = v
        return cls(methods, units, s)


def rank_rows(scores) -> np.ndarray:
    """Per-row ranks, 1 = highest score, ties share the average rank."""
    s = np.asarray(scores, dtype=float)
    return np.vstack([stats.rankdata(-row, method="average") for row in s]) if s.size else s


def average_ranks(m: MethodMatrix) -> dict[str, float]:
    if len(m.methods) < 2 or len(m.units) < 1:
        raise DegenerateMatrix("need >= 2 methods and >= 1 unit")
    r = rank_rows(m.scores).mean(axis=0)
    return {name: float(v) for name, v in zip(m.methods, r)}


def friedman_test(m: MethodMatrix) -> tuple[float, float]:
    """Friedman chi-square over average ranks with k-1 degrees of freedom."""
    n, k = m.scores.shape
    if k < 3 or n < 2:
        raise DegenerateMatrix(f"Friedman needs >= 3 methods and >= 2 units, got {k} and {n}")
    rbar = rank_rows(m.scores).mean(axis=0)
    stat = 12.0 * n / (k * (k + 1)) * (float(np.sum(rbar**2)) - k * (k + 1) ** 2 / 4.0)
    stat = max(stat, 0.0)
    return stat, float(stats.chi2.sf(stat, k - 1))


def nemenyi_q(k: int, alpha: float = 0.05) -> float:
    table = Q_ALPHA.get(alpha)
    if table is None:
        raise UnsupportedK(f"alpha must be one of {sorted(Q_ALPHA)}")
    if not 2 <= k <= 10:
        raise UnsupportedK(f"k={k} outside the bundled table (2..10)")
    return table[k - 2]


def nemenyi_cd(k: int, n: int, alpha: float = 0.05) -> float:
    """Critical difference q_alpha * sqrt(k(k+1) / 6N)."""
    if n < 1:
        raise ValueError("N must be >= 1")
    return nemenyi_q(k, alpha) * math.sqrt(k * (k + 1) / (6.0 * n))


def _exact_upper_lower(doubled_ranks, observed2) -> tuple[float, float]:
    """P(W+ <= obs) and P(W+ >= obs) under random signs, on doubled (integer) ranks."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    denom = 2 ** len(doubled_ranks)
    le = int(counts[: observed2 + 1].sum())
    ge = int(counts[observed2:].sum())
    return le / denom, ge / denom


def wilcoxon_signed_rank(a, b) -> tuple[float, float]:
    """Two-sided paired test; returns (min(W+, W-), p).

    Zero differences are dropped and tied magnitudes share average ranks.
    Up to 12 nonzero pairs the null distribution is enumerated exactly;
    beyond that a tie-corrected normal approximation with continuity
    correction is used.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired samples must have equal length")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise AllZeroDifferences("every paired difference is zero")
    ranks = stats.rankdata(np.abs(d), method="average")
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = min(w_plus, w_minus)
    if n <= WILCOXON_EXACT_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        le, ge = _exact_upper_lower(doubled, int(round(2 * w_plus)))
        return statistic, min(1.0, 2.0 * min(le, ge))
    _, tie_counts = np.unique(ranks, return_counts=True)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    if var <= 0:
        return statistic, 1.0
    z = max(abs(w_plus - mean) - 0.5, 0.0) / math.sqrt(var)
    return statistic, min(1.0, float(2.0 * stats.norm.sf(z)))


# ------------------------------------------------------------------- reports


def _total(x) -> float:
    if isinstance(x, (list, tuple)):
        return float(sum(_total(v) for v in x))
    return float(getattr(x, "wall_clock_total_s", x))


def time_reduction_report(traces: dict, baseline: str) -> list[dict]:
    """Rows (method, dataset, total_time_s, baseline_time_s, reduction).

    ``traces`` maps method -> dataset -> trace, total seconds, or a list of
    either (summed, e.g. over repetitions).
    """
    if baseline not in traces:
        raise MissingBaseline(f"baseline method {baseline!r} absent")
    rows = []
    for method in sorted(traces):
        for ds in sorted(traces[method]):
            if ds not in traces[baseline]:
                raise MissingBaseline(f"baseline {baseline!r} has no trace for {ds}")
            t = _total(traces[method][ds])
            tb = _total(traces[baseline][ds])
            rows.append({
                "method": method,
                "dataset": ds,
                "total_time_s": t,
                "baseline_time_s": tb,
                "reduction": 1.0 - t / tb if tb > 0 else 0.0,
            })
    return rows


def _iter_spaces(spaces: dict):
    for method in sorted(spaces):
        for ds in sorted(spaces[method]):
            v = spaces[method][ds]
            for s in (v if isinstance(v, (list, tuple)) else [v]):
                yield method, ds, s


def space_size_report(spaces: dict) -> list[dict]:
    """Per method: mean number of distinct preprocessors, classifiers and pairs per space."""
    acc: dict[str, list] = {}
    for method, _, s in _iter_spaces(spaces):
        acc.setdefault(method, []).append((len(s.preprocessors), len(s.classifiers), len(s.combos)))
    rows = []
    for method, sizes in acc.items():
        arr = np.array(sizes, dtype=float)
        rows.append({
            "method": method,
            "n_spaces": len(sizes),
            "mean_preprocessors": float(arr[:, 0].mean()),
            "mean_classifiers": float(arr[:, 1].mean()),
            "mean_combos": float(arr[:, 2].mean()),
        })
    return rows


def recommendation_frequency_report(spaces: dict) -> list[dict]:
    """Selection percentage of each component and pair, per method and kind.

    Every space counts each distinct member once; percentages within one
    (method, kind) block sum to 100.
    """
    counts: dict[tuple[str, str], dict[str, int]] = {}
    for method, _, s in _iter_spaces(spaces):
        for kind, members in (
            ("preprocessor", s.preprocessors),
            ("classifier", s.classifiers),
            ("pair", [f"{p}+{c}" for p, c in s.combos]),
        ):
            block = counts.setdefault((method, kind), {})
            for name in members:
                block[name] = block.get(name, 0) + 1
    rows = []
    for (method, kind), block in sorted(counts.items()):
        total = sum(block.values())
        for name in sorted(block, key=lambda n: (-block[n], n)):
            rows.append({
                "method": method,
                "kind": kind,
                "component": name,
                "count": block[name],
                "percent": 100.0 * block[name] / total,
            })
    return rows


GAPS = (("train_test", "train", "test"), ("train_val", "train", "val"), ("val_test", "val", "test"))


def overfit_gap_report(records) -> list[dict]:
    """Mean and sd (n-1) of train-test, train-val and val-test per method.

    ``records`` are mappings with keys method, train, val, test.
    """
    by_method: dict[str, list] = {}
    for r in records:
        vals = [r.get(k) for k in ("train", "val", "test")]
        if any(v is None or (isinstance(v, float) and math.isnan(v)) for v in vals):
            raise MissingScore(f"record of {r.get('method')} lacks a train/val/test score")
        by_method.setdefault(r["method"], []).append(vals)
    rows = []
    for method in sorted(by_method):
        arr = np.array(by_method[method], dtype=float)
        col = {"train": arr[:, 0], "val": arr[:, 1], "test": arr[:, 2]}
        for gap, hi, lo in GAPS:
            g = col[hi] - col[lo]
            rows.append({
                "method": method,
                "gap": gap,
                "mean": float(g.mean()),
                "sd": float(g.std(ddof=1)) if g.size > 1 else 0.0,
                "n": int(g.size),
            })
    return rows
