"""Grouped-by-dataset cross-validation of meta-learners."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._util import derive_seed, rng_from
from ..errors import TooFewGroups
from .forest import fit_learner
from .metadataset import MetaDataset, pstats_from_rows


@dataclass(frozen=True)
class RegressionMetrics:
    rmse: float
    rrmse: float
    r2: float

    def to_json(self) -> dict:
        return {"rmse": self.rmse, "rrmse": self.rrmse, "r2": self.r2}


def regression_metrics(y, y_hat, baseline) -> RegressionMetrics:
    """RMSE, RMSE relative to ``baseline`` predictions, and R² against the mean of ``y``."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    baseline = np.broadcast_to(np.asarray(baseline, dtype=float), y.shape)
    sse = float(np.sum((y_hat - y) ** 2))
    sse_base = float(np.sum((baseline - y) ** 2))
    sst = float(np.sum((y.mean() - y) ** 2))
    rmse = math.sqrt(sse / y.size)
    rrmse = math.sqrt(sse / sse_base) if sse_base > 0 else (0.0 if sse == 0 else math.inf)
    r2 = 1.0 - sse / sst if sst > 0 else (1.0 if sse == 0 else -math.inf)
    return RegressionMetrics(rmse, rrmse, r2)


def group_folds(groups, k: int, seed: int) -> dict[str, int]:
    """Assign each distinct group to one of ``k`` folds (shuffled round-robin)."""
    names = sorted(set(groups))
    if k < 2 or len(names) < k:
        raise TooFewGroups(f"{len(names)} datasets cannot fill {k} folds")
    perm = rng_from(seed).permutation(len(names))
    return {names[i]: pos % k for pos, i in enumerate(perm)}


def grouped_fold_indices(groups, k: int, seed: int):
    """(train_idx, test_idx) per fold with whole groups on one side."""
    groups = np.asarray(groups)
    fold_of = group_folds(groups, k, seed)
    fold = np.array([fold_of[g] for g in groups])
    return [(np.flatnonzero(fold != f), np.flatnonzero(fold == f)) for f in range(k)]


def evaluate_grouped_cv(md: MetaDataset, learner: str = "rf", folds_by_dataset: int = 3,
                        repetitions: int = 10, seed: int = 0, n_trees: int = 300,
                        per_fold_pstats: bool = False) -> list[RegressionMetrics]:
    """One pooled :class:`RegressionMetrics` per repetition.

    Every row of a dataset lands in the same fold. The RRMSE baseline for a
    held-out row is the mean target of its training fold. With
    ``per_fold_pstats`` the pipeline-statistics columns are recomputed from
    the training datasets of each fold.
    """
    X_all, y_all, g_all = md.X, md.y, md.groups
    out = []
    for rep in range(repetitions):
        pred = np.empty_like(y_all)
        base = np.empty_like(y_all)
        folds = grouped_fold_indices(g_all, folds_by_dataset, derive_seed(seed, "rep", rep))
        for f, (train, test) in enumerate(folds):
            X = X_all
            if per_fold_pstats:
                names = sorted(set(g_all[train]))
                X = md.with_pstats(pstats_from_rows(md, names)).X
            model = fit_learner(learner, X[train], y_all[train], md.schema,
                                seed=derive_seed(seed, "fit", rep, f), n_trees=n_trees)
            pred[test] = model.predict(X[test])
            base[test] = y_all[train].mean()
        out.append(regression_metrics(y_all, pred, base))
    return out
