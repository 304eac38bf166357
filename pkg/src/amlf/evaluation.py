"""Cross-validated evaluation of one preprocessor+classifier configuration."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ._util import canonical_json, sha256_text
from .components import (
    CLASSIFIER,
    PREPROCESSOR,
    ComponentRegistry,
    builtin_registry,
    fit_classifier,
    fit_preprocessor,
    predict,
    transform,
)
from .data import Dataset, FoldAssignment
from .errors import LengthMismatch, NoSuccessfulRun

log = logging.getLogger(__name__)

RECORD_VERSION = 1
OK, TIMEOUT, ERROR = "ok", "timeout", "error"
MAX_FAILED_FOLDS = 2


@dataclass(frozen=True)
class Budget:
    per_pipeline_s: float = 600.0
    per_dataset_s: float = 86400.0
    memory_hint_mb: int = 10240

    def __post_init__(self):
        if min(self.per_pipeline_s, self.per_dataset_s, self.memory_hint_mb) <= 0:
            raise ValueError("budget values must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    preprocessor: str
    preprocessor_params: dict
    classifier: str
    classifier_params: dict
    seed: int = 0

    @property
    def combo(self) -> tuple[str, str]:
        return (self.preprocessor, self.classifier)

    def to_json(self) -> dict:
        return {
            "preprocessor": {"name": self.preprocessor, "params": dict(self.preprocessor_params)},
            "classifier": {"name": self.classifier, "params": dict(self.classifier_params)},
            "seed": int(self.seed),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        return cls(
            obj["preprocessor"]["name"],
            dict(obj["preprocessor"]["params"]),
            obj["classifier"]["name"],
            dict(obj["classifier"]["params"]),
            int(obj["seed"]),
        )

    def encode(self) -> str:
        return canonical_json(self.to_json())

    def digest(self) -> str:
        return sha256_text(self.encode())[:16]

    def validate(self, registry: ComponentRegistry) -> None:
        registry.get(PREPROCESSOR, self.preprocessor).space.validate(self.preprocessor_params)
        registry.get(CLASSIFIER, self.classifier).space.validate(self.classifier_params)


@dataclass(frozen=True)
class EvaluationRecord:
    dataset: str
    config: PipelineConfig
    fold_scores: tuple[float, ...]
    cv_mean: float | None
    wall_time_s: float
    status: str
    started_at: float = 0.0
    failed_folds: int = 0
    n_fits: int = 0
    error: str | None = field(default=None, compare=False)

    @property
    def combo(self) -> tuple[str, str]:
        return self.config.combo

    @property
    def ok(self) -> bool:
        return self.status == OK

    @property
    def finished_at(self) -> float:
        return self.started_at + self.wall_time_s

    def key(self) -> tuple[str, str]:
        return (self.dataset, self.config.digest())

    def to_json(self) -> dict:
        return {
            "v": RECORD_VERSION,
            "dataset": self.dataset,
            "config": self.config.to_json(),
            "config_hash": self.config.digest(),
            "fold_scores": list(self.fold_scores),
            "cv_mean": self.cv_mean,
            "wall_time_s": self.wall_time_s,
            "status": self.status,
            "started_at": self.started_at,
            "failed_folds": self.failed_folds,
            "n_fits": self.n_fits,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvaluationRecord":
        if obj.get("v") != RECORD_VERSION:
            raise ValueError(f"unsupported record version {obj.get('v')!r}")
        return cls(
            dataset=obj["dataset"],
            config=PipelineConfig.from_json(obj["config"]),
            fold_scores=tuple(float(s) for s in obj["fold_scores"]),
            cv_mean=None if obj["cv_mean"] is None else float(obj["cv_mean"]),
            wall_time_s=float(obj["wall_time_s"]),
            status=obj["status"],
            started_at=float(obj.get("started_at", 0.0)),
            failed_folds=int(obj.get("failed_folds", 0)),
            n_fits=int(obj.get("n_fits", 0)),
            error=obj.get("error"),
        )

    def replace(self, **changes) -> "EvaluationRecord":
        from dataclasses import replace

        return replace(self, **changes)


def f1_weighted(y_true, y_pred) -> float:
    """Support-weighted mean of per-class F1 (classes with P+R=0 score 0)."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise LengthMismatch("empty label vectors")
    labels, inv = np.unique(np.concatenate([y_true, y_pred]), return_inverse=True)
    n = y_true.size
    t, p = inv[:n], inv[n:]
    m = len(labels)
    support = np.bincount(t, minlength=m)
    predicted = np.bincount(p, minlength=m)
    tp = np.bincount(t[t == p], minlength=m)
    denom = support + predicted
    f1 = np.divide(2.0 * tp, denom, out=np.zeros(m), where=denom > 0)
    return float(np.dot(support / n, f1))


def fit_pipeline(registry: ComponentRegistry, config: PipelineConfig, X, y):
    pre = fit_preprocessor(registry, config.preprocessor, config.preprocessor_params, X, y, config.seed)
    Z = transform(pre, X)
    if not np.all(np.isfinite(Z)):
        raise FloatingPointError("preprocessor produced non-finite values")
    clf = fit_classifier(registry, config.classifier, config.classifier_params, Z, y, config.seed)
    return pre, clf


def predict_pipeline(fitted, X) -> np.ndarray:
    pre, clf = fitted
    Z = transform(pre, X)
    if not np.all(np.isfinite(Z)):
        raise FloatingPointError("preprocessor produced non-finite values")
    return predict(clf, Z)


def evaluate_pipeline(
    d: Dataset,
    p: PipelineConfig,
    folds: FoldAssignment,
    budget: Budget | None = None,
    registry: ComponentRegistry | None = None,
    started_at: float = 0.0,
) -> EvaluationRecord:
    """Score ``p`` on every fold of ``folds`` with F1-weighted.

    The wall-clock budget is checked between folds. Up to two failing folds
    are tolerated (their count is kept in ``failed_folds``); a third turns the
    record into ``status="error"``. Component failures never propagate.
    """
    budget = budget or Budget()
    registry = registry or builtin_registry()
    t0 = time.perf_counter()
    scores: list[float] = []
    failed = 0
    fits = 0
    err = None

    def record(status, **kw):
        cv = float(np.mean(scores)) if status == OK else None
        return EvaluationRecord(
            dataset=d.name,
            config=p,
            fold_scores=tuple(scores) if status == OK else (),
            cv_mean=cv,
            wall_time_s=max(time.perf_counter() - t0, 1e-9),
            status=status,
            started_at=started_at,
            failed_folds=failed,
            n_fits=fits,
            error=kw.get("error"),
        )

    try:
        p.validate(registry)
    except Exception as exc:  # noqa: BLE001
        return record(ERROR, error=f"{type(exc).__name__}: {exc}")

    for tr, va in folds:
        fits += 1
        try:
            fitted = fit_pipeline(registry, p, d.X[tr], d.y[tr])
            scores.append(f1_weighted(d.y[va], predict_pipeline(fitted, d.X[va])))
        except Exception as exc:  # noqa: BLE001
            failed += 1
            err = f"{type(exc).__name__}: {exc}"
            log.debug("fold failure on %s: %s", d.name, err)
            if failed > MAX_FAILED_FOLDS:
                return record(ERROR, error=err)
        if time.perf_counter() - t0 > budget.per_pipeline_s:
            return record(TIMEOUT)
    if not scores:
        return record(ERROR, error=err)
    return record(OK, error=err)


def _tie_key(r: EvaluationRecord):
    return (-r.cv_mean, r.started_at, r.config.encode())


def best_of(records) -> EvaluationRecord:
    """Highest cv_mean among ok records; ties go to the earliest start, then config encoding."""
    ok = [r for r in records if r.status == OK and r.cv_mean is not None]
    if not ok:
        raise NoSuccessfulRun("no successful evaluation among the given records")
    return min(ok, key=_tie_key)
