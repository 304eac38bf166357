"""Budgeted random search over a SearchSpace and replay of its trace under smaller spaces."""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ._util import derive_seed, rng_from, worker_count
from .components import CLASSIFIER, PREPROCESSOR, ComponentRegistry, builtin_registry, sample_assignment
from .data import Dataset, FoldAssignment
from .errors import EmptyReplay
from .evaluation import Budget, EvaluationRecord, PipelineConfig, best_of, evaluate_pipeline
from .space import SearchSpace

log = logging.getLogger(__name__)

WALL = "wall"
EVALS = "evals"


@dataclass(frozen=True)
class OptimizerConfig:
    """``clock="evals"`` charges ``eval_unit_s`` per fold fit instead of measured seconds."""

    n_samples: int
    budget: Budget = field(default_factory=Budget)
    seed: int = 0
    clock: str = WALL
    eval_unit_s: float = 1.0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.clock not in (WALL, EVALS):
            raise ValueError(f"clock must be {WALL!r} or {EVALS!r}")


@dataclass
class SearchTrace:
    dataset: str
    method: str
    records: list[EvaluationRecord]
    wall_clock_total_s: float
    seed: int = 0
    registry_digest: str = ""
    clock: str = WALL
    measured_wall_s: float = 0.0

    def __len__(self):
        return len(self.records)

    @property
    def total_time(self) -> float:
        return self.wall_clock_total_s

    def header(self) -> dict:
        return {
            "type": "header",
            "dataset": self.dataset,
            "method": self.method,
            "seed": int(self.seed),
            "registry_digest": self.registry_digest,
            "clock": self.clock,
            "wall_clock_total_s": self.wall_clock_total_s,
            "measured_wall_s": self.measured_wall_s,
        }


def sample_configs(space: SearchSpace, registry: ComponentRegistry, n: int, seed: int) -> list[PipelineConfig]:
    """``n`` configurations: combo uniform over the space, hyperparameters from their domains.

    Draw ``i`` depends only on (seed, i), so any prefix is reproducible.
    """
    out = []
    for i in range(n):
        s = derive_seed(seed, "sample", i)
        p, c = space.combos[int(rng_from(s).integers(len(space.combos)))]
        pa = sample_assignment(registry.get(PREPROCESSOR, p).space, derive_seed(s, "pre"))
        ca = sample_assignment(registry.get(CLASSIFIER, c).space, derive_seed(s, "clf"))
        out.append(PipelineConfig(p, pa, c, ca, derive_seed(s, "fit") % (2**32)))
    return out


def _cost(rec: EvaluationRecord, cfg: OptimizerConfig) -> float:
    if cfg.clock == EVALS:
        return max(rec.n_fits, 1) * cfg.eval_unit_s
    return rec.wall_time_s


def _evaluate_one(args):
    d, p, folds, budget, registry = args
    return evaluate_pipeline(d, p, folds, budget, registry)


def random_search(d: Dataset, space: SearchSpace, cfg: OptimizerConfig, folds: FoldAssignment,
                  registry: ComponentRegistry | None = None, method: str = "RS",
                  workers: int | None = None) -> SearchTrace:
    """Evaluate sampled configurations in sample order until n_samples or the dataset budget runs out.

    ``started_at`` is the running sum of previous costs, so the trace reads as
    one sequential run regardless of how many workers evaluated it.
    """
    registry = registry or builtin_registry()
    workers = worker_count() if workers is None else max(1, workers)
    configs = sample_configs(space, registry, cfg.n_samples, cfg.seed)
    t0 = time.perf_counter()
    records: list[EvaluationRecord] = []
    clock = 0.0

    def take(rec):
        nonlocal clock
        cost = _cost(rec, cfg)
        records.append(rec.replace(started_at=clock, wall_time_s=cost))
        clock += cost

    if workers == 1:
        for p in configs:
            if clock >= cfg.budget.per_dataset_s:
                break
            take(evaluate_pipeline(d, p, folds, cfg.budget, registry))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for start in range(0, len(configs), workers):
                if clock >= cfg.budget.per_dataset_s:
                    break
                batch = configs[start:start + workers]
                for rec in pool.map(_evaluate_one, [(d, p, folds, cfg.budget, registry) for p in batch]):
                    if clock >= cfg.budget.per_dataset_s:
                        break
                    take(rec)
    if len(records) < len(configs):
        log.info("%s: dataset budget exhausted after %d of %d samples", d.name, len(records), len(configs))
    return SearchTrace(d.name, method, records, clock, cfg.seed, registry.digest(), cfg.clock,
                       time.perf_counter() - t0)


def replay_restricted(full_trace: SearchTrace, space: SearchSpace, method: str | None = None) -> SearchTrace:
    """Records of ``full_trace`` whose combination lies in ``space``, on a re-accumulated clock."""
    allowed = set(space.combos)
    kept = []
    clock = 0.0
    for r in sorted(full_trace.records, key=lambda r: r.started_at):
        if r.combo in allowed:
            kept.append(r.replace(started_at=clock))
            clock += r.wall_time_s
    if not kept:
        raise EmptyReplay(f"no record of {full_trace.dataset} falls inside the space")
    return SearchTrace(full_trace.dataset, method or space.provenance.get("method", "replay"), kept, clock,
                       full_trace.seed, full_trace.registry_digest, full_trace.clock, 0.0)


def completed_by(trace: SearchTrace, t_s: float) -> list[EvaluationRecord]:
    return [r for r in trace.records if r.finished_at <= t_s]


def best_at_time(trace: SearchTrace, t_s: float) -> EvaluationRecord:
    """best_of over the records finished by ``t_s``."""
    if t_s < 0 or math.isnan(t_s):
        raise ValueError("t_s must be >= 0")
    return best_of(completed_by(trace, t_s))


def write_trace(path, trace: SearchTrace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(trace.header(), sort_keys=True) + "\n")
        for r in trace.records:
            fh.write(json.dumps(r.to_json(), sort_keys=True) + "\n")


def read_trace(path) -> SearchTrace:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path} is empty")
    head = json.loads(lines[0])
    if head.get("type") != "header":
        raise ValueError(f"{path} lacks a trace header")
    records = [EvaluationRecord.from_json(json.loads(x)) for x in lines[1:] if x.strip()]
    return SearchTrace(head["dataset"], head["method"], records, float(head["wall_clock_total_s"]),
                       int(head["seed"]), head.get("registry_digest", ""), head.get("clock", WALL),
                       float(head.get("measured_wall_s", 0.0)))
