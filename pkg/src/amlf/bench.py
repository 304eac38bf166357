"""Benchmark harness: live full-space RS per test dataset, replayed under every designed space.

Outputs (CSV unless noted) in the chosen directory:

``rank_curves``, ``friedman_nemenyi``, ``wilcoxon``, ``time_reduction``,
``space_size``, ``recommendation_frequency``, ``overfit_gaps`` (the seven
reports), plus ``slice_scores``, ``units``, ``wall_times`` and
``summary.json``. Only ``wall_times.csv`` holds measured wall-clock values
under the ``evals`` clock.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import benchstats as bs
from ._util import canonical_json, derive_seed, jsonable, sha256_file, sha256_text
from .components import ComponentRegistry, builtin_registry
from .data import FixedPreprocessor, SplitSpec, load_dataset, stratified_kfold, stratified_split
from .errors import ConfigError, DigestMismatch, EmptyReplay, NoSuccessfulRun
from .evaluation import Budget, f1_weighted, fit_pipeline, predict_pipeline
from .metafeatures import LANDMARKING, ExtractorTiming, extract_all_timed
from .metamodel import MetaModel, train_metamodel
from .offline import dataset_paths, gen_meta
from .search import EVALS, WALL, OptimizerConfig, best_at_time, random_search, replay_restricted
from .space import (
    design_space_autosklearn2,
    design_space_landmarking,
    design_space_mtl,
    design_space_random,
    full_space,
)
from .store import RunStore

log = logging.getLogger(__name__)

DEFAULT_GRID = (600.0, 1800.0, 3600.0, 36000.0)
BASELINE = "RS"
REPORTS = (
    "rank_curves.csv",
    "friedman_nemenyi.csv",
    "wilcoxon.csv",
    "time_reduction.csv",
    "space_size.csv",
    "recommendation_frequency.csv",
    "overfit_gaps.csv",
)
BASELINE_DESIGNERS = ("random", "landmarking", "autosklearn2")


def mtl_method(theta: float) -> str:
    return f"RS-mtl-{round(theta * 100):d}"


def registry_from_manifest(manifest: dict) -> ComponentRegistry:
    """Built-in registry cut down to the manifest's components; hyperparameter spaces must agree."""
    reg = builtin_registry().restrict(
        [p["name"] for p in manifest["preprocessors"]], [c["name"] for c in manifest["classifiers"]]
    )
    if reg.manifest() != manifest:
        raise DigestMismatch("registry manifest differs from the built-in component definitions")
    return reg


@dataclass
class BenchConfig:
    train: list[Path]
    test: list[Path]
    samples: int = 100
    folds: int = 10
    repetitions: int = 10
    seed: int = 0
    train_fraction: float = 0.75
    pipeline_timeout_s: float = 600.0
    dataset_budget_s: float = 86400.0
    clock: str = WALL
    eval_unit_s: float = 1.0
    thetas: tuple[float, ...] = (0.99, 0.95, 0.90)
    baselines: tuple[str, ...] = BASELINE_DESIGNERS
    grid: tuple[float, ...] = DEFAULT_GRID
    scale: object = "relative"
    runs: Path | None = None
    model: Path | None = None
    gen_samples: int = 200
    trees: int = 300
    topk: int = 25
    time_threshold_s: float = 0.1
    preprocessors: list[str] | None = None
    classifiers: list[str] | None = None
    workers: int | None = None
    source: dict = field(default_factory=dict, repr=False)

    @property
    def methods(self) -> list[str]:
        names = {"random": "RS-random", "landmarking": "RS-landmarking", "autosklearn2": "RS-autosklearn-2"}
        return [BASELINE, *(mtl_method(t) for t in self.thetas), *(names[b] for b in self.baselines)]

    def validate(self) -> None:
        if self.samples < 1 or self.repetitions < 1 or self.folds < 2:
            raise ConfigError("samples and repetitions must be >= 1 and folds >= 2")
        if self.clock not in (WALL, EVALS):
            raise ConfigError(f"clock must be {WALL!r} or {EVALS!r}")
        if any(not 0 <= t < 1 for t in self.thetas):
            raise ConfigError("every theta must lie in [0, 1)")
        unknown = set(self.baselines) - set(BASELINE_DESIGNERS)
        if unknown:
            raise ConfigError(f"unknown baselines {sorted(unknown)}")
        if not self.grid or any(g <= 0 for g in self.grid) or list(self.grid) != sorted(self.grid):
            raise ConfigError("time grid must be positive and ascending")
        if not (self.scale == "relative" or (isinstance(self.scale, (int, float)) and self.scale > 0)):
            raise ConfigError("scale must be 'relative' or a positive number")
        if not self.test:
            raise ConfigError("no test datasets")
        if self.model is None and not self.train:
            raise ConfigError("training datasets are needed when no model is given")
        check_disjoint(self.train, self.test)


def check_disjoint(train, test) -> None:
    """Refuse any overlap between train and test by resolved path, file name stem or content."""
    tr = {Path(p).resolve() for p in train}
    te = {Path(p).resolve() for p in test}
    clash = tr & te
    clash |= {p for p in te if p.stem in {q.stem for q in tr}}
    digests = {sha256_file(p) for p in tr}
    clash |= {p for p in te if sha256_file(p) in digests}
    if clash:
        raise ConfigError(f"train and test datasets overlap: {sorted(str(p) for p in clash)}")


def load_config(path) -> BenchConfig:
    """Read a TOML bench file; relative paths resolve against the file's directory."""
    path = Path(path)
    raw = tomllib.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def rel(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    def section(name):
        return raw.get(name, {})

    known = {"corpus", "search", "metamodel", "methods", "slices", "registry"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown config sections {sorted(extra)}")
    corpus, search, meta = section("corpus"), section("search"), section("metamodel")
    methods, slices, reg = section("methods"), section("slices"), section("registry")
    try:
        train = dataset_paths([rel(p) for p in corpus.get("train", [])])
        test = dataset_paths([rel(p) for p in corpus.get("test", [])])
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from None
    cfg = BenchConfig(
        train=train,
        test=test,
        samples=int(search.get("samples", 100)),
        folds=int(search.get("folds", 10)),
        repetitions=int(search.get("repetitions", 10)),
        seed=int(search.get("seed", 0)),
        train_fraction=float(search.get("train_fraction", 0.75)),
        pipeline_timeout_s=float(search.get("pipeline_timeout_s", 600.0)),
        dataset_budget_s=float(search.get("dataset_budget_s", 86400.0)),
        clock=str(search.get("clock", WALL)),
        eval_unit_s=float(search.get("eval_unit_s", 1.0)),
        workers=search.get("workers"),
        thetas=tuple(float(t) for t in methods.get("thetas", (0.99, 0.95, 0.90))),
        baselines=tuple(methods.get("baselines", BASELINE_DESIGNERS)),
        grid=tuple(float(g) for g in slices.get("grid", DEFAULT_GRID)),
        scale=slices.get("scale", "relative"),
        runs=rel(meta["runs"]) if "runs" in meta else None,
        model=rel(meta["model"]) if "model" in meta else None,
        gen_samples=int(meta.get("gen_samples", 200)),
        trees=int(meta.get("trees", 300)),
        topk=int(meta.get("topk", 25)),
        time_threshold_s=float(meta.get("time_threshold_s", 0.1)),
        preprocessors=reg.get("preprocessors"),
        classifiers=reg.get("classifiers"),
        source=raw,
    )
    cfg.validate()
    return cfg


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def write_csv(path, rows: list[dict], header: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.get(h)) for h in header])


class _Scorer:
    """Refit-and-test cache keyed by (dataset, config hash)."""

    def __init__(self, registry):
        self.registry = registry
        self.cache: dict[tuple[str, str], tuple[float, float]] = {}

    def __call__(self, name, rec, train, test) -> tuple[float, float]:
        key = (name, rec.config.digest())
        if key not in self.cache:
            try:
                fitted = fit_pipeline(self.registry, rec.config, train.X, train.y)
                tr = f1_weighted(train.y, predict_pipeline(fitted, train.X))
                te = f1_weighted(test.y, predict_pipeline(fitted, test.X))
            except Exception as exc:  # noqa: BLE001
                log.warning("refit of %s on %s failed: %s", rec.config.digest(), name, exc)
                tr, te = 0.0, 0.0
            self.cache[key] = (tr, te)
        return self.cache[key]


def _prepare_model(cfg: BenchConfig, out: Path, registry: ComponentRegistry):
    """Load or build the meta-model; enforce the provenance chain."""
    store = None
    if cfg.runs is not None:
        if not cfg.runs.exists():
            raise ConfigError(f"run store {cfg.runs} not found")
        store = RunStore(cfg.runs)
    if cfg.model is not None:
        model = MetaModel.load(cfg.model)
        if model.provenance.get("registry_digest") != registry.digest():
            raise DigestMismatch("model was trained for a different component registry")
        if store is not None and model.provenance.get("store_digest") != store.digest():
            raise DigestMismatch("model provenance does not match the configured run store")
        test_names = {p.stem for p in cfg.test}
        leaked = test_names & set(model.provenance.get("train_datasets", []))
        if leaked:
            raise ConfigError(f"model was trained on test datasets {sorted(leaked)}")
        return model, store
    if store is None:
        store = RunStore(out / "runs.jsonl")
        gen_meta(cfg.train, store, registry, cfg.gen_samples, cfg.folds, cfg.seed,
                 Budget(cfg.pipeline_timeout_s, cfg.dataset_budget_s))
    mf = {}
    timing = ExtractorTiming()
    for p in cfg.train:
        d = load_dataset(p)
        vec, t = extract_all_timed(d)
        mf[d.name] = vec
        timing.extend(t)
    train_names = sorted(mf)
    model = train_metamodel(store.records, mf, timing, registry, train_names, cfg.topk, cfg.trees,
                            cfg.seed, cfg.time_threshold_s, store.digest())
    model.save(out / "model.json")
    return model, store


def slice_times(cfg: BenchConfig, rs_total: float) -> list[float]:
    if cfg.scale == "relative":
        top = cfg.grid[-1]
        return [rs_total * g / top for g in cfg.grid]
    return [g * float(cfg.scale) for g in cfg.grid]


def run_bench(cfg: BenchConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg.validate()
    registry = builtin_registry().restrict(cfg.preprocessors, cfg.classifiers)
    model, store = _prepare_model(cfg, out, registry)
    if model.registry_digest != registry.digest():
        raise DigestMismatch("model registry manifest differs from the bench registry")
    methods = cfg.methods
    budget = Budget(cfg.pipeline_timeout_s, cfg.dataset_budget_s)
    scorer = _Scorer(registry)
    full = full_space(registry, BASELINE)

    slice_rows, unit_rows, wall_rows, gap_rows = [], [], [], []
    spaces: dict[str, dict[str, list]] = {m: {} for m in methods}
    totals: dict[str, dict[str, list]] = {m: {} for m in methods}
    final_test: dict[tuple, float] = {}
    per_slice: dict[int, dict] = {i: {} for i in range(len(cfg.grid))}
    units = []
    failures = []

    for path in cfg.test:
        try:
            d = load_dataset(path)
            train, test = stratified_split(d, SplitSpec(cfg.train_fraction, derive_seed(cfg.seed, "split", d.name)))
            mf, timing = extract_all_timed(train)
            fixed_pre = FixedPreprocessor().fit(train)
            train, test = fixed_pre.transform(train), fixed_pre.transform(test)
            extraction_s = sum(sum(v) for v in timing.times.values())
            folds = stratified_kfold(train, cfg.folds, derive_seed(cfg.seed, "folds", d.name))
            fixed = {mtl_method(t): design_space_mtl(model, mf, t, registry) for t in cfg.thetas}
            if "landmarking" in cfg.baselines:
                fixed["RS-landmarking"] = design_space_landmarking(
                    model.train_landmarking, model.train_best, mf.of_group(LANDMARKING).values)
            if "autosklearn2" in cfg.baselines:
                fixed["RS-autosklearn-2"] = design_space_autosklearn2(model.train_best)
        except Exception as exc:  # noqa: BLE001
            log.error("skipping %s: %s", path, exc)
            failures.append({"dataset": Path(path).stem, "error": f"{type(exc).__name__}: {exc}"})
            continue

        for rep in range(cfg.repetitions):
            unit = (d.name, rep)
            units.append(unit)
            ocfg = OptimizerConfig(cfg.samples, budget, derive_seed(cfg.seed, "rs", d.name, rep),
                                   cfg.clock, cfg.eval_unit_s)
            trace = random_search(train, full, ocfg, folds, registry, BASELINE, cfg.workers)
            rep_spaces = {BASELINE: full, **fixed}
            if "random" in cfg.baselines:
                rep_spaces["RS-random"] = design_space_random(registry, derive_seed(cfg.seed, "random", d.name, rep))
            times = slice_times(cfg, trace.wall_clock_total_s)
            wall_rows.append({"dataset": d.name, "rep": rep, "wall_search_s": trace.measured_wall_s,
                              "wall_extraction_s": extraction_s})
            for m in methods:
                space = rep_spaces[m]
                spaces[m].setdefault(d.name, []).append(space)
                try:
                    tr = trace if m == BASELINE else replay_restricted(trace, space, m)
                except EmptyReplay:
                    tr = None
                totals[m].setdefault(d.name, []).append(0.0 if tr is None else tr.wall_clock_total_s)
                last = None
                for i, t in enumerate(times):
                    rec = None
                    if tr is not None:
                        try:
                            rec = best_at_time(tr, t)
                        except NoSuccessfulRun:
                            rec = None
                    test_f1 = scorer(d.name, rec, train, test)[1] if rec is not None else 0.0
                    per_slice[i][(unit, m)] = test_f1
                    slice_rows.append({
                        "dataset": d.name, "rep": rep, "slice": i, "time_s": t, "method": m,
                        "cv_f1": None if rec is None else rec.cv_mean, "test_f1": test_f1,
                        "n_completed": 0 if tr is None else sum(r.finished_at <= t for r in tr.records),
                    })
                    last = rec
                final_test[(unit, m)] = per_slice[len(times) - 1][(unit, m)]
                train_f1 = test_f1 = None
                if last is not None:
                    train_f1, test_f1 = scorer(d.name, last, train, test)
                    gap_rows.append({"method": m, "train": train_f1, "val": last.cv_mean, "test": test_f1})
                unit_rows.append({
                    "dataset": d.name, "rep": rep, "method": m,
                    "space_size": len(space),
                    "n_records": 0 if tr is None else len(tr.records),
                    "total_time_s": 0.0 if tr is None else tr.wall_clock_total_s,
                    "final_cv_f1": None if last is None else last.cv_mean,
                    "final_train_f1": train_f1,
                    "final_test_f1": test_f1 if last is not None else 0.0,
                    "final_config": None if last is None else last.config.digest(),
                })

    if not units:
        raise ConfigError("every test dataset failed; see log")
    return _write_reports(cfg, out, methods, units, per_slice, final_test, totals, spaces, gap_rows,
                          slice_rows, unit_rows, wall_rows, failures, model, store, registry)


def _write_reports(cfg, out, methods, units, per_slice, final_test, totals, spaces, gap_rows,
                   slice_rows, unit_rows, wall_rows, failures, model, store, registry) -> dict:
    units = sorted(units)
    k, n = len(methods), len(units)
    rank_rows, fn_rows, summary_slices = [], [], []
    for i, nominal in enumerate(cfg.grid):
        mat = bs.MethodMatrix.from_cells({(u, m): v for (u, m), v in per_slice[i].items()}, methods, units)
        ranks = bs.average_ranks(mat)
        for m in methods:
            rank_rows.append({"slice": i, "nominal_s": nominal, "method": m, "mean_rank": ranks[m], "n_units": n})
        row = {"slice": i, "nominal_s": nominal, "k": k, "n_units": n}
        if k >= 3 and n >= 2:
            row["statistic"], row["p_value"] = bs.friedman_test(mat)
        if 2 <= k <= 10:
            row["cd_0.05"] = bs.nemenyi_cd(k, n, 0.05)
            row["cd_0.10"] = bs.nemenyi_cd(k, n, 0.10)
        fn_rows.append(row)
        summary_slices.append({**row, "ranks": ranks})

    wil_rows = []
    base = [final_test.get((u, BASELINE), 0.0) for u in units]
    for m in methods:
        if m == BASELINE:
            continue
        other = [final_test.get((u, m), 0.0) for u in units]
        row = {"method": m, "baseline": BASELINE, "n_units": n,
               "mean_diff": float(sum(o - b for o, b in zip(other, base)) / n)}
        try:
            row["statistic"], row["p_value"] = bs.wilcoxon_signed_rank(other, base)
            row["n_nonzero"] = sum(o != b for o, b in zip(other, base))
        except bs.AllZeroDifferences:
            row["p_value"], row["n_nonzero"] = 1.0, 0
        wil_rows.append(row)

    designed = {m: s for m, s in spaces.items() if m != BASELINE}
    reports = {
        "rank_curves.csv": (rank_rows, ["slice", "nominal_s", "method", "mean_rank", "n_units"]),
        "friedman_nemenyi.csv": (fn_rows, ["slice", "nominal_s", "k", "n_units", "statistic", "p_value",
                                           "cd_0.05", "cd_0.10"]),
        "wilcoxon.csv": (wil_rows, ["method", "baseline", "n_units", "n_nonzero", "statistic", "p_value",
                                    "mean_diff"]),
        "time_reduction.csv": (bs.time_reduction_report(totals, BASELINE),
                               ["method", "dataset", "total_time_s", "baseline_time_s", "reduction"]),
        "space_size.csv": (bs.space_size_report(spaces),
                           ["method", "n_spaces", "mean_preprocessors", "mean_classifiers", "mean_combos"]),
        "recommendation_frequency.csv": (bs.recommendation_frequency_report(designed),
                                         ["method", "kind", "component", "count", "percent"]),
        "overfit_gaps.csv": (bs.overfit_gap_report(gap_rows) if gap_rows else [],
                             ["method", "gap", "mean", "sd", "n"]),
        "slice_scores.csv": (slice_rows, ["dataset", "rep", "slice", "time_s", "method", "cv_f1", "test_f1",
                                          "n_completed"]),
        "units.csv": (unit_rows, ["dataset", "rep", "method", "space_size", "n_records", "total_time_s",
                                  "final_cv_f1", "final_train_f1", "final_test_f1", "final_config"]),
        "wall_times.csv": (wall_rows, ["dataset", "rep", "wall_search_s", "wall_extraction_s"]),
    }
    for name, (rows, header) in reports.items():
        write_csv(out / name, rows, header)

    summary = {
        "methods": methods,
        "n_units": n,
        "clock": cfg.clock,
        "grid": list(cfg.grid),
        "slices": summary_slices,
        "wilcoxon": wil_rows,
        "failures": failures,
        "provenance": {
            "model_digest": model.digest(),
            "store_digest": None if store is None else store.digest(),
            "registry_digest": registry.digest(),
            "config_digest": sha256_text(canonical_json(cfg.source)) if cfg.source else None,
            "test_datasets": sorted({u[0] for u in units}),
        },
        "reports": list(REPORTS),
    }
    summary = _clean(jsonable(summary))
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True, allow_nan=False),
                                      encoding="utf-8")
    return summary


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
