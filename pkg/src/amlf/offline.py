"""Offline phase helpers: fill the run store and the meta-feature directory."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from ._util import derive_seed
from .components import ComponentRegistry
from .data import load_dataset, preprocess_fixed, stratified_kfold
from .evaluation import Budget, evaluate_pipeline
from .metafeatures import ExtractorTiming, extract_all_timed, load_metafeatures, save_metafeatures
from .search import OptimizerConfig, sample_configs
from .space import full_space
from .store import RunStore

log = logging.getLogger(__name__)


@dataclass
class GenMetaResult:
    dataset: str
    written: int
    skipped: int
    ok: int
    error: str | None = None


def dataset_paths(spec) -> list[Path]:
    """CSV files named by ``spec``: a file, a directory (its ``*.csv``), or a list of those."""
    items = spec if isinstance(spec, (list, tuple)) else [spec]
    out: list[Path] = []
    for item in items:
        p = Path(item)
        if p.is_dir():
            out.extend(sorted(p.glob("*.csv")))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(f"no dataset at {p}")
    return out


def gen_meta(paths, store: RunStore, registry: ComponentRegistry, samples: int, folds: int, seed: int,
             budget: Budget | None = None, mf_dir=None) -> list[GenMetaResult]:
    """Full-registry random search on every dataset, appended to ``store``.

    Configurations already in the store (same dataset and config hash) are
    not evaluated again. Failures are reported per dataset.
    """
    budget = budget or Budget()
    space = full_space(registry)
    results = []
    for path in paths:
        try:
            d = load_dataset(path)
            if mf_dir is not None:
                target = Path(mf_dir) / f"{d.name}.json"
                if not target.exists():
                    mf, timing = extract_all_timed(d)
                    Path(mf_dir).mkdir(parents=True, exist_ok=True)
                    save_metafeatures(target, mf, timing, d.name)
            d = preprocess_fixed(d)
            fa = stratified_kfold(d, folds, derive_seed(seed, "folds", d.name))
            cfg = OptimizerConfig(samples, budget, derive_seed(seed, "gen-meta", d.name))
            written = skipped = ok = 0
            clock = 0.0
            for p in sample_configs(space, registry, cfg.n_samples, cfg.seed):
                if (d.name, p.digest()) in store:
                    skipped += 1
                    continue
                if clock >= budget.per_dataset_s:
                    break
                rec = evaluate_pipeline(d, p, fa, budget, registry, started_at=clock)
                clock += rec.wall_time_s
                written += store.append_many([rec])
                ok += rec.ok
            results.append(GenMetaResult(d.name, written, skipped, ok))
            log.info("%s: %d written, %d already stored, %d ok", d.name, written, skipped, ok)
        except Exception as exc:  # noqa: BLE001
            log.error("%s: %s", path, exc)
            results.append(GenMetaResult(Path(path).stem, 0, 0, 0, f"{type(exc).__name__}: {exc}"))
    return results


def load_mf_dir(mf_dir) -> tuple[dict, ExtractorTiming]:
    """All meta-feature files in ``mf_dir`` keyed by dataset, plus their merged timings."""
    mf = {}
    timing = ExtractorTiming()
    for p in sorted(Path(mf_dir).glob("*.json")):
        vec, t = load_metafeatures(p)
        mf[p.stem] = vec
        if t is not None:
            timing.extend(t)
    return mf, timing
