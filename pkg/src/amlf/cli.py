"""``amlf`` command line: offline meta-knowledge, space design, search and benchmarking."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import bench as bench_mod
from ._util import derive_seed
from .components import builtin_registry
from .corpus import CORPUS_SEED, write_corpus
from .data import load_dataset, preprocess_fixed, stratified_kfold
from .errors import AmlfError, EmptyStore
from .evaluation import Budget
from .metafeatures import LANDMARKING, compute_pipeline_stats, extract_all_timed
from .metamodel import MetaModel, build_metadataset, evaluate_grouped_cv, train_metamodel
from .offline import dataset_paths, gen_meta, load_mf_dir
from .search import OptimizerConfig, random_search, write_trace
from .space import (
    SearchSpace,
    design_space_autosklearn2,
    design_space_landmarking,
    design_space_mtl,
    design_space_random,
)
from .store import RunStore

log = logging.getLogger("amlf")


def _names(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else None


def _store_registry(store: RunStore):
    """Built-in registry restricted to the components that appear in the store."""
    base = builtin_registry()
    pre = {r.config.preprocessor for r in store}
    clf = {r.config.classifier for r in store}
    return base.restrict([n for n in base.preprocessor_names() if n in pre],
                         [n for n in base.classifier_names() if n in clf])


def cmd_make_corpus(a) -> int:
    paths = write_corpus(a.out, a.seed)
    for split, ps in paths.items():
        print(f"{split}: {len(ps)} datasets")
    return 0


def cmd_gen_meta(a) -> int:
    registry = builtin_registry().restrict(_names(a.preprocessors), _names(a.classifiers))
    store = RunStore(a.out)
    before = store.digest()
    mf_dir = Path(a.mf_dir) if a.mf_dir else Path(a.out).parent / "mf"
    results = gen_meta(dataset_paths(a.datasets), store, registry, a.samples, a.folds, a.seed,
                       Budget(a.pipeline_timeout, a.dataset_budget), mf_dir)
    for r in results:
        status = f"error: {r.error}" if r.error else f"{r.written} written, {r.skipped} skipped, {r.ok} ok"
        print(f"{r.dataset}: {status}")
    print(f"store {store.path} digest {store.digest()}" + (" (unchanged)" if store.digest() == before else ""))
    return 1 if results and all(r.error for r in results) else 0


def cmd_train_metamodel(a) -> int:
    store = RunStore(a.runs)
    if len(store) == 0:
        raise EmptyStore(f"{a.runs} holds no records")
    mf, timing = load_mf_dir(a.mf_dir)
    train_names = sorted(_names(a.train_datasets) or {r.dataset for r in store if r.ok})
    model = train_metamodel(store.records, mf, timing, _store_registry(store), train_names, a.topk,
                            a.trees, a.seed, a.time_threshold, store.digest())
    digest = model.save(a.out)
    print(f"model {a.out}: {len(model.schema)} features, {model.forest.n_trees} trees, digest {digest}")
    if a.importances:
        with open(a.importances, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature", "importance"])
            w.writerows((n, repr(s)) for n, s in model.importances)
    return 0


def cmd_meta_cv(a) -> int:
    store = RunStore(a.runs)
    if len(store) == 0:
        raise EmptyStore(f"{a.runs} holds no records")
    mf, _ = load_mf_dir(a.mf_dir)
    names = sorted({r.dataset for r in store if r.ok})
    md = build_metadataset(store.records, mf, compute_pipeline_stats(store.records, names),
                           _store_registry(store), datasets=names)
    res = evaluate_grouped_cv(md, a.learner, a.folds, a.repetitions, a.seed, a.trees, a.per_fold_pstats)
    rows = [{"repetition": i, **m.to_json()} for i, m in enumerate(res)]
    out = open(a.out, "w", newline="", encoding="utf-8") if a.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=["repetition", "rmse", "rrmse", "r2"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    finally:
        if a.out:
            out.close()
    return 0


def cmd_design_space(a) -> int:
    model = MetaModel.load(a.model)
    registry = bench_mod.registry_from_manifest(model.registry_manifest)
    if a.method == "mtl":
        space = design_space_mtl(model, load_dataset(a.dataset), a.theta, registry)
    elif a.method == "random":
        space = design_space_random(registry, a.seed)
    elif a.method == "landmarking":
        mf, _ = extract_all_timed(load_dataset(a.dataset), groups=(LANDMARKING,))
        space = design_space_landmarking(model.train_landmarking, model.train_best, mf.values)
    else:
        space = design_space_autosklearn2(model.train_best)
    if not space.provenance.get("model_digest"):
        space.provenance["model_digest"] = model.digest()
    space.provenance["registry_digest"] = registry.digest()
    space.save(a.out)
    print(f"{a.method}: {len(space)} combinations -> {a.out}")
    return 0


def cmd_search(a) -> int:
    space = SearchSpace.load(a.space)
    base = builtin_registry()
    registry = base.restrict([n for n in base.preprocessor_names() if n in space.preprocessors],
                             [n for n in base.classifier_names() if n in space.classifiers])
    space.check(registry)
    d = preprocess_fixed(load_dataset(a.dataset))
    folds = stratified_kfold(d, a.folds, derive_seed(a.seed, "folds", d.name))
    cfg = OptimizerConfig(a.samples, Budget(a.pipeline_timeout, a.dataset_budget), a.seed)
    trace = random_search(d, space, cfg, folds, registry, space.provenance.get("method", "RS"))
    write_trace(a.trace, trace)
    ok = [r for r in trace.records if r.ok]
    best = max((r.cv_mean for r in ok), default=None)
    print(f"{len(trace.records)} evaluated, {len(ok)} ok, best cv F1 {best}")
    return 0


def cmd_bench(a) -> int:
    cfg = bench_mod.load_config(a.config)
    summary = bench_mod.run_bench(cfg, a.out)
    final = summary["slices"][-1]
    print(json.dumps({"n_units": summary["n_units"], "final_ranks": final["ranks"],
                      "friedman_p": final.get("p_value")}, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amlf", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("make-corpus", help="write the bundled synthetic corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=CORPUS_SEED)
    s.set_defaults(func=cmd_make_corpus)

    s = sub.add_parser("gen-meta", help="random-search every dataset and append to a run store")
    s.add_argument("--datasets", required=True, nargs="+")
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--mf-dir", default=None, help="where meta-feature JSONs go (default: <out dir>/mf)")
    s.add_argument("--pipeline-timeout", type=float, default=600.0)
    s.add_argument("--dataset-budget", type=float, default=86400.0)
    s.add_argument("--preprocessors", default=None, help="comma list; default all")
    s.add_argument("--classifiers", default=None, help="comma list; default all")
    s.set_defaults(func=cmd_gen_meta)

    s = sub.add_parser("train-metamodel", help="fit the meta-model from a run store")
    s.add_argument("--runs", required=True)
    s.add_argument("--mf-dir", required=True)
    s.add_argument("--trees", type=int, default=300)
    s.add_argument("--topk", type=int, default=25)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--time-threshold", type=float, default=0.1)
    s.add_argument("--train-datasets", default=None, help="comma list; default every dataset in the store")
    s.add_argument("--importances", default=None, help="optional CSV of feature importances")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_metamodel)

    s = sub.add_parser("meta-cv", help="grouped cross-validation of a meta-learner")
    s.add_argument("--runs", required=True)
    s.add_argument("--mf-dir", required=True)
    s.add_argument("--learner", choices=("rf", "knn", "dt"), default="rf")
    s.add_argument("--folds", type=int, default=3)
    s.add_argument("--repetitions", type=int, default=10)
    s.add_argument("--trees", type=int, default=300)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--per-fold-pstats", action="store_true")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_meta_cv)

    s = sub.add_parser("design-space", help="design a search space for one dataset")
    s.add_argument("--model", required=True)
    s.add_argument("--dataset", default=None)
    s.add_argument("--theta", type=float, default=0.95)
    s.add_argument("--method", choices=("mtl", "random", "landmarking", "ask2"), default="mtl")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_design_space)

    s = sub.add_parser("search", help="random search inside a space")
    s.add_argument("--dataset", required=True)
    s.add_argument("--space", required=True)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--pipeline-timeout", type=float, default=600.0)
    s.add_argument("--dataset-budget", type=float, default=86400.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trace", required=True)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("bench", help="run the benchmark described by a TOML file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "method", None) in ("mtl", "landmarking") and args.command == "design-space" \
            and not args.dataset:
        print("error: --dataset is required for this method", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (AmlfError, FileNotFoundError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
