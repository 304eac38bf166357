import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from amlf.components import builtin_registry
from amlf.data import stratified_kfold
from amlf.errors import EmptyReplay, NoSuccessfulRun
from amlf.evaluation import TIMEOUT, Budget, best_of
from amlf.search import (
    EVALS,
    OptimizerConfig,
    SearchTrace,
    best_at_time,
    completed_by,
    random_search,
    read_trace,
    replay_restricted,
    sample_configs,
    write_trace,
)
from amlf.space import SearchSpace, full_space

from .conftest import make_record

REG = builtin_registry().restrict(["no_preprocessing", "pca"], ["knn", "gaussian_nb", "decision_tree"])


def synthetic_trace(rng, n=40):
    combos = REG.combos()
    recs, clock = [], 0.0
    for i in range(n):
        p, c = combos[int(rng.integers(len(combos)))]
        wall = float(rng.uniform(0.1, 2.0))
        status = "ok" if rng.random() > 0.1 else TIMEOUT
        cv = float(rng.random()) if status == "ok" else None
        recs.append(make_record("d", p, c, cv, started=clock, wall=wall, status=status, seed=i))
        clock += wall
    return SearchTrace("d", "RS", recs, clock, 0)


def test_single_combo_space(blobs):
    space = SearchSpace((("pca", "knn"),))
    cfg = OptimizerConfig(10, Budget(), seed=1)
    trace = random_search(blobs, space, cfg, stratified_kfold(blobs, 3, 0), REG, workers=1)
    assert len(trace.records) == 10 and {r.combo for r in trace.records} == {("pca", "knn")}
    starts = [r.started_at for r in trace.records]
    assert starts == sorted(starts) and len(set(starts)) == len(starts)
    assert trace.wall_clock_total_s >= max(r.finished_at for r in trace.records) - 1e-12


def test_tiny_dataset_budget_truncates(blobs):
    cfg = OptimizerConfig(50, Budget(per_dataset_s=1e-6), seed=1)
    trace = random_search(blobs, full_space(REG), cfg, stratified_kfold(blobs, 3, 0), REG, workers=1)
    assert len(trace.records) == 1


def test_eval_clock_is_deterministic(blobs):
    cfg = OptimizerConfig(6, Budget(), seed=3, clock=EVALS, eval_unit_s=0.5)
    fa = stratified_kfold(blobs, 3, 0)
    a = random_search(blobs, full_space(REG), cfg, fa, REG, workers=1)
    b = random_search(blobs, full_space(REG), cfg, fa, REG, workers=1)
    assert [r.to_json() for r in a.records] == [r.to_json() for r in b.records]
    assert a.wall_clock_total_s == pytest.approx(6 * 3 * 0.5)


def test_parallel_matches_sequential(blobs, monkeypatch):
    cfg = OptimizerConfig(5, Budget(), seed=8, clock=EVALS)
    fa = stratified_kfold(blobs, 3, 0)
    seq = random_search(blobs, full_space(REG), cfg, fa, REG, workers=1)
    par = random_search(blobs, full_space(REG), cfg, fa, REG, workers=2)
    assert [r.to_json() for r in seq.records] == [r.to_json() for r in par.records]


def test_combo_frequencies_uniform():
    space = SearchSpace((("pca", "knn"), ("pca", "gaussian_nb"), ("no_preprocessing", "knn"),
                         ("no_preprocessing", "decision_tree")))
    counts = {c: 0 for c in space.combos}
    for p in sample_configs(space, REG, 10_000, 99):
        counts[p.combo] += 1
    assert stats.chisquare(list(counts.values())).pvalue > 0.01


def test_sample_prefix_stable():
    a = sample_configs(full_space(REG), REG, 5, 4)
    b = sample_configs(full_space(REG), REG, 12, 4)
    assert a == b[:5]
    for p in b:
        p.validate(REG)


def test_optimizer_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(0)
    with pytest.raises(ValueError):
        OptimizerConfig(3, clock="cpu")


def test_replay_identity_and_accumulation():
    rng = np.random.default_rng(0)
    trace = synthetic_trace(rng)
    same = replay_restricted(trace, full_space(REG))
    assert [r.to_json() for r in same.records] == [r.to_json() for r in trace.records]
    assert same.wall_clock_total_s == pytest.approx(trace.wall_clock_total_s, abs=1e-9)
    sub = SearchSpace((("pca", "knn"), ("no_preprocessing", "gaussian_nb")))
    rep = replay_restricted(trace, sub)
    kept = [r for r in trace.records if r.combo in set(sub.combos)]
    assert [r.config for r in rep.records] == [r.config for r in kept]
    clock = 0.0
    for r_new, r_old in zip(rep.records, kept):
        assert r_new.started_at == pytest.approx(clock, abs=1e-9)
        clock += r_old.wall_time_s
    assert abs(rep.wall_clock_total_s - math.fsum(r.wall_time_s for r in kept)) <= 1e-9


def test_empty_replay():
    trace = synthetic_trace(np.random.default_rng(1))
    with pytest.raises(EmptyReplay):
        replay_restricted(trace, SearchSpace((("polynomial", "extra_trees"),)))


@given(st.integers(0, 10**6))
def test_nested_spaces_save_time(seed):
    rng = np.random.default_rng(seed)
    trace = synthetic_trace(rng)
    combos = REG.combos()
    big = [c for c in combos if rng.random() < 0.7] or [combos[0]]
    small = [c for c in big if rng.random() < 0.5] or [big[0]]
    try:
        t_small = replay_restricted(trace, SearchSpace(tuple(small))).wall_clock_total_s
    except EmptyReplay:
        t_small = 0.0
    try:
        t_big = replay_restricted(trace, SearchSpace(tuple(big))).wall_clock_total_s
    except EmptyReplay:
        t_big = 0.0
    assert t_small <= t_big + 1e-9 <= trace.wall_clock_total_s + 2e-9


@given(st.integers(0, 10**6))
def test_best_at_time_staircase(seed):
    trace = synthetic_trace(np.random.default_rng(seed))
    prev = -1.0
    for t in np.linspace(0, trace.wall_clock_total_s + 1, 30):
        try:
            cur = best_at_time(trace, float(t)).cv_mean
        except NoSuccessfulRun:
            assert prev == -1.0
            continue
        assert cur >= prev
        prev = cur


def test_best_at_time_edges():
    trace = synthetic_trace(np.random.default_rng(2))
    first = min(r.finished_at for r in trace.records)
    with pytest.raises(NoSuccessfulRun):
        best_at_time(trace, first / 2)
    assert best_at_time(trace, math.inf) == best_of(trace.records)
    with pytest.raises(ValueError):
        best_at_time(trace, -1)
    assert len(completed_by(trace, math.inf)) == len(trace.records)


def test_trace_file_roundtrip(tmp_path):
    trace = synthetic_trace(np.random.default_rng(3))
    write_trace(tmp_path / "t.jsonl", trace)
    back = read_trace(tmp_path / "t.jsonl")
    assert back.header() == trace.header()
    assert back.records == trace.records
