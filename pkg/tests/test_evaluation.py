import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amlf.components import builtin_registry
from amlf.data import stratified_kfold
from amlf.errors import LengthMismatch, NoSuccessfulRun
from amlf.evaluation import (
    ERROR,
    OK,
    TIMEOUT,
    Budget,
    EvaluationRecord,
    PipelineConfig,
    best_of,
    evaluate_pipeline,
    f1_weighted,
    fit_pipeline,
)

from .conftest import make_record, numeric_dataset

REG = builtin_registry()
ONE_NN = PipelineConfig("no_preprocessing", {}, "knn", {"n_neighbors": 1, "weights": "uniform", "p": 2}, 0)


def f1_brute(y_true, y_pred):
    """Per-class precision/recall from explicit loops."""
    labels = sorted(set(y_true) | set(y_pred))
    n = len(y_true)
    total = 0.0
    for c in labels:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        total += (tp + fn) / n * f1
    return total


def test_f1_hand_cases():
    assert f1_weighted([0, 1, 2], [0, 1, 2]) == 1.0
    assert f1_weighted([0, 0, 1, 1], [0, 0, 0, 0]) == pytest.approx(1 / 3, abs=1e-15)


def test_f1_errors():
    with pytest.raises(LengthMismatch):
        f1_weighted([0, 1], [0])
    with pytest.raises(LengthMismatch):
        f1_weighted([], [])


def test_f1_random_confusions_vs_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 80))
        t = rng.integers(0, k, n).tolist()
        p = rng.integers(0, k, n).tolist()
        assert abs(f1_weighted(t, p) - f1_brute(t, p)) <= 1e-12


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=50),
       st.permutations(list(range(5))))
def test_f1_relabel_invariant(pairs, perm):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    mapped = f1_weighted([perm[a] for a in t], [perm[b] for b in p])
    assert mapped == pytest.approx(f1_weighted(t, p), abs=1e-12)
    assert 0.0 <= mapped <= 1.0


def toy20():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(0, 1, (10, 2)), rng.normal(3, 1, (10, 2))])
    return numeric_dataset(X, np.repeat([0, 1], 10), "toy20")


def test_one_nn_on_toy_has_ten_scores():
    d = toy20()
    rec = evaluate_pipeline(d, ONE_NN, stratified_kfold(d, 10, 0), Budget(), REG)
    assert rec.status == OK and len(rec.fold_scores) == 10
    assert rec.cv_mean == pytest.approx(np.mean(rec.fold_scores))
    assert rec.n_fits == 10 and rec.wall_time_s > 0


def test_forced_timeout():
    d = toy20()
    rec = evaluate_pipeline(d, ONE_NN, stratified_kfold(d, 10, 0), Budget(per_pipeline_s=1e-6), REG)
    assert rec.status == TIMEOUT and rec.cv_mean is None and rec.fold_scores == ()


def test_invalid_config_becomes_error_record():
    d = toy20()
    bad = PipelineConfig("no_preprocessing", {}, "knn", {"n_neighbors": 0, "weights": "uniform", "p": 2})
    rec = evaluate_pipeline(d, bad, stratified_kfold(d, 5, 0), Budget(), REG)
    assert rec.status == ERROR and rec.error


def test_non_finite_input_errors_without_crash():
    X = np.array([[np.nan, 1.0]] * 10 + [[0.0, 2.0]] * 10)
    d = numeric_dataset(X, np.repeat([0, 1], 10))
    rec = evaluate_pipeline(d, ONE_NN, stratified_kfold(d, 5, 0), Budget(), REG)
    assert rec.status == ERROR


def test_evaluation_is_deterministic(blobs):
    fa = stratified_kfold(blobs, 5, 2)
    cfg = PipelineConfig("random_projection", {"ratio": 0.6}, "random_forest",
                         {"n_trees": 10, "criterion": "gini", "max_features": 0.5, "min_samples_leaf": 2,
                          "bootstrap": True}, 17)
    a = evaluate_pipeline(blobs, cfg, fa, Budget(), REG, started_at=0.0)
    b = evaluate_pipeline(blobs, cfg, fa, Budget(), REG, started_at=5.0)
    assert a.fold_scores == b.fold_scores and a.cv_mean == b.cv_mean and a.status == b.status


def test_validation_rows_never_reach_fit(blobs):
    """Canary: perturbing rows outside the training index leaves the fitted model unchanged."""
    fa = stratified_kfold(blobs, 4, 0)
    tr, va = next(iter(fa))
    cfg = PipelineConfig("pca", {"variance_kept": 0.9, "whiten": False}, "logistic_sgd",
                         {"alpha": 1e-3, "penalty": "l2", "l1_ratio": 0.1}, 3)
    X2 = np.array(blobs.X, copy=True)
    X2[va] += 100.0
    _, clf_a = fit_pipeline(REG, cfg, blobs.X[tr], blobs.y[tr])
    _, clf_b = fit_pipeline(REG, cfg, X2[tr], blobs.y[tr])
    np.testing.assert_array_equal(clf_a.coef_, clf_b.coef_)


def test_record_json_roundtrip():
    r = make_record("d", "pca", "knn", 0.75, started=1.5, wall=0.25)
    back = EvaluationRecord.from_json(json.loads(json.dumps(r.to_json())))
    assert back == r
    with pytest.raises(ValueError):
        EvaluationRecord.from_json({**r.to_json(), "v": 2})


def test_best_of_rules():
    recs = [make_record("d", "p", "c", v, started=i, seed=i) for i, v in enumerate([0.7, 0.9, 0.8])]
    assert best_of(recs).cv_mean == 0.9
    tied = [make_record("d", "p", "c", 0.9, started=3.0, seed=1), make_record("d", "p", "c", 0.9, started=1.0, seed=2)]
    assert best_of(tied).started_at == 1.0
    same_start = [make_record("d", "p", "c", 0.9, seed=s) for s in (5, 4)]
    assert best_of(same_start).config.encode() == min(r.config.encode() for r in same_start)
    with pytest.raises(NoSuccessfulRun):
        best_of([make_record("d", "p", "c", None, status=TIMEOUT)])


def test_budget_positive():
    with pytest.raises(ValueError):
        Budget(per_pipeline_s=0)
