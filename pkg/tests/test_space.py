import json
import math
import time

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from amlf.components import CLASSIFIER, PREPROCESSOR, ComponentId, builtin_registry
from amlf.errors import EmptyTrainSet, SchemaMismatch
from amlf.metafeatures import ExtractorTiming, MetaFeatureVector
from amlf.metamodel import train_metamodel
from amlf.space import (
    SPACE_JSON_SCHEMA,
    CombinationScore,
    SearchSpace,
    Threshold,
    design_space_autosklearn2,
    design_space_landmarking,
    design_space_mtl,
    design_space_random,
    full_space,
    nearest_dataset,
    quantile_filter,
    score_all,
)

from .test_metamodel import REG, synthetic_store


def scores_from(values):
    return [CombinationScore(ComponentId(PREPROCESSOR, f"p{i:03d}"), ComponentId(CLASSIFIER, "c"), float(v))
            for i, v in enumerate(values)]


def oracle_filter(values, theta):
    """Sort ascending, take the element at ceil(theta*n)-1 (clamped), keep everything at or above it."""
    s = sorted(values)
    n = len(s)
    k = 0
    while k < n and k < theta * n - 1e-12:
        k += 1
    # k is the smallest integer >= theta*n, i.e. ceil(theta*n) up to decimal noise
    cut = s[min(max(k - 1, 0), n - 1)]
    return {f"p{i:03d}" for i, v in enumerate(values) if v >= cut}


def names(space):
    return {p for p, _ in space.combos}


def test_theta_zero_is_full_space():
    vals = np.random.default_rng(0).random(17)
    assert names(quantile_filter(scores_from(vals), 0.0)) == {f"p{i:03d}" for i in range(17)}


def test_twenty_distinct_scores_at_095():
    vals = np.arange(20) / 20
    kept = names(quantile_filter(scores_from(vals), 0.95))
    # ascending index ceil(19) - 1 = 18: the two largest survive
    assert kept == {"p018", "p019"}
    assert names(quantile_filter(scores_from(vals), 0.99)) == {"p019"}


def test_boundary_ties_are_kept():
    vals = [0.1, 0.5, 0.9, 0.9, 0.9]
    assert names(quantile_filter(scores_from(vals), 0.9)) == {"p002", "p003", "p004"}


def test_quantile_oracle_ten_thousand_tables():
    rng = np.random.default_rng(123)
    t0 = time.perf_counter()
    for i in range(10_000):
        n = int(rng.integers(2, 209))
        if i % 2:
            vals = rng.integers(0, max(2, n // 4), n) / 10.0
        else:
            vals = rng.random(n)
        theta = float(rng.choice([0.0, 0.5, 0.9, 0.95, 0.99, round(float(rng.random()) * 0.999, 3)]))
        sc = scores_from(vals)
        got = quantile_filter(sc, theta)
        assert names(got) == oracle_filter(vals.tolist(), theta)
        if theta == 0.0:
            assert len(got) == n
        assert quantile_filter(sc, 0.99).issubset(quantile_filter(sc, 0.95))
    assert time.perf_counter() - t0 < 60


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=60), st.floats(0, 0.999), st.floats(0, 0.999))
def test_monotone_nesting(values, a, b):
    lo, hi = sorted((a, b))
    sc = scores_from(values)
    assert quantile_filter(sc, hi).issubset(quantile_filter(sc, lo))


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=60), st.floats(0, 0.999))
def test_rank_dependence_only(values, theta):
    dense = {v: i for i, v in enumerate(sorted(set(values)))}
    a = quantile_filter(scores_from(values), theta)
    for transformed in ([8.0 * v for v in values], [dense[v] ** 3 - 2.0 for v in values]):
        assert quantile_filter(scores_from(transformed), theta).combos == a.combos


def test_threshold_and_score_validation():
    with pytest.raises(ValueError):
        Threshold(1.0)
    with pytest.raises(ValueError):
        Threshold(-0.1)
    with pytest.raises(ValueError):
        scores_from([float("nan")])
    with pytest.raises(ValueError):
        SearchSpace(())


def test_space_json_schema_and_roundtrip(tmp_path):
    s = quantile_filter(scores_from([0.3, 0.2, 0.9]), 0.5, {"model_digest": "x"})
    s.save(tmp_path / "s.json")
    obj = json.loads((tmp_path / "s.json").read_text())
    jsonschema.validate(obj, SPACE_JSON_SCHEMA)
    back = SearchSpace.load(tmp_path / "s.json")
    assert back == s and back.provenance == s.provenance


def test_full_space_and_check():
    reg = builtin_registry()
    fs = full_space(reg)
    assert len(fs) == 60
    fs.check(reg)
    with pytest.raises(ValueError):
        SearchSpace((("pca", "mlp"),)).check(reg)


def test_random_designer_uniform_and_deterministic():
    reg = builtin_registry().restrict(None, ["knn", "decision_tree", "gaussian_nb"])
    combos = reg.combos()
    counts = {c: 0 for c in combos}
    for seed in range(10_000):
        s = design_space_random(reg, seed)
        assert len(s) == 1
        counts[s.combos[0]] += 1
    assert design_space_random(reg, 5) == design_space_random(reg, 5)
    assert stats.chisquare(list(counts.values())).pvalue > 0.01


def test_landmarking_designer():
    train = {"a": {"one_nn": 0.9, "naive_bayes": 0.5}, "b": {"one_nn": 0.4, "naive_bayes": 0.8},
             "c": {"one_nn": 0.6, "naive_bayes": 0.6}}
    best = {"a": ("pca", "knn"), "b": ("no_preprocessing", "gaussian_nb"), "c": ("pca", "gaussian_nb")}
    s = design_space_landmarking(train, best, dict(train["b"]))
    assert s.combos == (("no_preprocessing", "gaussian_nb"),)
    with pytest.raises(EmptyTrainSet):
        design_space_landmarking({}, {}, {})


@given(st.integers(0, 10**6))
def test_nearest_dataset_vs_brute_force(seed):
    rng = np.random.default_rng(seed)
    feats = ["f0", "f1", "f2"]
    train = {f"d{i}": {f: float(rng.random()) for f in feats} for i in range(int(rng.integers(1, 7)))}
    query = {f: float(rng.random()) for f in feats}
    X = np.array([[train[n][f] for f in feats] for n in sorted(train)])
    sd = X.std(0)
    sd[sd == 0] = 1
    q = np.array([query[f] for f in feats])
    dists = {n: float(np.linalg.norm((X[i] - q) / sd)) for i, n in enumerate(sorted(train))}
    best = min(sorted(train), key=lambda n: dists[n])
    got = nearest_dataset(train, query)
    assert got == best or dists[got] == pytest.approx(dists[best], rel=1e-12)


def test_nearest_ties_go_to_first_name():
    train = {"zeta": {"f": 1.0}, "alpha": {"f": 1.0}}
    assert nearest_dataset(train, {"f": 1.0}) == "alpha"


def test_autosklearn2_union():
    best = {"a": ("pca", "knn"), "b": ("pca", "knn"), "c": ("polynomial", "knn")}
    s = design_space_autosklearn2(best)
    assert set(s.combos) == set(best.values())
    assert len(design_space_autosklearn2({"a": ("pca", "knn")})) == 1
    with pytest.raises(EmptyTrainSet):
        design_space_autosklearn2({})


@pytest.fixture(scope="module")
def small_model():
    rng = np.random.default_rng(11)
    runs, mf = synthetic_store(rng)
    return train_metamodel(runs, mf, ExtractorTiming(), REG, n_trees=20, seed=0), mf


def test_score_all_counts_and_determinism(small_model):
    model, mf = small_model
    a = score_all(model, mf["d0"], model.pstats, REG)
    b = score_all(model, mf["d0"], model.pstats, REG)
    assert len(a) == len(REG.combos()) == 6
    assert [s.predicted for s in a] == [s.predicted for s in b]


def test_unknown_pair_still_scored(small_model):
    model, mf = small_model
    bigger = builtin_registry().restrict(["no_preprocessing", "pca", "polynomial"],
                                         ["knn", "decision_tree", "gaussian_nb"])
    scores = score_all(model, mf["d0"], model.pstats, bigger)
    assert len(scores) == 9 and all(math.isfinite(s.predicted) for s in scores)


def test_schema_mismatch(small_model):
    model, _ = small_model
    with pytest.raises(SchemaMismatch):
        score_all(model, MetaFeatureVector({"other": 1.0}, {"other": "general"}), model.pstats, REG)


def test_design_space_mtl_nesting_and_provenance(small_model):
    model, mf = small_model
    s95 = design_space_mtl(model, mf["d1"], 0.95, REG)
    s99 = design_space_mtl(model, mf["d1"], 0.99, REG)
    s0 = design_space_mtl(model, mf["d1"], 0.0, REG)
    assert s99.issubset(s95) and s95.issubset(s0) and len(s0) == 6
    assert s95.provenance["model_digest"] == model.digest()
    assert s95.provenance["theta"] == 0.95
    assert design_space_mtl(model, mf["d1"], 0.95, REG) == s95
