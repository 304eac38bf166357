import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amlf.components import (
    CLASSIFIER,
    PREPROCESSOR,
    Choice,
    HyperparamSpace,
    IntRange,
    RealRange,
    builtin_registry,
    domain_from_json,
    fit_classifier,
    fit_preprocessor,
    fit_transform_preprocessor,
    predict,
    sample_assignment,
)
from amlf.errors import DegenerateInput, InvalidAssignment, SingleClassFold, UnknownComponent
from amlf.evaluation import PipelineConfig

REG = builtin_registry()


def default_assignment(kind, name, seed=0):
    return sample_assignment(REG.get(kind, name).space, seed)


def test_registry_sizes_and_order():
    assert REG.preprocessor_names() == [
        "no_preprocessing", "pca", "polynomial", "select_percentile", "feature_agglomeration", "random_projection",
    ]
    assert len(REG.classifier_names()) == 10
    assert REG.code(CLASSIFIER, "knn") == 0
    assert len(REG.combos()) == 60


def test_restrict_keeps_registration_order_and_rejects_unknown():
    sub = REG.restrict(["pca", "no_preprocessing"], ["random_forest", "knn"])
    assert sub.preprocessor_names() == ["no_preprocessing", "pca"]
    assert sub.classifier_names() == ["knn", "random_forest"]
    with pytest.raises(UnknownComponent):
        REG.restrict(["nope"], None)


def test_manifest_is_json_and_digest_stable():
    text = json.dumps(REG.manifest())
    assert builtin_registry().digest() == REG.digest()
    for entry in json.loads(text)["classifiers"]:
        for dom in entry["space"]:
            domain_from_json(dom)


def test_domains_reject_bad_bounds():
    with pytest.raises(ValueError):
        RealRange(1.0, 1.0)
    with pytest.raises(ValueError):
        RealRange(0.0, 1.0, log=True)
    with pytest.raises(ValueError):
        Choice(())


def test_every_classifier_roundtrips_through_a_record():
    for i, name in enumerate(REG.classifier_names()):
        cfg = PipelineConfig("no_preprocessing", {}, name, default_assignment(CLASSIFIER, name, i), i)
        back = PipelineConfig.from_json(json.loads(json.dumps(cfg.to_json())))
        assert back == cfg and back.digest() == cfg.digest()


def test_empty_space_gives_empty_assignment():
    assert sample_assignment(HyperparamSpace(), 7) == {}


def test_uniform_real_mean():
    space = HyperparamSpace((("r", RealRange(0.0, 1.0)),))
    vals = np.array([sample_assignment(space, s)["r"] for s in range(10_000)])
    assert 0.48 <= vals.mean() <= 0.52


def test_log_real_quartiles():
    space = HyperparamSpace((("r", RealRange(1e-4, 1.0, log=True)),))
    logs = np.log10([sample_assignment(space, s)["r"] for s in range(10_000)])
    q = np.percentile(logs, [25, 50, 75])
    np.testing.assert_allclose(q, [-3, -2, -1], atol=0.1)


@given(st.integers(0, 2**63 - 1))
def test_sampled_assignments_validate(seed):
    for spec in REG.preprocessors + REG.classifiers:
        a = sample_assignment(spec.space, seed)
        spec.space.validate(a)
        assert a == sample_assignment(spec.space, seed)


def test_validate_rejects_out_of_domain():
    space = HyperparamSpace((("k", IntRange(1, 5)),))
    with pytest.raises(InvalidAssignment):
        space.validate({"k": 9})
    with pytest.raises(InvalidAssignment):
        space.validate({})
    with pytest.raises(InvalidAssignment):
        space.validate({"k": 2, "extra": 1})


def test_identity_and_polynomial_shapes():
    X = np.arange(12.0).reshape(4, 3)
    out = fit_transform_preprocessor(REG, "no_preprocessing", {}, X, X)
    np.testing.assert_array_equal(out, X)
    poly = fit_transform_preprocessor(REG, "polynomial", {"degree": 2, "interaction_only": False}, X, X)
    assert poly.shape == (4, 9)


def test_pca_reconstructs_rank_two_data():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 2)) @ rng.normal(size=(2, 5))
    pre = fit_preprocessor(REG, "pca", {"variance_kept": 0.999, "whiten": False}, X)
    Z = pre.model_.transform(X)
    assert Z.shape[1] == 2
    np.testing.assert_allclose(pre.model_.inverse_transform(Z), X, atol=1e-8)


def test_pca_on_one_column_is_clamped():
    X = np.arange(6.0)[:, None]
    out = fit_transform_preprocessor(REG, "pca", {"variance_kept": 0.9, "whiten": True}, X, X)
    assert out.shape == (6, 1)


def test_empty_input_is_degenerate():
    with pytest.raises(DegenerateInput):
        fit_preprocessor(REG, "pca", {"variance_kept": 0.9, "whiten": False}, np.zeros((0, 3)))


@given(st.sampled_from(REG.preprocessor_names()), st.integers(0, 1000))
def test_preprocessor_fit_uses_training_rows_only(name, seed):
    rng = np.random.default_rng(seed)
    Xtr = rng.normal(size=(30, 4))
    ytr = np.arange(30) % 2
    Xap = rng.normal(size=(12, 4))
    a = default_assignment(PREPROCESSOR, name, seed)
    perm = rng.permutation(12)
    out = fit_transform_preprocessor(REG, name, a, Xtr, Xap, ytr, seed)
    out_perm = fit_transform_preprocessor(REG, name, a, Xtr, Xap[perm], ytr, seed)
    np.testing.assert_allclose(out_perm, out[perm], rtol=1e-10, atol=1e-10)
    other = fit_transform_preprocessor(REG, name, a, Xtr, rng.normal(size=(5, 4)), ytr, seed)
    assert other.shape[1] == out.shape[1]


def test_one_nn_memorizes_and_tree_memorizes():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 3, 40)
    knn = fit_classifier(REG, "knn", {"n_neighbors": 1, "weights": "uniform", "p": 2}, X, y)
    assert np.all(predict(knn, X) == y)
    tree = fit_classifier(REG, "decision_tree", {"criterion": "gini", "max_depth": None,
                                                 "min_samples_split": 2, "min_samples_leaf": 1}, X, y)
    assert np.all(predict(tree, X) == y)


def test_gaussian_nb_separates_blobs():
    rng = np.random.default_rng(2)
    X = np.vstack([rng.normal(0, 1, (100, 2)), rng.normal(6, 1, (100, 2))])
    y = np.repeat([0, 1], 100)
    idx = rng.permutation(200)
    tr, te = idx[:100], idx[100:]
    model = fit_classifier(REG, "gaussian_nb", {"var_smoothing": 1e-9}, X[tr], y[tr])
    assert np.mean(predict(model, X[te]) == y[te]) > 0.95


def test_single_class_fold():
    with pytest.raises(SingleClassFold):
        fit_classifier(REG, "knn", {"n_neighbors": 1, "weights": "uniform", "p": 2}, np.zeros((3, 1)), [1, 1, 1])


@pytest.mark.parametrize("name", REG.classifier_names())
def test_classifiers_deterministic_and_in_label_set(name):
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 4))
    y = np.array([3, 5, 7])[np.arange(60) % 3]
    a = default_assignment(CLASSIFIER, name, 11)
    p1 = predict(fit_classifier(REG, name, a, X, y, seed=9), X)
    p2 = predict(fit_classifier(REG, name, a, X, y, seed=9), X)
    np.testing.assert_array_equal(p1, p2)
    assert set(p1) <= {3, 5, 7}
