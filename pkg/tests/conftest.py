import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from amlf.data import CATEGORICAL, NUMERIC, Column, Dataset
from amlf.evaluation import OK, EvaluationRecord, PipelineConfig

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def numeric_dataset(X, y, name="toy"):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = tuple(f"k{c}" for c in range(int(y.max()) + 1))
    cols = tuple(Column(f"x{j}", NUMERIC) for j in range(X.shape[1]))
    return Dataset(name, cols, X, y, classes)


@pytest.fixture
def blobs():
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(0, 1, (60, 3)), rng.normal(4, 1, (60, 3))])
    y = np.repeat([0, 1], 60)
    return numeric_dataset(X, y, "blobs")


@pytest.fixture
def mixed_table():
    X = np.array([[1.0, 0.0], [np.nan, 1.0], [3.0, 2.0], [5.0, np.nan], [2.0, 0.0], [4.0, 1.0]])
    cols = (Column("num", NUMERIC), Column("cat", CATEGORICAL, ("a", "b", "c")))
    return Dataset("mixed", cols, X, [0, 1, 0, 1, 0, 1], ("yes", "no"))


def make_record(dataset, pre, clf, cv, started=0.0, wall=1.0, status=OK, seed=0):
    cfg = PipelineConfig(pre, {}, clf, {"i": seed}, seed)
    scores = (cv,) if status == OK else ()
    return EvaluationRecord(dataset, cfg, scores, cv if status == OK else None, wall, status, started, 0, 1)


TINY_PRE = "no_preprocessing,pca"
TINY_CLF = "knn,gaussian_nb,decision_tree"


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Four small training tables and one test table, 70 rows each."""
    from amlf.corpus import make_dataset
    from amlf.data import save_dataset

    root = tmp_path_factory.mktemp("tiny")
    for split, specs in (("train", [("blobs", 0), ("xor", 0), ("rings", 0), ("mixed", 0)]),
                         ("test", [("blobs", 2)])):
        (root / split).mkdir()
        for fam, i in specs:
            d = make_dataset(fam, i)
            keep = np.sort(np.random.default_rng(i).permutation(d.n_rows)[:70])
            save_dataset(d.subset(keep), root / split / f"{d.name}.csv")
    return root


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
