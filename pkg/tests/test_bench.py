import csv
import json
import shutil

import pytest

from amlf.bench import REPORTS, BenchConfig, check_disjoint, load_config, run_bench, slice_times
from amlf.cli import main
from amlf.errors import ConfigError, DigestMismatch
from amlf.metamodel import MetaModel

from .conftest import TINY_CLF, TINY_PRE


def toml_list(text):
    return "[" + ", ".join(f'"{t}"' for t in text.split(",")) + "]"


def write_config(path, train, test, extra=""):
    path.write_text(f"""
[corpus]
train = ["{train}"]
test = ["{test}"]
[search]
samples = 6
folds = 3
repetitions = 2
seed = 5
clock = "evals"
[slices]
grid = [1.0, 2.0, 4.0]
[registry]
preprocessors = {toml_list(TINY_PRE)}
classifiers = {toml_list(TINY_CLF)}
{extra}
""")
    return path


@pytest.fixture(scope="module")
def trained(tiny_corpus, tmp_path_factory):
    w = tmp_path_factory.mktemp("bench")
    assert main(["gen-meta", "--datasets", str(tiny_corpus / "train"), "--samples", "6", "--folds", "3",
                 "--preprocessors", TINY_PRE, "--classifiers", TINY_CLF, "--out", str(w / "runs.jsonl")]) == 0
    assert main(["train-metamodel", "--runs", str(w / "runs.jsonl"), "--mf-dir", str(w / "mf"), "--trees", "10",
                 "--out", str(w / "model.json")]) == 0
    return w


def test_config_validation(tiny_corpus, tmp_path):
    base = dict(train=[], test=[tiny_corpus / "test" / "blobs_2.csv"], model=tmp_path / "m.json")
    BenchConfig(**base).validate()
    for bad in ({"samples": 0}, {"clock": "cpu"}, {"thetas": (1.0,)}, {"baselines": ("oracle",)},
                {"grid": (3.0, 1.0)}, {"scale": "log"}, {"test": []}, {"model": None}):
        with pytest.raises(ConfigError):
            BenchConfig(**{**base, **bad}).validate()
    cfg = write_config(tmp_path / "b.toml", tiny_corpus / "train", tiny_corpus / "test", "[extra]\nx = 1")
    with pytest.raises(ConfigError):
        load_config(cfg)


def test_disjointness(tiny_corpus, tmp_path):
    tr = tiny_corpus / "train" / "xor_0.csv"
    with pytest.raises(ConfigError):
        check_disjoint([tr], [tr])
    renamed = tmp_path / "renamed.csv"
    shutil.copy(tr, renamed)
    with pytest.raises(ConfigError):
        check_disjoint([tr], [renamed])
    check_disjoint([tr], [tiny_corpus / "test" / "blobs_2.csv"])


def test_relative_slices(tiny_corpus):
    cfg = BenchConfig(train=[], test=[tiny_corpus], model=tiny_corpus, grid=(1.0, 2.0, 4.0))
    assert slice_times(cfg, 8.0) == [2.0, 4.0, 8.0]
    cfg.scale = 0.5
    assert slice_times(cfg, 8.0) == [0.5, 1.0, 2.0]


def test_digest_mismatch(trained, tiny_corpus, tmp_path):
    other = tmp_path / "other.jsonl"
    other.write_text((trained / "runs.jsonl").read_text().splitlines()[0] + "\n")
    cfg = write_config(tmp_path / "b.toml", tiny_corpus / "train", tiny_corpus / "test",
                       f'[metamodel]\nruns = "{other}"\nmodel = "{trained / "model.json"}"')
    with pytest.raises(DigestMismatch):
        run_bench(load_config(cfg), tmp_path / "out")


def test_model_trained_on_test_rejected(trained, tiny_corpus, tmp_path):
    # no train list, so only the model's provenance can reveal the overlap
    cfg = BenchConfig(train=[], test=[tiny_corpus / "train" / "xor_0.csv"], model=trained / "model.json",
                      samples=2, folds=3, repetitions=1, preprocessors=TINY_PRE.split(","),
                      classifiers=TINY_CLF.split(","))
    with pytest.raises(ConfigError, match="trained on test"):
        run_bench(cfg, tmp_path / "out")


def test_small_bench_reports(trained, tiny_corpus, tmp_path):
    cfg = write_config(tmp_path / "b.toml", tiny_corpus / "train", tiny_corpus / "test",
                       f'[metamodel]\nruns = "{trained / "runs.jsonl"}"\nmodel = "{trained / "model.json"}"')
    summary = run_bench(load_config(cfg), tmp_path / "out")
    for name in REPORTS:
        assert (tmp_path / "out" / name).exists(), name
    assert summary["n_units"] == 2 and summary["clock"] == "evals"
    assert summary["provenance"]["model_digest"] == MetaModel.load(trained / "model.json").digest()
    with open(tmp_path / "out" / "units.csv") as fh:
        units = list(csv.DictReader(fh))
    rs = {(u["rep"]): float(u["total_time_s"]) for u in units if u["method"] == "RS"}
    for u in units:
        assert float(u["total_time_s"]) <= rs[u["rep"]] + 1e-9
    with open(tmp_path / "out" / "rank_curves.csv") as fh:
        ranks = list(csv.DictReader(fh))
    assert len(ranks) == 3 * len(summary["methods"])
    json.loads((tmp_path / "out" / "summary.json").read_text())
