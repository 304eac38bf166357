import hashlib

import pytest

from amlf.errors import DuplicateRecord
from amlf.store import RunStore

from .conftest import make_record


def test_append_reload_and_digest(tmp_path):
    path = tmp_path / "runs.jsonl"
    store = RunStore(path)
    assert len(store) == 0 and store.digest() == hashlib.sha256(b"").hexdigest()
    recs = [make_record(f"d{i % 2}", "pca", "knn", 0.5 + i / 10, started=float(i), seed=i) for i in range(4)]
    assert store.append_many(recs) == 4
    assert store.digest() == hashlib.sha256(path.read_bytes()).hexdigest()
    back = RunStore(path)
    assert back.records == recs and back.datasets() == ["d0", "d1"]
    assert recs[0].key() in back
    assert len(back.index()[("d0", "pca", "knn")]) == 2


def test_duplicates_rejected_and_skipped(tmp_path):
    store = RunStore(tmp_path / "r.jsonl")
    r = make_record("d", "pca", "knn", 0.5)
    store.append(r)
    digest = store.digest()
    with pytest.raises(DuplicateRecord):
        store.append(r)
    assert store.append_many([r]) == 0
    assert store.digest() == digest and len(RunStore(store.path)) == 1


def test_unreadable_line_reported(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text("{not json\n")
    with pytest.raises(ValueError, match="bad.jsonl:1"):
        RunStore(p)
