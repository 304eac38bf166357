"""Append-only JSONL store of evaluation records."""

from __future__ import annotations

import json
import os
from pathlib import Path

from ._util import sha256_file
from .errors import DuplicateRecord
from .evaluation import EvaluationRecord


class RunStore:
    """Records keyed by (dataset, config hash); nothing is ever rewritten.

    Appends go through this object only (single writer). Reading the file
    concurrently from other processes is safe because lines are written whole.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._records: list[EvaluationRecord] = []
        self._keys: set[tuple[str, str]] = set()
        if self.path.exists():
            for i, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    rec = EvaluationRecord.from_json(json.loads(line))
                except (ValueError, KeyError) as exc:
                    raise ValueError(f"{self.path}:{i}: unreadable record ({exc})") from None
                self._records.append(rec)
                self._keys.add(rec.key())

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __contains__(self, key) -> bool:
        return tuple(key) in self._keys

    @property
    def records(self) -> list[EvaluationRecord]:
        return list(self._records)

    def datasets(self) -> list[str]:
        return sorted({r.dataset for r in self._records})

    def index(self) -> dict[tuple[str, str, str], list[EvaluationRecord]]:
        out: dict[tuple[str, str, str], list[EvaluationRecord]] = {}
        for r in self._records:
            out.setdefault((r.dataset, *r.combo), []).append(r)
        return out

    def append(self, rec: EvaluationRecord) -> None:
        if rec.key() in self._keys:
            raise DuplicateRecord(f"{rec.dataset} / {rec.config.digest()} already stored")
        self.append_many([rec])

    def append_many(self, recs) -> int:
        """Append records not yet present; returns how many were written."""
        fresh = []
        for r in recs:
            k = r.key()
            if k in self._keys:
                continue
            self._keys.add(k)
            fresh.append(r)
        if not fresh:
            return 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            for r in fresh:
                fh.write(json.dumps(r.to_json(), sort_keys=True, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._records.extend(fresh)
        return len(fresh)

    def digest(self) -> str:
        """sha256 of the file bytes (the empty string's hash for a missing file)."""
        if not self.path.exists():
            return "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        return sha256_file(self.path)
