"""Dataset ingestion, the fixed data-preprocessing step, and deterministic splitting."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import rng_from
from .errors import EmptyDataset, InvalidK, MalformedCsv, SingleClass, TooFewRows

log = logging.getLogger(__name__)

MISSING_TOKENS = {"", "?"}
_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    levels: tuple[str, ...] = ()


@dataclass(frozen=True)
class Dataset:
    """A classification table.

    ``X`` holds floats with NaN as the missing marker; categorical cells hold
    level codes indexing ``Column.levels``. ``y`` holds class codes indexing
    ``classes``.
    """

    name: str
    columns: tuple[Column, ...]
    X: np.ndarray
    y: np.ndarray
    classes: tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True).reshape(len(self.y), len(self.columns))
        y = np.array(self.y, dtype=np.int64, copy=True)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if len(y) and (y.min() < 0 or y.max() >= len(self.classes)):
            raise ValueError("label code outside [0, n_classes)")

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(c.kind for c in self.columns)

    def has_missing(self) -> bool:
        return bool(np.isnan(self.X).any())

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.name, self.columns, self.X[rows], self.y[rows], self.classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: np.ndarray
    seed: int
    requested_k: int = field(default=0, compare=False)

    def __post_init__(self):
        f = np.array(self.fold_of, dtype=np.int64, copy=True)
        f.setflags(write=False)
        object.__setattr__(self, "fold_of", f)

    def train_idx(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def val_idx(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def __iter__(self):
        for i in range(self.k):
            yield self.train_idx(i), self.val_idx(i)


# --------------------------------------------------------------------------- io


def _is_missing(cell: str) -> bool:
    return cell.strip() in MISSING_TOKENS


def _read_schema(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        schema = json.load(fh)
    if not isinstance(schema, dict):
        raise MalformedCsv(f"schema {path} is not a JSON object")
    return schema


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_suffix(".json")


def load_dataset(path, schema=None) -> Dataset:
    """Read a CSV file into a :class:`Dataset`.

    Column kinds are inferred from values (numeric when every present cell
    parses as a decimal number) unless the sidecar schema lists the column
    under ``"categorical"`` or ``"numeric"``. The target is the schema's
    ``"target"`` column, else the last column. A sidecar named like the CSV
    with a ``.json`` suffix is picked up automatically.
    """
    path = Path(path)
    if schema is None and sidecar_path(path).exists():
        schema = sidecar_path(path)
    spec = _read_schema(schema) if schema is not None else {}

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path}: no header row") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise MalformedCsv(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            rows.append([c.strip() for c in row])
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")
    if len(set(header)) != len(header):
        raise MalformedCsv(f"{path}: duplicate column names")

    target = spec.get("target", header[-1])
    if target not in header:
        raise MalformedCsv(f"{path}: target column {target!r} not in header")
    t = header.index(target)
    forced_cat = set(spec.get("categorical", []))
    forced_num = set(spec.get("numeric", []))

    kept = [r for r in rows if not _is_missing(r[t])]
    if len(kept) < len(rows):
        log.warning("%s: dropped %d rows with missing target", path, len(rows) - len(kept))
    if not kept:
        raise EmptyDataset(f"{path}: every target cell is missing")

    classes: list[str] = []
    code_of: dict[str, int] = {}
    y = np.empty(len(kept), dtype=np.int64)
    for i, r in enumerate(kept):
        lab = r[t]
        if lab not in code_of:
            code_of[lab] = len(classes)
            classes.append(lab)
        y[i] = code_of[lab]
    if len(classes) < 2:
        raise SingleClass(f"{path}: only one class ({classes[0]!r})")

    feat_idx = [j for j in range(len(header)) if j != t]
    columns = []
    X = np.full((len(kept), len(feat_idx)), np.nan)
    for out_j, j in enumerate(feat_idx):
        name = header[j]
        cells = [r[j] for r in kept]
        present = [c for c in cells if not _is_missing(c)]
        if name in forced_cat:
            kind = CATEGORICAL
        elif name in forced_num:
            kind = NUMERIC
        else:
            kind = NUMERIC if all(_DECIMAL.match(c) for c in present) else CATEGORICAL
        if kind == NUMERIC:
            for i, c in enumerate(cells):
                if not _is_missing(c):
                    try:
                        X[i, out_j] = float(c)
                    except ValueError:
                        raise MalformedCsv(f"{path}: non-numeric cell {c!r} in numeric column {name!r}") from None
            columns.append(Column(name, NUMERIC))
        else:
            levels: list[str] = []
            lcode: dict[str, int] = {}
            for i, c in enumerate(cells):
                if _is_missing(c):
                    continue
                if c not in lcode:
                    lcode[c] = len(levels)
                    levels.append(c)
                X[i, out_j] = lcode[c]
            columns.append(Column(name, CATEGORICAL, tuple(levels)))
    return Dataset(path.stem, tuple(columns), X, y, tuple(classes))


def _format_number(v: float) -> str:
    return repr(float(v))


def save_dataset(d: Dataset, path, target: str = "class") -> Path:
    """Write ``d`` as CSV plus a sidecar schema so that loading it back is lossless."""
    path = Path(path)
    names = [c.name for c in d.columns]
    while target in names:
        target = "_" + target
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [target])
        for i in range(d.n_rows):
            row = []
            for j, col in enumerate(d.columns):
                v = d.X[i, j]
                if np.isnan(v):
                    row.append("?")
                elif col.kind == NUMERIC:
                    row.append(_format_number(v))
                else:
                    row.append(col.levels[int(v)])
            row.append(d.classes[int(d.y[i])])
            w.writerow(row)
    sidecar = {
        "target": target,
        "categorical": [c.name for c in d.columns if c.kind == CATEGORICAL],
        "numeric": [c.name for c in d.columns if c.kind == NUMERIC],
    }
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=1)
    return path


# ------------------------------------------------------------- preprocessing


class FixedPreprocessor:
    """Imputation, one-hot encoding and standardization fitted on one table.

    Numeric gaps take the column median and categorical gaps the column mode.
    Numeric columns are then standardized; zero-variance columns become zeros.
    """

    def fit(self, d: Dataset) -> "FixedPreprocessor":
        self.columns_ = d.columns
        self.fill_ = np.zeros(d.n_cols)
        self.mean_ = np.zeros(d.n_cols)
        self.scale_ = np.ones(d.n_cols)
        for j, col in enumerate(d.columns):
            v = d.X[:, j]
            present = v[~np.isnan(v)]
            if col.kind == NUMERIC:
                self.fill_[j] = float(np.median(present)) if present.size else 0.0
                filled = np.where(np.isnan(v), self.fill_[j], v)
                self.mean_[j] = filled.mean()
                sd = filled.std()
                self.scale_[j] = sd if sd > 0 else 0.0
            else:
                if present.size:
                    counts = np.bincount(present.astype(np.int64), minlength=len(col.levels))
                    self.fill_[j] = float(np.argmax(counts))
        return self

    def impute(self, d: Dataset) -> Dataset:
        X = np.array(d.X, copy=True)
        for j in range(d.n_cols):
            gaps = np.isnan(X[:, j])
            X[gaps, j] = self.fill_[j]
        return Dataset(d.name, d.columns, X, d.y, d.classes)

    def transform(self, d: Dataset) -> Dataset:
        if d.columns != self.columns_:
            raise ValueError("column layout differs from the fitted table")
        imputed = self.impute(d).X
        blocks, cols = [], []
        for j, col in enumerate(d.columns):
            v = imputed[:, j]
            if col.kind == NUMERIC:
                if self.scale_[j] > 0:
                    blocks.append(((v - self.mean_[j]) / self.scale_[j])[:, None])
                else:
                    blocks.append(np.zeros((d.n_rows, 1)))
                cols.append(Column(col.name, NUMERIC))
            else:
                n_lev = max(len(col.levels), 1)
                onehot = np.zeros((d.n_rows, n_lev))
                codes = v.astype(np.int64)
                ok = (codes >= 0) & (codes < n_lev)
                onehot[np.flatnonzero(ok), codes[ok]] = 1.0
                blocks.append(onehot)
                labels = col.levels or ("?",)
                cols.extend(Column(f"{col.name}={lev}", NUMERIC) for lev in labels)
        X = np.hstack(blocks) if blocks else np.zeros((d.n_rows, 0))
        return Dataset(d.name, tuple(cols), X, d.y, d.classes)


def preprocess_fixed(d: Dataset) -> Dataset:
    return FixedPreprocessor().fit(d).transform(d)


# ----------------------------------------------------------------- splitting


def _largest_remainder(counts: np.ndarray, fraction: float) -> np.ndarray:
    total = int(round(fraction * counts.sum()))
    raw = counts * fraction
    alloc = np.floor(raw).astype(np.int64)
    short = total - int(alloc.sum())
    if short > 0:
        order = sorted(range(len(counts)), key=lambda c: (-(raw[c] - alloc[c]), c))
        for c in order[:short]:
            alloc[c] += 1
    return alloc


def split_indices(y: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y)
    rng = rng_from(spec.seed)
    n = len(y)
    if not spec.stratified:
        perm = rng.permutation(n)
        n_train = min(max(int(round(spec.train_fraction * n)), 1), n - 1)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])
    classes = np.unique(y)
    counts = np.array([np.sum(y == c) for c in classes])
    if counts.min() < 2:
        raise TooFewRows(f"class {classes[np.argmin(counts)]} has {counts.min()} row(s); need >= 2")
    alloc = np.clip(_largest_remainder(counts, spec.train_fraction), 1, counts - 1)
    train, test = [], []
    for c, n_tr in zip(classes, alloc):
        rows = rng.permutation(np.flatnonzero(y == c))
        train.append(rows[:n_tr])
        test.append(rows[n_tr:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    tr, te = split_indices(d.y, spec)
    return d.subset(tr), d.subset(te)


def kfold_labels(y: np.ndarray, k: int, seed: int) -> FoldAssignment:
    y = np.asarray(y)
    n = len(y)
    if k < 2 or k > n:
        raise InvalidK(f"k={k} must satisfy 2 <= k <= n_rows={n}")
    classes = np.unique(y)
    smallest = min(int(np.sum(y == c)) for c in classes)
    eff_k = k
    if smallest < k:
        eff_k = max(2, smallest)
        log.info("smallest class has %d rows; lowering k from %d to %d", smallest, k, eff_k)
    rng = rng_from(seed)
    fold_of = np.empty(n, dtype=np.int64)
    offset = 0
    for c in classes:
        rows = rng.permutation(np.flatnonzero(y == c))
        fold_of[rows] = (offset + np.arange(len(rows))) % eff_k
        offset += len(rows)
    return FoldAssignment(eff_k, fold_of, seed, requested_k=k)


def stratified_kfold(d: Dataset, k: int, seed: int) -> FoldAssignment:
    return kfold_labels(d.y, k, seed)


__all__ = [
    "Column",
    "Dataset",
    "FixedPreprocessor",
    "FoldAssignment",
    "SplitSpec",
    "load_dataset",
    "preprocess_fixed",
    "save_dataset",
    "split_indices",
    "stratified_kfold",
    "stratified_split",
    "kfold_labels",
]
