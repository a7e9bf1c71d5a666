"""Tabular data handling: loading, column hygiene, scaling, and splits.

Input CSV schema: header row, first column ``id``, feature columns prefixed
``f_`` (learned latent features additionally prefixed ``f_mpnn_``), target
columns unprefixed. Missing cells are empty strings and are only legal in
target columns; ``nan``/``inf`` tokens in a feature column cause that column
to be dropped rather than a parse failure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import DataError

REGRESSION = "regression"
CLASSIFICATION = "classification"
TASKS = (REGRESSION, CLASSIFICATION)

FEATURE_PREFIX = "f_"
LEARNED_PREFIX = "f_mpnn_"

KIND_DESCRIPTOR = "external-descriptor"
KIND_LEARNED = "learned-latent"

SPLIT_PARTS = ("train", "val", "test")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FeatureTable:
    """Row-major numeric feature matrix with named columns and row ids.

    Every cell is finite; missing markers are only permitted in targets,
    which live outside this type.
    """

    row_ids: tuple[str, ...]
    column_names: tuple[str, ...]
    column_kinds: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError("feature values must be a 2-D matrix")
        if values.shape != (len(self.row_ids), len(self.column_names)):
            raise DataError(
                f"feature matrix shape {values.shape} does not match "
                f"{len(self.row_ids)} rows x {len(self.column_names)} columns"
            )
        if len(set(self.column_names)) != len(self.column_names):
            raise DataError("feature column names must be unique")
        if len(set(self.row_ids)) != len(self.row_ids):
            raise DataError("row ids must be unique")
        if len(self.column_kinds) != len(self.column_names):
            raise DataError("one column kind required per column")
        if values.size and not np.isfinite(values).all():
            raise DataError("feature cells must be finite (no NaN/Inf)")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    @property
    def n_cols(self) -> int:
        return len(self.column_names)

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise DataError(f"unknown feature column {name!r}") from None

    def select_columns(self, names: Sequence[str]) -> "FeatureTable":
        idx = [self.column_index(n) for n in names]
        return FeatureTable(
            row_ids=self.row_ids,
            column_names=tuple(names),
            column_kinds=tuple(self.column_kinds[i] for i in idx),
            values=self.values[:, idx] if idx else np.zeros((self.n_rows, 0)),
        )

    def take_rows(self, rows: Sequence[int]) -> "FeatureTable":
        rows = list(rows)
        return FeatureTable(
            row_ids=tuple(self.row_ids[i] for i in rows),
            column_names=self.column_names,
            column_kinds=self.column_kinds,
            values=self.values[rows],
        )


@dataclass(frozen=True)
class TargetColumn:
    """One prediction target; NaN marks a missing cell."""

    name: str
    task: str
    values: np.ndarray

    def __post_init__(self):
        if self.task not in TASKS:
            raise DataError(f"unknown task {self.task!r}")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DataError("target values must be 1-D")
        present = values[~np.isnan(values)]
        if np.isinf(present).any():
            raise DataError(f"target {self.name!r} contains non-finite values")
        if present.size < 2:
            raise DataError(f"target {self.name!r} has fewer than 2 present values")
        if self.task == CLASSIFICATION and not np.isin(present, (0.0, 1.0)).all():
            raise DataError(
                f"classification target {self.name!r} has values outside {{0,1}}"
            )
        object.__setattr__(self, "values", _readonly(values))

    @property
    def present_mask(self) -> np.ndarray:
        return ~np.isnan(self.values)


@dataclass(frozen=True)
class DataSplit:
    """Disjoint train/validation/test row indices."""

    train_idx: tuple[int, ...]
    val_idx: tuple[int, ...]
    test_idx: tuple[int, ...] = ()

    def __post_init__(self):
        parts = (set(self.train_idx), set(self.val_idx), set(self.test_idx))
        if sum(len(p) for p in parts) != len(self.train_idx) + len(self.val_idx) + len(self.test_idx):
            raise DataError("split contains a duplicated index within one part")
        if parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2]:
            raise DataError("split parts must be pairwise disjoint")


@dataclass(frozen=True)
class ScalerParams:
    """Per-column mean and (strictly positive) standard deviation."""

    column_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        if mean.shape != (len(self.column_names),) or std.shape != mean.shape:
            raise DataError("scaler parameter shapes do not match column names")
        if (std <= 0).any():
            raise DataError("scaler std must be strictly positive for every column")
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "std", _readonly(std))

    def select(self, names: Sequence[str]) -> "ScalerParams":
        pos = {n: i for i, n in enumerate(self.column_names)}
        try:
            idx = [pos[n] for n in names]
        except KeyError as e:
            raise DataError(f"scaler has no parameters for column {e.args[0]!r}") from None
        return ScalerParams(tuple(names), self.mean[idx], self.std[idx])


@dataclass(frozen=True)
class ColumnFilterReport:
    """Which columns survived loading/filtering and why the rest did not."""

    dropped_nonfinite: tuple[str, ...] = ()
    dropped_constant: tuple[str, ...] = ()
    retained: tuple[str, ...] = ()

    def merged_with(self, other: "ColumnFilterReport") -> "ColumnFilterReport":
        return ColumnFilterReport(
            dropped_nonfinite=self.dropped_nonfinite + other.dropped_nonfinite,
            dropped_constant=self.dropped_constant + other.dropped_constant,
            retained=other.retained,
        )


def _parse_cell(token: str) -> float:
    token = token.strip()
    if token == "":
        return math.nan
    return float(token)


def load_dataset(
    path: str | Path,
    target_names: Sequence[str],
    task: str,
) -> tuple[FeatureTable, list[TargetColumn], ColumnFilterReport]:
    """Load the CSV schema, enforcing the feature-column hygiene rules.

    Feature columns containing any NaN/Inf cell are dropped and recorded in
    ``dropped_nonfinite``; columns constant across all rows (e.g. all-zero
    learned features) are dropped and recorded in ``dropped_constant``.
    Target columns keep NaN as a missing marker.
    """
    path = Path(path)
    if task not in TASKS:
        raise DataError(f"unknown task {task!r}")
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)

    if not header or header[0] != "id":
        raise DataError(f"{path}: first column must be 'id'")
    columns = header[1:]
    if len(set(columns)) != len(columns):
        raise DataError(f"{path}: duplicate column names in header")

    feature_names = [c for c in columns if c.startswith(FEATURE_PREFIX)]
    plain_names = [c for c in columns if not c.startswith(FEATURE_PREFIX)]
    for t in target_names:
        if t not in plain_names:
            raise DataError(f"{path}: unknown target column {t!r}")

    n_rows = len(rows)
    if n_rows == 0:
        raise DataError(f"{path}: no data rows")

    row_ids: list[str] = []
    raw = np.empty((n_rows, len(columns)), dtype=float)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        row_ids.append(row[0])
        for j, token in enumerate(row[1:]):
            try:
                raw[i, j] = _parse_cell(token)
            except ValueError:
                raise DataError(
                    f"{path}: row {i + 2}, column {columns[j]!r}: cannot parse {token!r}"
                ) from None
    if len(set(row_ids)) != n_rows:
        raise DataError(f"{path}: duplicate row ids")

    col_pos = {c: j for j, c in enumerate(columns)}

    dropped_nonfinite: list[str] = []
    finite_features: list[str] = []
    for name in feature_names:
        col = raw[:, col_pos[name]]
        if np.isfinite(col).all():
            finite_features.append(name)
        else:
            dropped_nonfinite.append(name)

    dropped_constant: list[str] = []
    retained: list[str] = []
    for name in finite_features:
        col = raw[:, col_pos[name]]
        if n_rows > 1 and (col == col[0]).all():
            dropped_constant.append(name)
        else:
            retained.append(name)

    if feature_names and not retained:
        raise DataError(f"{path}: zero retained feature columns after filtering")

    kinds = tuple(
        KIND_LEARNED if n.startswith(LEARNED_PREFIX) else KIND_DESCRIPTOR for n in retained
    )
    table = FeatureTable(
        row_ids=tuple(row_ids),
        column_names=tuple(retained),
        column_kinds=kinds,
        values=raw[:, [col_pos[n] for n in retained]] if retained else np.zeros((n_rows, 0)),
    )
    targets = [
        TargetColumn(name=t, task=task, values=raw[:, col_pos[t]].copy()) for t in target_names
    ]
    report = ColumnFilterReport(
        dropped_nonfinite=tuple(dropped_nonfinite),
        dropped_constant=tuple(dropped_constant),
        retained=tuple(retained),
    )
    return table, targets, report


def fit_scaler(table: FeatureTable, rows: Sequence[int]) -> ScalerParams:
    """Per-column mean/std over the given (training) rows only.

    Uses the population (1/n) variance. A zero-variance column is an error:
    it means filter_columns was skipped.
    """
    rows = list(rows)
    if not rows:
        raise DataError("cannot fit scaler on an empty row set")
    sub = table.values[rows]
    mean = sub.mean(axis=0)
    std = np.sqrt(sub.var(axis=0))
    zero = np.flatnonzero(std == 0)
    if zero.size:
        names = ", ".join(table.column_names[j] for j in zero[:5])
        raise DataError(f"zero-variance column(s) over the given rows: {names}")
    return ScalerParams(table.column_names, mean, std)


def apply_scaler(table: FeatureTable, params: ScalerParams) -> FeatureTable:
    """Return (x - mean) / std per column. Applying twice rescales twice."""
    if params.column_names != table.column_names:
        raise DataError("scaler parameters do not match table columns")
    return FeatureTable(
        row_ids=table.row_ids,
        column_names=table.column_names,
        column_kinds=table.column_kinds,
        values=(table.values - params.mean) / params.std,
    )


def filter_columns(
    table: FeatureTable, rows: Sequence[int]
) -> tuple[FeatureTable, ColumnFilterReport]:
    """Drop every column constant (exact equality) over the given rows."""
    rows = list(rows)
    if not rows:
        raise DataError("cannot filter columns over an empty row set")
    sub = table.values[rows]
    keep: list[str] = []
    dropped: list[str] = []
    for j, name in enumerate(table.column_names):
        if len(rows) > 1 and (sub[:, j] == sub[0, j]).all():
            dropped.append(name)
        else:
            keep.append(name)
    if not keep:
        raise DataError("all feature columns are constant over the given rows")
    report = ColumnFilterReport(
        dropped_constant=tuple(dropped),
        retained=tuple(keep),
    )
    return table.select_columns(keep), report


def make_random_split(
    n_rows: int,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DataSplit:
    """Seeded random split; sizes floor-allocated with the remainder to train."""
    f_train, f_val, f_test = fractions
    if min(f_train, f_val, f_test) <= 0:
        raise DataError("split fractions must all be positive")
    if abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise DataError("split fractions must sum to 1")
    if seed < 0:
        raise DataError("seed must be non-negative")
    if n_rows < 10:
        raise DataError(f"need at least 10 rows to split, got {n_rows}")
    n_val = int(math.floor(n_rows * f_val))
    n_test = int(math.floor(n_rows * f_test))
    n_train = n_rows - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise DataError(f"{n_rows} rows is too few to give each split part a row")
    perm = np.random.default_rng(seed).permutation(n_rows)
    return DataSplit(
        train_idx=tuple(sorted(int(i) for i in perm[:n_train])),
        val_idx=tuple(sorted(int(i) for i in perm[n_train:n_train + n_val])),
        test_idx=tuple(sorted(int(i) for i in perm[n_train + n_val:])),
    )


def load_split_file(path: str | Path, row_ids: Sequence[str]) -> DataSplit:
    """Read an externally supplied split (CSV: id,part) covering every row once."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"split file not found: {path}")
    pos = {rid: i for i, rid in enumerate(row_ids)}
    assigned: dict[str, str] = {}
    parts: dict[str, list[int]] = {p: [] for p in SPLIT_PARTS}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["id", "part"]:
            raise DataError(f"{path}: split file header must be 'id,part'")
        for lineno, row in enumerate(reader, start=2):
            if len(row) < 2:
                raise DataError(f"{path}: line {lineno}: expected 'id,part'")
            rid, part = row[0], row[1].strip()
            if part not in SPLIT_PARTS:
                raise DataError(f"{path}: line {lineno}: unknown part {part!r}")
            if rid not in pos:
                raise DataError(f"{path}: line {lineno}: unknown row id {rid!r}")
            if rid in assigned:
                raise DataError(f"{path}: row id {rid!r} assigned more than once")
            assigned[rid] = part
            parts[part].append(pos[rid])
    missing = [rid for rid in row_ids if rid not in assigned]
    if missing:
        raise DataError(f"{path}: {len(missing)} row id(s) missing, first: {missing[0]!r}")
    return DataSplit(
        train_idx=tuple(sorted(parts["train"])),
        val_idx=tuple(sorted(parts["val"])),
        test_idx=tuple(sorted(parts["test"])),
    )
