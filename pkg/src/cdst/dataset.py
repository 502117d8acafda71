"""Tabular data model, CSV ingestion and train/test splitting."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DataError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Dataset:
    """Rows of feature covariates ``x``, weight covariates ``xtilde`` and response ``y``.

    ``y`` may be ``None`` for unlabeled prediction data. ``truth`` holds
    generator-side quantities (e.g. the noiseless mean) keyed by name;
    they are written to CSV with a leading underscore.
    """

    x: np.ndarray
    xtilde: np.ndarray
    y: np.ndarray | None
    x_names: tuple[str, ...] = ()
    xtilde_names: tuple[str, ...] = ()
    truth: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        x = _as_matrix(self.x, "x")
        xt = _as_matrix(self.xtilde, "xtilde")
        n, d = x.shape
        if n < 1 or d < 1 or xt.shape[1] < 1:
            raise DataError(f"need n >= 1, d >= 1, d~ >= 1; got x {x.shape}, xtilde {xt.shape}")
        if xt.shape[0] != n:
            raise DataError(f"xtilde has {xt.shape[0]} rows, x has {n}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xt))):
            raise DataError("non-finite covariate entries")
        y = self.y
        if y is not None:
            y = np.asarray(y, dtype=float).reshape(-1)
            if y.shape[0] != n:
                raise DataError(f"y has length {y.shape[0]}, x has {n} rows")
            if not np.all(np.isfinite(y)):
                raise DataError("non-finite response entries")
            y.setflags(write=False)
        x_names = tuple(self.x_names) or tuple(f"x{i + 1}" for i in range(d))
        xt_names = tuple(self.xtilde_names) or tuple(f"xt{i + 1}" for i in range(xt.shape[1]))
        if len(x_names) != d or len(xt_names) != xt.shape[1]:
            raise DataError("column name count does not match matrix width")
        truth = {}
        for k, v in dict(self.truth).items():
            v = np.asarray(v, dtype=float).reshape(-1)
            if v.shape[0] != n:
                raise DataError(f"truth column {k!r} has wrong length")
            v.setflags(write=False)
            truth[k] = v
        x.setflags(write=False)
        xt.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xtilde", xt)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x_names", x_names)
        object.__setattr__(self, "xtilde_names", xt_names)
        object.__setattr__(self, "truth", truth)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    @property
    def d_tilde(self):
        return self.xtilde.shape[1]

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=int)
        return Dataset(
            self.x[idx],
            self.xtilde[idx],
            None if self.y is None else self.y[idx],
            self.x_names,
            self.xtilde_names,
            {k: v[idx] for k, v in self.truth.items()},
        )


@dataclass(frozen=True)
class Roles:
    """Column-role map: one response, feature columns, weight-covariate columns.

    A column may be both a feature and a weight covariate. ``response`` may be
    ``None`` when reading data that carries no response.
    """

    response: str | None
    features: tuple[str, ...]
    weights: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "weights", tuple(self.weights))
        if not self.features:
            raise DataError("roles must name at least one feature column")
        if not self.weights:
            raise DataError("roles must name at least one weight-covariate column")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str | Sequence[str]]) -> Roles:
        """Build from ``{column: role}`` where role is ``response``, ``feature``,
        ``weight``, ``both`` or a list of those."""
        response, features, weights = [], [], []
        for col, role in mapping.items():
            rs = [role] if isinstance(role, str) else list(role)
            for r in rs:
                if r == "response":
                    response.append(col)
                elif r == "feature":
                    features.append(col)
                elif r == "weight":
                    weights.append(col)
                elif r == "both":
                    features.append(col)
                    weights.append(col)
                else:
                    raise DataError(f"unknown role {r!r} for column {col!r}")
        if len(response) > 1:
            raise DataError(f"exactly one response column allowed, got {response}")
        return cls(response[0] if response else None, tuple(features), tuple(weights))


def read_csv(path, roles: Roles, require_response=True) -> Dataset:
    """Read a header-first, comma-separated numeric file into a :class:`Dataset`.

    Columns not named in ``roles`` are ignored, except that columns prefixed
    with ``_`` are loaded into ``Dataset.truth``. Blank or non-numeric cells
    in any used column raise :class:`DataError` naming the row and column.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row expected") from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")

    index = {name: i for i, name in enumerate(header)}
    if require_response and roles.response is None:
        raise DataError("roles name no response column")
    response = roles.response
    if response is not None and response not in index:
        if require_response:
            raise DataError(f"{path}: unknown column {response!r}")
        response = None
    for name in (*roles.features, *roles.weights):
        if name not in index:
            raise DataError(f"{path}: unknown column {name!r}")
    truth_cols = [h for h in header if h.startswith("_")]
    used = list(dict.fromkeys([*roles.features, *roles.weights, *truth_cols]
                              + ([response] if response else [])))

    values = {name: np.empty(len(rows)) for name in used}
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r + 1} has {len(row)} cells, header has {len(header)}")
        for name in used:
            cell = row[index[name]].strip()
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {r + 1}, column {name!r}: non-numeric or missing value {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {r + 1}, column {name!r}: non-finite value {cell!r}")
            values[name][r] = v

    x = np.column_stack([values[c] for c in roles.features])
    xt = np.column_stack([values[c] for c in roles.weights])
    y = values[response] if response else None
    truth = {c[1:]: values[c] for c in truth_cols}
    return Dataset(x, xt, y, roles.features, roles.weights, truth)


def write_csv(data: Dataset, path, response_name="y"):
    """Write ``data`` as CSV: response, features, weight covariates not already
    among the features, then ``_``-prefixed truth columns. Reals use 17
    significant digits so that :func:`read_csv` recovers them exactly."""
    cols, names = [], []
    if data.y is not None:
        cols.append(data.y)
        names.append(response_name)
    for j, name in enumerate(data.x_names):
        cols.append(data.x[:, j])
        names.append(name)
    for j, name in enumerate(data.xtilde_names):
        if name in data.x_names:
            if not np.array_equal(data.x[:, data.x_names.index(name)], data.xtilde[:, j]):
                raise DataError(f"column {name!r} differs between x and xtilde")
            continue
        cols.append(data.xtilde[:, j])
        names.append(name)
    for k, v in data.truth.items():
        cols.append(v)
        names.append("_" + k)
    atomic_write_rows(path, names, np.column_stack(cols))


def atomic_write_rows(path, header, rows):
    """Write a CSV through a temporary file and rename it into place."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_real(v) if isinstance(v, (float, np.floating)) else v for v in row])
    os.replace(tmp, path)


def format_real(v):
    return format(float(v), ".17g")


@dataclass(frozen=True)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int


def split(n, train_fraction, seed) -> SplitPlan:
    """Random train/test split with ``round(train_fraction * n)`` training rows."""
    if n < 2:
        raise DataError(f"split needs n >= 2, got {n}")
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(math.floor(train_fraction * n + 0.5))
    if n_train < 1 or n_train > n - 1:
        raise DataError(f"train_fraction {train_fraction} leaves an empty side for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    train = np.sort(perm[:n_train])
    test = np.sort(perm[n_train:])
    train.setflags(write=False)
    test.setflags(write=False)
    return SplitPlan(train, test, int(seed))
