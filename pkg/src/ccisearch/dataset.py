"""Continuous rectangular data and the robust scale statistics used by the tests."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = ["DataError", "Dataset", "load_csv", "write_csv", "mad", "standardize", "median"]


class DataError(ValueError):
    """Raised for malformed or degenerate input data."""


Column = Union[str, int]


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable N x V matrix of finite reals with named columns.

    Columns are addressable by name or by position. Instances hash by
    identity so tests can key per-dataset caches on them.
    """

    variables: tuple
    values: np.ndarray

    def __post_init__(self):
        names = tuple(str(v) for v in self.variables)
        if any(not n for n in names):
            raise DataError("variable names must be nonempty")
        if len(set(names)) != len(names):
            raise DataError("variable names must be unique")
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 2 or vals.shape[1] != len(names):
            raise DataError(
                f"values must be N x {len(names)}, got shape {vals.shape}"
            )
        if vals.shape[0] < 1:
            raise DataError("no samples")
        if not np.all(np.isfinite(vals)):
            r, c = np.argwhere(~np.isfinite(vals))[0]
            raise DataError(f"non-finite value at row {r + 1}, column {names[c]!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "variables", names)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def index(self, col: Column) -> int:
        if isinstance(col, (int, np.integer)):
            if not 0 <= col < self.n_vars:
                raise KeyError(f"column index {col} out of range")
            return int(col)
        try:
            return self._index[col]
        except KeyError:
            raise KeyError(f"unknown variable {col!r}") from None

    def column(self, col: Column) -> np.ndarray:
        return self.values[:, self.index(col)]

    def columns(self, cols: Iterable[Column]) -> np.ndarray:
        """Return an N x k matrix of the requested columns (k may be 0)."""
        idx = [self.index(c) for c in cols]
        return self.values[:, idx]

    def select(self, cols: Sequence[Column]) -> "Dataset":
        idx = [self.index(c) for c in cols]
        return Dataset(tuple(self.variables[i] for i in idx), self.values[:, idx])

    def __len__(self):
        return self.n_samples

    def __repr__(self):
        return f"Dataset(n_samples={self.n_samples}, variables={list(self.variables)})"


def load_csv(path) -> Dataset:
    """Read a header-first, comma separated file of real numbers."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}"
                )
            parsed = []
            for name, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: line {lineno}, column {name!r}: non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: line {lineno}, column {name!r}: non-finite value {cell!r}"
                    )
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no samples")
    return Dataset(tuple(header), np.array(rows, dtype=float))


def write_csv(data: Dataset, path) -> None:
    # repr() of a Python float is the shortest round-trippable form
    with open(path, "w", newline="") as fh:
        fh.write(",".join(data.variables) + "\n")
        for row in data.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def median(x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise DataError("median of an empty vector")
    # np.median averages the two middle order statistics for even sizes
    return float(np.median(x))


def mad(x) -> float:
    """Median absolute deviation from the median (unscaled)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise DataError("mad of an empty vector")
    return float(np.median(np.abs(x - np.median(x))))


def standardize(x) -> np.ndarray:
    """Center and scale to sample mean 0 and sample (N-1) std 1."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise DataError("standardize needs at least 2 values")
    centered = x - x.mean()
    sd = centered.std(ddof=1)
    if not sd > 0:
        raise DataError("degenerate column: zero variance")
    return centered / sd
