"""Immutable columnar datasets, CSV I/O and seeded resampling.

Random streams come from numpy's ``PCG64`` bit generator seeded through
``SeedSequence(seed, spawn_key=stream)``. PCG64 output for a given seed
sequence is stable across numpy releases; the distribution methods layered
on top are pinned by the ``numpy`` requirement in ``pyproject.toml``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .graph import NAME_RE

RNG_ALGORITHM = "numpy.random.PCG64 via SeedSequence(seed, spawn_key=stream)"


class DataError(ValueError):
    """Raised for malformed or inconsistent tabular data."""


class MissingColumnError(DataError, KeyError):
    def __str__(self):
        return ValueError.__str__(self)


@dataclass(frozen=True)
class RandomSeed:
    """A 64-bit seed plus a stream path; together they fix every draw."""

    seed: int = 0
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))

    def child(self, index: int) -> "RandomSeed":
        return RandomSeed(self.seed, self.stream + (index,))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self.stream)))


def as_seed(seed) -> RandomSeed:
    if isinstance(seed, RandomSeed):
        return seed
    if seed is None:
        return RandomSeed(0)
    return RandomSeed(int(seed))


class Dataset:
    """Ordered named float64 columns of equal length.

    Columns are stored as read-only arrays and shared between derived
    datasets, so every transformation is cheap and leaves its input intact.
    """

    __slots__ = ("_columns", "_n")

    def __init__(self, columns: Mapping[str, Iterable[float]] | Iterable[tuple[str, Iterable[float]]]):
        items = columns.items() if isinstance(columns, Mapping) else columns
        cols: dict[str, np.ndarray] = {}
        n = None
        for name, values in items:
            if not isinstance(name, str) or not NAME_RE.match(name):
                raise DataError(f"invalid column name {name!r}")
            if name in cols:
                raise DataError(f"duplicate column {name!r}")
            arr = np.array(values, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                raise DataError(f"column {name!r} has a non-finite value at row {bad}")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise DataError(f"column {name!r} has {arr.shape[0]} values, expected {n}")
            arr.setflags(write=False)
            cols[name] = arr
        self._columns = cols
        self._n = 0 if n is None else n

    @classmethod
    def _trusted(cls, columns: dict[str, np.ndarray], n: int) -> "Dataset":
        obj = cls.__new__(cls)
        obj._columns = columns
        obj._n = n
        return obj

    @property
    def columns(self) -> list[str]:
        return list(self._columns)

    @property
    def row_count(self) -> int:
        return self._n

    def __len__(self):
        return self._n

    def __contains__(self, name):
        return name in self._columns

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._columns[name]
        except KeyError:
            raise MissingColumnError(f"no column {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.columns == other.columns and self._n == other._n
                and all(np.array_equal(self[c], other[c]) for c in self.columns))

    __hash__ = None

    def __repr__(self):
        return f"Dataset(columns={self.columns}, row_count={self._n})"

    def matrix(self, names: Iterable[str]) -> np.ndarray:
        names = list(names)
        if not names:
            return np.empty((self._n, 0))
        return np.column_stack([self[n] for n in names])

    def require(self, names: Iterable[str]) -> None:
        missing = [n for n in names if n not in self._columns]
        if missing:
            raise MissingColumnError(f"missing column(s): {', '.join(missing)}")

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        cols = {}
        for k, v in self._columns.items():
            arr = v[rows]
            arr.setflags(write=False)
            cols[k] = arr
        return Dataset._trusted(cols, rows.shape[0])

    def with_column(self, name: str, values) -> "Dataset":
        return with_column(self, name, values)

    def replace_column(self, name: str, values) -> "Dataset":
        return replace_column(self, name, values)

    def to_pandas(self):
        import pandas as pd

        return pd.DataFrame({k: np.array(v) for k, v in self._columns.items()})

    @classmethod
    def from_pandas(cls, frame) -> "Dataset":
        return cls({str(c): frame[c].to_numpy(dtype=np.float64) for c in frame.columns})

    def to_csv(self, path=None) -> str | None:
        buf = io.StringIO()
        write_csv(self, buf)
        if path is None:
            return buf.getvalue()
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        return None


def _column(d: Dataset, name: str, values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.shape[0] != d.row_count:
        raise DataError(f"column {name!r} has {arr.shape[0]} values, dataset has {d.row_count} rows")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"column {name!r} has non-finite values")
    arr.setflags(write=False)
    return arr


def with_column(d: Dataset, name: str, values) -> Dataset:
    """Return a copy of ``d`` with a new column appended."""
    if name in d:
        raise DataError(f"column {name!r} already exists")
    if not NAME_RE.match(name):
        raise DataError(f"invalid column name {name!r}")
    cols = dict(d._columns)
    cols[name] = _column(d, name, values)
    return Dataset._trusted(cols, d.row_count)


def replace_column(d: Dataset, name: str, values) -> Dataset:
    if name not in d:
        raise MissingColumnError(f"no column {name!r}")
    cols = dict(d._columns)
    cols[name] = _column(d, name, values)
    return Dataset._trusted(cols, d.row_count)


def load_csv(path, required_columns: Iterable[str] = ()) -> Dataset:
    """Read a headered, comma-separated numeric CSV file.

    Errors name the 1-based file line and the column of the bad cell.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        return read_csv(fh, required_columns)


def read_csv(fh, required_columns: Iterable[str] = ()) -> Dataset:
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty CSV: header row required") from None
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    missing = [c for c in required_columns if c not in header]
    if missing:
        raise MissingColumnError(f"missing column(s): {', '.join(sorted(missing))}")
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"line {line_no}: expected {len(header)} fields, got {len(row)}")
        parsed = []
        for col, cell in zip(header, row):
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"line {line_no}, column {col!r}: non-numeric value {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"line {line_no}, column {col!r}: non-finite value {cell!r}")
            parsed.append(value)
        rows.append(parsed)
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return Dataset([(name, values[:, j]) for j, name in enumerate(header)])


def write_csv(d: Dataset, fh) -> None:
    """Write ``d`` with column order preserved; floats use shortest round-trip repr."""
    fh.write(",".join(d.columns) + "\n")
    cols = [d[c] for c in d.columns]
    for i in range(d.row_count):
        fh.write(",".join(repr(float(c[i])) for c in cols) + "\n")


def bootstrap_sample(d: Dataset, seed) -> Dataset:
    """Resample ``row_count`` rows with replacement."""
    if d.row_count < 1:
        raise DataError("cannot bootstrap an empty dataset")
    rng = as_seed(seed).generator()
    return d.take(rng.integers(0, d.row_count, size=d.row_count))


def subset_sample(d: Dataset, fraction: float, seed) -> Dataset:
    """Draw ``ceil(fraction * row_count)`` distinct rows uniformly at random.

    Chosen rows keep their original relative order, so ``fraction=1`` returns
    the input unchanged.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    # rounding guards against 0.7 * 10 -> 7.000000000000001
    k = math.ceil(round(fraction * d.row_count, 9))
    if k < 1:
        raise DataError("subset would be empty")
    rng = as_seed(seed).generator()
    return d.take(np.sort(rng.permutation(d.row_count)[:k]))
