"""Airline-passenger series loading, min-max scaling and supervised windowing."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConstantSeries, EmptySeries, ParseFailure, SplitError, TooShort

LOOK_BACK = 2
DEFAULT_TEST_COUNT = 45


@dataclass(frozen=True)
class RawSeries:
    values: tuple[float, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.values:
            raise EmptySeries("series has no observations")
        if not all(np.isfinite(self.values)):
            raise ValueError("observations must be finite")

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class Normalizer:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise ConstantSeries(f"max ({self.max}) must exceed min ({self.min})")

    @property
    def span(self) -> float:
        return self.max - self.min


@dataclass(frozen=True)
class SupervisedSet:
    """Rows of ``(x_prev, x_curr, target)`` on the normalized scale."""

    rows: np.ndarray  # shape (n, 3)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != 3:
            raise ValueError(f"expected an (n, 3) array, got shape {rows.shape}")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def inputs(self) -> np.ndarray:
        return self.rows[:, :2]

    @property
    def targets(self) -> np.ndarray:
        return self.rows[:, 2]


def _parse_lines(lines: Sequence[str], source: str) -> RawSeries:
    values: list[float] = []
    labels: list[str] = []
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        cell = row[-1].strip()
        try:
            value = float(cell)
        except ValueError:
            # a header is only tolerated as the first non-blank line
            if not values and lineno == _first_content_line(lines):
                continue
            raise ParseFailure(lineno, cell) from None
        if not np.isfinite(value):
            raise ParseFailure(lineno, cell)
        values.append(value)
        if len(row) > 1:
            labels.append(row[0].strip())
    if not values:
        raise EmptySeries(f"no observations in {source}")
    return RawSeries(tuple(values), tuple(labels) if len(labels) == len(values) else None)


def _first_content_line(lines: Sequence[str]) -> int:
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            return lineno
    return 0


def load_series(path: str | Path) -> RawSeries:
    """Read a one-observation-per-line CSV.

    A ``Month,Passengers`` style header and a leading label column are both
    optional; the last column of each line is taken as the observation.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    return _parse_lines(lines, str(path))


def canonical_series() -> RawSeries:
    """The bundled 144-month international airline passenger series (1949-1960)."""
    text = resources.files("memlstm").joinpath("data/airline-passengers.csv").read_text("utf-8")
    return _parse_lines(text.splitlines(), "bundled airline-passengers.csv")


def canonical_path() -> Path:
    return Path(str(resources.files("memlstm").joinpath("data/airline-passengers.csv")))


def fit_normalizer(series: RawSeries) -> Normalizer:
    arr = series.as_array()
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        raise ConstantSeries(f"series is constant at {lo}")
    return Normalizer(lo, hi)


def normalize(norm: Normalizer, values) -> np.ndarray:
    if isinstance(values, RawSeries):
        values = values.values
    arr = np.asarray(values, dtype=np.float64)
    out = (arr - norm.min) / norm.span
    if np.any((out < 0.0) | (out > 1.0)):
        warnings.warn("values fall outside the fitted normalizer range", stacklevel=2)
    return out


def denormalize(norm: Normalizer, values):
    arr = np.asarray(values, dtype=np.float64)
    out = arr * norm.span + norm.min
    return float(out) if out.ndim == 0 else out


def window(series, look_back: int = LOOK_BACK) -> SupervisedSet:
    """Turn a normalized series into overlapping ``(s[k], s[k+1], s[k+2])`` rows."""
    if look_back != LOOK_BACK:
        raise ValueError(f"only a look-back of {LOOK_BACK} is supported")
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1 or s.size < LOOK_BACK + 1:
        raise TooShort(f"need at least {LOOK_BACK + 1} points, got {s.size}")
    rows = np.stack([s[:-2], s[1:-1], s[2:]], axis=1)
    return SupervisedSet(rows)


def split(data: SupervisedSet, test_count: int = DEFAULT_TEST_COUNT) -> tuple[SupervisedSet, SupervisedSet]:
    if test_count < 1:
        raise SplitError(f"test_count must be positive, got {test_count}")
    if test_count >= len(data):
        raise SplitError(f"test_count {test_count} leaves no training rows out of {len(data)}")
    cut = len(data) - test_count
    return SupervisedSet(data.rows[:cut]), SupervisedSet(data.rows[cut:])


@dataclass(frozen=True)
class PreparedData:
    series: RawSeries
    normalizer: Normalizer
    normalized: np.ndarray
    train: SupervisedSet
    test: SupervisedSet


def prepare(series: RawSeries | None = None, test_count: int = DEFAULT_TEST_COUNT) -> PreparedData:
    """Full preprocessing chain; the normalizer is fit on the whole series."""
    series = series if series is not None else canonical_series()
    norm = fit_normalizer(series)
    scaled = normalize(norm, series)
    train, test = split(window(scaled), test_count)
    return PreparedData(series, norm, scaled, train, test)


def dump_series(values, fh: io.TextIOBase | None = None) -> str:
    """Write ``index,value`` CSV with 6-decimal fixed point; returns the text."""
    buf = io.StringIO()
    buf.write("index,value\n")
    for k, v in enumerate(np.asarray(values, dtype=np.float64)):
        buf.write(f"{k},{v:.6f}\n")
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_series_dump(text: str) -> np.ndarray:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["index", "value"]:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    return np.array([float(r["value"]) for r in reader], dtype=np.float64)
