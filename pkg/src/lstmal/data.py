"""Return-series ingestion: price/return CSV files, log returns, splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np


class DataError(ValueError):
    """Raised when an input file or series violates its invariants."""


def _date_key(d: str):
    # integer-index dates (simulated data) must compare numerically
    try:
        return (0, int(d), "")
    except ValueError:
        return (1, 0, d)


def _check_increasing(dates: Sequence[str], first_line: int = 2) -> None:
    for i in range(1, len(dates)):
        if _date_key(dates[i]) <= _date_key(dates[i - 1]):
            raise DataError(
                f"line {first_line + i}: date {dates[i]!r} does not follow {dates[i - 1]!r}"
            )


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        if len(self.dates) != len(closes):
            raise DataError("dates and closes differ in length")
        if closes.size and not (np.all(np.isfinite(closes)) and np.all(closes > 0)):
            raise DataError("closes must be finite and strictly positive")
        _check_increasing(self.dates)
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return len(self.closes)


@dataclass(frozen=True)
class ReturnSeries:
    """Percentage log returns, optionally dated.

    When ``dates`` is omitted the positions ``0..n-1`` are used as dates.
    """

    values: np.ndarray
    dates: Optional[tuple] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise DataError("returns must be finite")
        if self.dates is not None and len(self.dates) != len(values):
            raise DataError("dates and returns differ in length")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def date_labels(self) -> list:
        if self.dates is None:
            return [str(i) for i in range(len(self))]
        return [str(d) for d in self.dates]

    def __getitem__(self, key: slice) -> "ReturnSeries":
        if not isinstance(key, slice):
            raise TypeError("ReturnSeries supports slicing only")
        dates = tuple(self.date_labels()[key])
        return ReturnSeries(self.values[key], dates)


@dataclass(frozen=True)
class WindowSplit:
    in_sample: ReturnSeries
    out_sample: ReturnSeries
    window_size: int = field(default=0)


def _read_rows(path) -> Iterator[tuple[int, list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, [c.strip() for c in row]


def _parse_float(text: str, lineno: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {lineno}: non-numeric {what} {text!r}") from None
    if not np.isfinite(value):
        raise DataError(f"line {lineno}: non-finite {what} {text!r}")
    return value


def load_price_csv(path) -> PriceSeries:
    """Read a ``date,close`` file into a :class:`PriceSeries`.

    Every violation is reported with the 1-based line number of the
    offending record (the header is line 1).
    """
    rows = _read_rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataError("empty file: no header") from None
    if [h.lower() for h in header[:2]] != ["date", "close"]:
        raise DataError(f"line 1: expected header 'date,close', got {','.join(header)!r}")

    dates, closes = [], []
    prev_key = None
    for lineno, row in rows:
        if len(row) < 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        close = _parse_float(row[1], lineno, "close")
        if close <= 0:
            raise DataError(f"line {lineno}: non-positive close {row[1]}")
        key = _date_key(row[0])
        if prev_key is not None and key <= prev_key:
            raise DataError(f"line {lineno}: date {row[0]!r} is not strictly increasing")
        prev_key = key
        dates.append(row[0])
        closes.append(close)
    if not closes:
        raise DataError("no observations")
    return PriceSeries(tuple(dates), np.array(closes))


def load_return_csv(path) -> ReturnSeries:
    """Read a ``date,return`` file (returns already in percent).

    The date column may be left blank, in which case integer positions
    are substituted. Extra columns (e.g. ``logvol``) are ignored.
    """
    rows = _read_rows(path)
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataError("empty file: no header") from None
    names = [h.lower() for h in header]
    if "return" not in names:
        raise DataError(f"line 1: expected a 'return' column, got {','.join(header)!r}")
    i_ret = names.index("return")
    i_date = names.index("date") if "date" in names else None

    dates, values = [], []
    for lineno, row in rows:
        if len(row) <= i_ret:
            raise DataError(f"line {lineno}: missing return field")
        values.append(_parse_float(row[i_ret], lineno, "return"))
        dates.append(row[i_date] if i_date is not None and i_date < len(row) else "")
    if not values:
        raise DataError("no observations")
    if all(d == "" for d in dates):
        return ReturnSeries(np.array(values))
    if any(d == "" for d in dates):
        raise DataError("date column is only partially filled")
    _check_increasing(dates)
    return ReturnSeries(np.array(values), tuple(dates))


def write_return_csv(path, r: ReturnSeries, extra: Optional[dict] = None) -> None:
    """Write ``date,return[,extra...]`` with round-trip float formatting."""
    extra = extra or {}
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "return", *extra])
        cols = [np.asarray(v, dtype=float) for v in extra.values()]
        for i, (d, v) in enumerate(zip(r.date_labels(), r.values)):
            w.writerow([d, repr(float(v)), *(repr(float(c[i])) for c in cols)])


def to_log_returns(p: PriceSeries) -> ReturnSeries:
    """Percentage log returns ``100 * (ln P[t+1] - ln P[t])``."""
    if len(p) < 2:
        raise DataError("at least two prices are needed to form a return")
    values = np.diff(np.log(p.closes)) * 100.0
    return ReturnSeries(values, tuple(p.dates[1:]))


def split(r: ReturnSeries, n_in: int) -> WindowSplit:
    n = len(r)
    if not 0 < n_in < n:
        raise DataError(f"in-sample size {n_in} must lie in (0, {n})")
    return WindowSplit(r[:n_in], r[n_in:], n_in)


def rolling_windows(r: ReturnSeries, window: int) -> Iterator[tuple[int, ReturnSeries]]:
    """Yield ``(t, r[t-window:t])`` for every ``t`` in ``window..n-1``."""
    if not 0 < window < len(r):
        raise DataError(f"window {window} must lie in (0, {len(r)})")
    for t in range(window, len(r)):
        yield t, r[t - window:t]
