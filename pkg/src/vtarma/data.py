"""
Return-series input: CSV ingestion and price-to-return conversion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from vtarma.errors import DataError

__all__ = ["ReturnSeries", "ingest", "read_series"]


@dataclass(frozen=True)
class ReturnSeries:
    """Dated returns (log-returns times 100 when built from prices)."""

    timestamps: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        if len(self.timestamps) != values.size:
            raise DataError("timestamps and values differ in length")
        bad = ~np.isfinite(values)
        if bad.any():
            raise DataError(f"non-finite value at position {int(np.flatnonzero(bad)[0])}")
        for i in range(1, len(self.timestamps)):
            if not self.timestamps[i] > self.timestamps[i - 1]:
                raise DataError(f"timestamps not strictly increasing at position {i}")

    def __len__(self):
        return self.values.size


def read_series(path):
    """
    Read a ``date,value`` CSV.

    Returns the dates and values; errors name the 1-based file line.
    """
    dates, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [h.strip().lower() for h in header] != ["date", "value"]:
            raise DataError(f"{path}: line 1: expected header 'date,value', got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            date, raw = row[0].strip(), row[1].strip()
            if not date:
                raise DataError(f"{path}: line {lineno}: blank date")
            if not raw:
                raise DataError(f"{path}: line {lineno}: blank value")
            try:
                val = float(raw)
            except ValueError:
                raise DataError(f"{path}: line {lineno}: value {raw!r} is not a number") from None
            if not math.isfinite(val):
                raise DataError(f"{path}: line {lineno}: non-finite value {raw!r}")
            if dates and not date > dates[-1]:
                raise DataError(f"{path}: line {lineno}: date {date!r} does not follow {dates[-1]!r}")
            dates.append(date)
            values.append(val)
    if not values:
        raise DataError(f"{path}: no data rows")
    return dates, np.asarray(values)


def ingest(path, mode="returns"):
    """
    Load a return series from a ``date,value`` CSV.

    ``mode="prices"`` converts prices to ``100 * log(p_t / p_{t-1})`` and drops
    the first date; ``mode="returns"`` passes values through.  Dates are
    compared as strings, so ISO ``YYYY-MM-DD`` labels order correctly.
    """
    dates, values = read_series(path)
    if mode == "returns":
        return ReturnSeries(tuple(dates), values)
    if mode != "prices":
        raise DataError(f"mode must be 'returns' or 'prices', got {mode!r}")
    bad = ~(values > 0.0)
    if bad.any():
        raise DataError(f"{path}: line {int(np.flatnonzero(bad)[0]) + 2}: prices must be positive")
    if values.size < 2:
        raise DataError(f"{path}: need at least two prices")
    return ReturnSeries(tuple(dates[1:]), 100.0 * np.diff(np.log(values)))
