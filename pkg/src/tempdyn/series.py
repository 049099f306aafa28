"""Aligned daily temperature series with calendar features.

AVG = (MAX + MIN)/2 and DTR = MAX - MIN, built over a contiguous daily
window together with the 1-based time trend t and per-day month index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Sequence

import numpy as np

from .ghcn import DailyObservation

VARIABLES = ("avg", "dtr")


class ContiguityError(ValueError):
    """Observation dates do not form one unbroken daily run over the window."""


class DataInversionError(ValueError):
    """tmax < tmin survived ingest-level repair."""

    def __init__(self, dates: Sequence[date]):
        super().__init__(
            "max below min on: " + ", ".join(d.isoformat() for d in dates)
        )
        self.dates = list(dates)


@dataclass(frozen=True)
class TemperatureSeries:
    """Immutable aligned daily record. Arrays are read-only once built.

    ``avg`` holds exact half-degree values (integer inputs make (max+min)/2
    representable without rounding); ``t`` runs 1..T.
    """

    dates: tuple[date, ...]
    max_f: np.ndarray
    min_f: np.ndarray
    avg: np.ndarray
    dtr: np.ndarray
    t: np.ndarray
    month: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)

    def variable(self, name: str) -> np.ndarray:
        """Regressand accessor: 'avg' or 'dtr', as float64."""
        if name not in VARIABLES:
            raise ValueError(f"unknown variable {name!r}; expected one of {VARIABLES}")
        return self.avg if name == "avg" else self.dtr

    def position_of(self, when: date) -> int:
        """0-based index of a calendar date (t value is position + 1)."""
        offset = (when - self.dates[0]).days
        if not 0 <= offset < len(self.dates):
            raise ValueError(f"{when} outside series window")
        return offset


def build_series(
    observations: Sequence[DailyObservation], start: date, end: date
) -> TemperatureSeries:
    """Construct the aligned series, checking contiguity and max >= min."""
    if start > end:
        raise ValueError("window start is after window end")
    expected = (end - start).days + 1
    if len(observations) != expected:
        raise ContiguityError(
            f"window {start}..{end} spans {expected} days, got "
            f"{len(observations)} observations"
        )
    dates = []
    for i, obs in enumerate(observations):
        wanted = start + timedelta(days=i)
        if obs.date != wanted:
            raise ContiguityError(f"expected {wanted} at position {i}, got {obs.date}")
        if obs.tmax_f is None or obs.tmin_f is None:
            raise ContiguityError(f"missing temperature on {obs.date}")
        dates.append(obs.date)

    max_f = np.array([o.tmax_f for o in observations], dtype=np.int64)
    min_f = np.array([o.tmin_f for o in observations], dtype=np.int64)
    inverted = max_f < min_f
    if inverted.any():
        raise DataInversionError([d for d, bad in zip(dates, inverted) if bad])

    avg = (max_f + min_f) / 2.0
    dtr = (max_f - min_f).astype(np.float64)
    t = np.arange(1, expected + 1, dtype=np.int64)
    month = np.array([d.month for d in dates], dtype=np.int64)
    for array in (max_f, min_f, avg, dtr, t, month):
        array.setflags(write=False)
    return TemperatureSeries(tuple(dates), max_f, min_f, avg, dtr, t, month)


def month_dummies(series: TemperatureSeries) -> np.ndarray:
    """(T, 12) indicator matrix; column i-1 marks days falling in month i.

    Each row sums to exactly 1 (one month per day); Feb 29 belongs to the
    February column.
    """
    if len(series) == 0:
        raise ValueError("series is empty")
    dummies = np.zeros((len(series), 12), dtype=np.float64)
    dummies[np.arange(len(series)), series.month - 1] = 1.0
    dummies.setflags(write=False)
    return dummies


SERIES_CSV_HEADER = ["date", "tmax", "tmin", "avg", "dtr", "t", "month"]


def write_series_csv(series: TemperatureSeries, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SERIES_CSV_HEADER)
        for i, when in enumerate(series.dates):
            writer.writerow(
                [
                    when.isoformat(),
                    int(series.max_f[i]),
                    int(series.min_f[i]),
                    _format_half(series.avg[i]),
                    int(series.dtr[i]),
                    int(series.t[i]),
                    int(series.month[i]),
                ]
            )


def read_series_csv(path) -> TemperatureSeries:
    """Load a series written by :func:`write_series_csv`.

    The series is rebuilt from tmax/tmin so every construction invariant is
    re-checked; stored avg/dtr columns are verified against the rebuild.
    """
    observations = []
    stored_avg = []
    stored_dtr = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != SERIES_CSV_HEADER:
            raise ValueError(f"unexpected series CSV header in {path}: {header}")
        for row in reader:
            when = date.fromisoformat(row[0])
            observations.append(DailyObservation(when, int(row[1]), int(row[2])))
            stored_avg.append(float(row[3]))
            stored_dtr.append(float(row[4]))
    if not observations:
        raise ValueError(f"series CSV {path} has no rows")
    series = build_series(observations, observations[0].date, observations[-1].date)
    if not np.array_equal(series.avg, np.array(stored_avg)) or not np.array_equal(
        series.dtr, np.array(stored_dtr)
    ):
        raise ValueError(f"series CSV {path} is internally inconsistent")
    return series


def _format_half(value: float) -> str:
    # exact halves only: render 60.0 as "60" and 60.5 as "60.5"
    if value == int(value):
        return str(int(value))
    return f"{value:.1f}"
