"""Shared helpers: deterministic synthetic GHCN `.dly` content."""

from __future__ import annotations

import calendar
import math
import random
from datetime import date

import pytest

DAY_SLOTS = 31
MISSING = -9999

FUZZ_ELEMENTS = ["TMAX", "TMIN", "PRCP", "SNOW", "TAVG"]
FUZZ_FLAG_CHARS = " ABDGIKLMNOPRSTWXZ0123456789"


def make_dly_line(
    station_id: str,
    year: int,
    month: int,
    element: str,
    day_values: dict[int, int],
    day_flags: dict[int, tuple[str, str, str]] | None = None,
) -> str:
    """Render one 269-character line; absent days carry the -9999 sentinel."""
    parts = [f"{station_id:<11.11}", f"{year:04d}", f"{month:02d}", f"{element:<4.4}"]
    for day in range(1, DAY_SLOTS + 1):
        value = day_values.get(day, MISSING)
        mflag, qflag, sflag = (day_flags or {}).get(day, (" ", " ", " "))
        parts.append(f"{value:5d}{mflag}{qflag}{sflag}")
    line = "".join(parts)
    assert len(line) == 269
    return line


def _months_between(start: date, end: date):
    year, month = start.year, start.month
    while (year, month) <= (end.year, end.month):
        yield year, month
        month += 1
        if month == 13:
            month = 1
            year += 1


def pseudo_noise(day: date, salt: int = 0) -> float:
    """Deterministic noise in [-0.5, 0.5) keyed on the calendar date."""
    state = (day.toordinal() * 2654435761 + salt * 97531) % (2**32)
    return state / 2**32 - 0.5


def tmax_tenths_c(day: date) -> int:
    angle = 2.0 * math.pi * (day.timetuple().tm_yday - 110) / 365.25
    return int(round(160 + 115 * math.sin(angle) + 60 * pseudo_noise(day, 1)))


def tmin_tenths_c(day: date) -> int:
    angle = 2.0 * math.pi * (day.timetuple().tm_yday - 110) / 365.25
    return int(round(60 + 95 * math.sin(angle) + 60 * pseudo_noise(day, 2)))


def synthetic_station_bytes(
    station_id: str,
    start: date,
    end: date,
    skip: set[tuple[date, str]] = frozenset(),
    qflagged: set[tuple[date, str]] = frozenset(),
) -> bytes:
    """A complete TMAX/TMIN `.dly` payload over [start, end].

    ``skip`` holes specific (date, element) values; ``qflagged`` marks values
    with a failing quality flag.
    """
    generators = {"TMAX": tmax_tenths_c, "TMIN": tmin_tenths_c}
    lines = []
    for year, month in _months_between(start, end):
        n_days = calendar.monthrange(year, month)[1]
        for element, generator in generators.items():
            values: dict[int, int] = {}
            flags: dict[int, tuple[str, str, str]] = {}
            for day_number in range(1, n_days + 1):
                day = date(year, month, day_number)
                if day < start or day > end or (day, element) in skip:
                    continue
                values[day_number] = generator(day)
                if (day, element) in qflagged:
                    flags[day_number] = (" ", "X", " ")
            lines.append(make_dly_line(station_id, year, month, element, values, flags))
    return ("\n".join(lines) + "\n").encode("ascii")


def random_valid_line(rng: random.Random) -> str:
    """One well-formed 269-character line with random content."""
    station = "".join(
        rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789") for _ in range(11)
    )
    year = rng.randint(1800, 2100)
    month = rng.randint(1, 12)
    element = rng.choice(FUZZ_ELEMENTS)
    values = {}
    flags = {}
    for day in range(1, DAY_SLOTS + 1):
        if rng.random() < 0.2:
            continue  # leave the sentinel
        values[day] = rng.randint(-1500, 1500)
        flags[day] = tuple(rng.choice(FUZZ_FLAG_CHARS) for _ in range(3))
    return make_dly_line(station, year, month, element, values, flags)


# January 1960 TMAX values (tenths of deg C) for the hand-built archive line
FIXTURE_TENTHS = [
    33, -17, -44, -6, 22, 44, 61, 28, -11, 0,
    17, 39, 56, 72, 44, 11, -22, -33, 6, 28,
    50, 67, 83, 61, 33, 17, 39, 56, 78, 94, 100,
]


def fixture_line() -> str:
    """Assemble the fixture line column-by-column from the offset table."""
    groups = [f"{value:5d}" + " " + " " + "0" for value in FIXTURE_TENTHS]
    line = "USW00013739" + "1960" + "01" + "TMAX" + "".join(groups)
    assert len(line) == 269
    return line


@pytest.fixture
def two_year_window() -> tuple[date, date]:
    return date(1960, 1, 1), date(1961, 12, 31)


@pytest.fixture
def two_year_payload(two_year_window) -> bytes:
    start, end = two_year_window
    return synthetic_station_bytes("USW00099901", start, end)
