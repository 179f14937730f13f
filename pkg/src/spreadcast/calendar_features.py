"""Per-day time-information features: holiday flag, year trend, cyclical encodings."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable

import numpy as np

BASE_YEAR = 2023
N_CALENDAR_FEATURES = 8
CALENDAR_FEATURE_NAMES = (
    "holiday_flag",
    "year_scaled",
    "month_sin",
    "month_cos",
    "dom_sin",
    "dom_cos",
    "dow_sin",
    "dow_cos",
)


@dataclass(frozen=True)
class CalendarFeatures:
    holiday_flag: int
    year_scaled: float
    month_sin: float
    month_cos: float
    dom_sin: float
    dom_cos: float
    dow_sin: float
    dow_cos: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


def cyclical_encode(value: int, period: int) -> tuple[float, float]:
    """Map ``value`` onto the unit circle with the given period."""
    if period <= 0:
        raise ValueError(f"period must be >= 1, got {period}")
    angle = 2.0 * math.pi * value / period
    return math.sin(angle), math.cos(angle)


def _observed(d: date) -> date:
    # NERC convention: a Sunday holiday is observed on Monday; Saturday stays.
    return d + timedelta(days=1) if d.weekday() == 6 else d


def _nth_weekday(year: int, month: int, weekday: int, n: int) -> date:
    first = date(year, month, 1)
    offset = (weekday - first.weekday()) % 7
    return first + timedelta(days=offset + 7 * (n - 1))


def _last_weekday(year: int, month: int, weekday: int) -> date:
    nxt = date(year + (month == 12), month % 12 + 1, 1)
    last = nxt - timedelta(days=1)
    return last - timedelta(days=(last.weekday() - weekday) % 7)


def nerc_holidays(years: Iterable[int]) -> frozenset[date]:
    """The six NERC holidays (observed dates) for each year."""
    out = set()
    for y in years:
        out.add(_observed(date(y, 1, 1)))
        out.add(_last_weekday(y, 5, 0))  # Memorial Day
        out.add(_observed(date(y, 7, 4)))
        out.add(_nth_weekday(y, 9, 0, 1))  # Labor Day
        out.add(_nth_weekday(y, 11, 3, 4))  # Thanksgiving
        out.add(_observed(date(y, 12, 25)))
    return frozenset(out)


def load_holidays(path) -> frozenset[date]:
    """Read a holidays file with one ISO-8601 date per line (``#`` comments allowed)."""
    days = set()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        try:
            days.add(date.fromisoformat(text))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad date {text!r}") from None
    return frozenset(days)


def day_features(day: date, holidays: Iterable[date] | None = None) -> CalendarFeatures:
    """Encode one calendar day.

    Month uses period 12 on the month index 1-12, day-of-month period 31,
    day-of-week period 7 with Monday=0.  ``holidays=None`` means the NERC
    calendar for the day's year.
    """
    if holidays is None:
        holidays = nerc_holidays([day.year])
    m_sin, m_cos = cyclical_encode(day.month, 12)
    d_sin, d_cos = cyclical_encode(day.day, 31)
    w_sin, w_cos = cyclical_encode(day.weekday(), 7)
    return CalendarFeatures(
        holiday_flag=int(day in holidays),
        year_scaled=float(day.year - BASE_YEAR),
        month_sin=m_sin,
        month_cos=m_cos,
        dom_sin=d_sin,
        dom_cos=d_cos,
        dow_sin=w_sin,
        dow_cos=w_cos,
    )
