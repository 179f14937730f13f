"""Hourly market data: CSV ingestion, validation, slicing and a synthetic generator.

A dataset is a contiguous run of calendar days on a fixed 24-slot
hour-beginning grid.  Prices (DAM and SCED system lambda) and every zonal
forecast series share that grid exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

HOURS = 24
KINDS = ("load", "solar", "wind")

PRICE_HEADER = ["date", "hour", "dam_price", "sced_price"]
FORECAST_HEADER = ["date", "hour", "kind", "zone", "mw"]


class MarketDataError(ValueError):
    """Base class for dataset problems."""


class ParseError(MarketDataError):
    """A CSV row could not be parsed; carries the file and line number."""

    def __init__(self, path, line: int, reason: str):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


class AlignmentError(MarketDataError):
    """A series is missing a (date, hour) cell inside the dataset span."""

    def __init__(self, series: str, day: date, hour: int):
        self.series = series
        self.day = day
        self.hour = hour
        super().__init__(f"series {series!r} is missing cell ({day.isoformat()}, hour {hour})")


class DateRangeError(MarketDataError):
    """A requested day range falls outside the available data."""


@dataclass(frozen=True)
class HourlyMarketRecord:
    date: date
    hour: int
    dam_price: float
    sced_price: float

    @property
    def spread(self) -> float:
        return self.sced_price - self.dam_price


@dataclass(frozen=True, eq=False)
class ZoneForecastSeries:
    """One zonal forecast series; ``values[i, h]`` is MW for day ``i``, hour ``h``."""

    kind: str
    zone: str
    values: np.ndarray

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.zone}"

    def __eq__(self, other):
        if not isinstance(other, ZoneForecastSeries):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.zone == other.zone
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class MarketDataset:
    """Aligned prices and forecasts over contiguous days.

    Arrays are indexed ``[day_index, hour]``.  Instances are treated as
    immutable; all arrays are made read-only on construction.
    """

    days: tuple[date, ...]
    dam: np.ndarray
    sced: np.ndarray
    forecasts: tuple[ZoneForecastSeries, ...] = field(default_factory=tuple)

    def __post_init__(self):
        n = len(self.days)
        if n == 0:
            raise MarketDataError("dataset has no days")
        for prev, cur in zip(self.days, self.days[1:]):
            if cur - prev != timedelta(days=1):
                raise MarketDataError(f"days are not contiguous at {prev} -> {cur}")
        arrays = [self.dam, self.sced] + [s.values for s in self.forecasts]
        for arr in arrays:
            if arr.shape != (n, HOURS):
                raise MarketDataError(f"array shape {arr.shape} != {(n, HOURS)}")
            if not np.all(np.isfinite(arr)):
                raise MarketDataError("non-finite value in dataset")
            arr.setflags(write=False)

    @property
    def n_days(self) -> int:
        return len(self.days)

    @property
    def date_range(self) -> tuple[date, date]:
        return self.days[0], self.days[-1]

    @property
    def spread(self) -> np.ndarray:
        """Realized SCED minus DAM spread, shape (n_days, 24)."""
        return self.sced - self.dam

    def index_of(self, day: date) -> int:
        idx = (day - self.days[0]).days
        if not 0 <= idx < len(self.days):
            raise DateRangeError(f"{day} outside dataset range {self.days[0]}..{self.days[-1]}")
        return idx

    def contains(self, day: date) -> bool:
        return self.days[0] <= day <= self.days[-1]

    def series(self, kind: str) -> list[ZoneForecastSeries]:
        return [s for s in self.forecasts if s.kind == kind]

    def zone_counts(self) -> dict[str, int]:
        return {k: len(self.series(k)) for k in KINDS}

    @property
    def records(self) -> Iterator[HourlyMarketRecord]:
        for i, day in enumerate(self.days):
            for h in range(HOURS):
                yield HourlyMarketRecord(day, h, float(self.dam[i, h]), float(self.sced[i, h]))

    def __eq__(self, other):
        if not isinstance(other, MarketDataset):
            return NotImplemented
        return (
            self.days == other.days
            and np.array_equal(self.dam, other.dam)
            and np.array_equal(self.sced, other.sced)
            and self.forecasts == other.forecasts
        )


def date_span(start: date, end: date) -> list[date]:
    return [start + timedelta(days=k) for k in range((end - start).days + 1)]


# --------------------------------------------------------------------------
# CSV ingestion
# --------------------------------------------------------------------------


def _parse_date(text: str, path, line: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(path, line, f"bad date {text!r}") from None


def _parse_hour(text: str, path, line: int) -> int:
    try:
        hour = int(text.strip())
    except ValueError:
        raise ParseError(path, line, f"bad hour {text!r}") from None
    if not 0 <= hour < HOURS:
        raise ParseError(path, line, f"hour {hour} outside 0-23")
    return hour


def _parse_float(text: str, what: str, path, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line, f"bad {what} {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"non-finite {what} {text!r}")
    return value


def _rows(path, header: list[str]):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise ParseError(path, 1, f"expected header {','.join(header)}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(path, reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, row


def _read_prices(path) -> dict[tuple[date, int], tuple[float, float]]:
    cells = {}
    for line, row in _rows(path, PRICE_HEADER):
        key = (_parse_date(row[0], path, line), _parse_hour(row[1], path, line))
        dam = _parse_float(row[2], "dam_price", path, line)
        sced = _parse_float(row[3], "sced_price", path, line)
        if key in cells:
            raise ParseError(path, line, f"duplicate cell {key[0]} hour {key[1]}")
        cells[key] = (dam, sced)
    return cells


def _read_forecasts(path, into: dict[tuple[str, str], dict]) -> None:
    for line, row in _rows(path, FORECAST_HEADER):
        key = (_parse_date(row[0], path, line), _parse_hour(row[1], path, line))
        kind = row[2].strip()
        zone = row[3].strip()
        if kind not in KINDS:
            raise ParseError(path, line, f"unknown kind {kind!r}")
        if not zone:
            raise ParseError(path, line, "empty zone name")
        mw = _parse_float(row[4], "mw", path, line)
        if kind == "load" and mw <= 0:
            raise ParseError(path, line, f"load must be > 0, got {mw}")
        if mw < 0:
            raise ParseError(path, line, f"{kind} must be >= 0, got {mw}")
        cells = into.setdefault((kind, zone), {})
        if key in cells:
            raise ParseError(path, line, f"duplicate cell {kind}:{zone} {key[0]} hour {key[1]}")
        cells[key] = mw


def _complete_days(cells: dict) -> set[date]:
    counts: dict[date, int] = {}
    for day, _ in cells:
        counts[day] = counts.get(day, 0) + 1
    return {d for d, c in counts.items() if c == HOURS}


def load_dataset(price_path, forecast_paths: Sequence = ()) -> MarketDataset:
    """Read and validate a dataset from the price CSV and forecast CSVs.

    The span is the maximal run of days from the first to the last day on
    which every series is complete; partial leading or trailing days are
    dropped.  Any gap inside that span raises :class:`AlignmentError`.
    """
    prices = _read_prices(price_path)
    raw: dict[tuple[str, str], dict] = {}
    for path in forecast_paths:
        _read_forecasts(path, raw)

    keys = sorted(raw, key=lambda k: KINDS.index(k[0]))  # stable: keeps first-seen zone order
    named = [("prices", prices)] + [(f"{k}:{z}", raw[(k, z)]) for k, z in keys]

    common = None
    for _, cells in named:
        complete = _complete_days(cells)
        common = complete if common is None else common & complete
    if not common:
        raise AlignmentError("prices", min(d for d, _ in prices) if prices else date.min, 0)

    days = date_span(min(common), max(common))
    for name, cells in named:
        for day in days:
            for h in range(HOURS):
                if (day, h) not in cells:
                    raise AlignmentError(name, day, h)

    def grid(cells, pick=lambda v: v):
        return np.array([[pick(cells[(d, h)]) for h in range(HOURS)] for d in days], dtype=float)

    return MarketDataset(
        days=tuple(days),
        dam=grid(prices, lambda v: v[0]),
        sced=grid(prices, lambda v: v[1]),
        forecasts=tuple(ZoneForecastSeries(k, z, grid(raw[(k, z)])) for k, z in keys),
    )


def write_dataset(dataset: MarketDataset, directory) -> tuple[Path, Path]:
    """Write ``prices.csv`` and ``forecasts.csv`` with 6-decimal numbers."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    price_path = directory / "prices.csv"
    forecast_path = directory / "forecasts.csv"
    with open(price_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_HEADER)
        for i, day in enumerate(dataset.days):
            iso = day.isoformat()
            for h in range(HOURS):
                w.writerow([iso, h, f"{dataset.dam[i, h]:.6f}", f"{dataset.sced[i, h]:.6f}"])
    with open(forecast_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FORECAST_HEADER)
        for s in dataset.forecasts:
            for i, day in enumerate(dataset.days):
                iso = day.isoformat()
                for h in range(HOURS):
                    w.writerow([iso, h, s.kind, s.zone, f"{s.values[i, h]:.6f}"])
    return price_path, forecast_path


def slice_days(dataset: MarketDataset, start: date, end: date) -> MarketDataset:
    """Return the sub-dataset covering ``start..end`` inclusive."""
    if end < start:
        raise DateRangeError(f"end {end} precedes start {start}")
    if not (dataset.contains(start) and dataset.contains(end)):
        raise DateRangeError(
            f"{start}..{end} not within {dataset.days[0]}..{dataset.days[-1]}"
        )
    i, j = dataset.index_of(start), dataset.index_of(end) + 1
    return MarketDataset(
        days=dataset.days[i:j],
        dam=dataset.dam[i:j].copy(),
        sced=dataset.sced[i:j].copy(),
        forecasts=tuple(ZoneForecastSeries(s.kind, s.zone, s.values[i:j].copy()) for s in dataset.forecasts),
    )


# --------------------------------------------------------------------------
# Synthetic generator
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    n_days: int = 420
    n_load_zones: int = 3
    n_solar_zones: int = 2
    n_wind_zones: int = 2
    seed: int = 0
    volatility: float = 1.0
    start: date = date(2023, 1, 1)

    def __post_init__(self):
        if self.n_days < 40:
            raise ValueError(f"n_days must be >= 40, got {self.n_days}")
        for name in ("n_load_zones", "n_solar_zones", "n_wind_zones"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.volatility > 0:
            raise ValueError("volatility must be > 0")


def generate_synthetic(config: SynthConfig = SynthConfig()) -> MarketDataset:
    """Generate a plausible dataset with learnable spread structure.

    Load follows seasonal and diurnal cycles with weekend dips; solar is a
    daylight bell (zero outside 06:00-19:00) with a growth trend and daily
    cloudiness; wind is a persistent daily regime with a night-time bulge.
    The spread is heavy-tailed noise plus two regimes tied to the forecasts:
    evening (17-20) crashes more likely on windy, low-net-load days, and
    scarcity spikes on high-net-load afternoons (13-17).  All values are rounded to
    6 decimals so that a CSV round trip is exact.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_days
    days = date_span(config.start, config.start + timedelta(days=n - 1))
    hours = np.arange(HOURS)
    t = np.arange(n)
    doy = np.array([d.timetuple().tm_yday for d in days])
    weekend = np.array([d.weekday() >= 5 for d in days])

    # load: summer peak, afternoon peak
    phase = 2 * np.pi * (doy - 200) / 365.25
    season = 1.0 + 0.15 * np.cos(phase) + 0.08 * np.cos(2 * phase)
    diurnal = 1.0 + 0.18 * np.sin(2 * np.pi * (hours - 11) / 24) + 0.06 * np.sin(4 * np.pi * (hours - 5) / 24)
    day_level = season * np.where(weekend, 0.93, 1.0) * (1 + 0.04 * rng.standard_normal(n))
    loads = []
    for z in range(config.n_load_zones):
        base = 4000.0 + 2500.0 * rng.random()
        noise = 1 + 0.02 * rng.standard_normal((n, HOURS))
        loads.append(base * day_level[:, None] * diurnal[None, :] * noise)

    # solar: bell between 06:00 and 19:00, zero otherwise
    bell = np.where((hours >= 6) & (hours <= 19), np.sin(np.pi * (hours - 5.5) / 14.0), 0.0)
    bell = np.clip(bell, 0.0, None)
    sun_season = 0.75 + 0.25 * np.cos(2 * np.pi * (doy - 172) / 365.25)
    growth = 1.0 + 0.35 * t / 365.0
    clouds = np.clip(rng.beta(5, 2, size=n), 0.05, 1.0)
    solars = []
    for z in range(config.n_solar_zones):
        cap = 1500.0 + 1500.0 * rng.random()
        local = np.clip(clouds + 0.1 * rng.standard_normal(n), 0.02, 1.0)
        solars.append(cap * (sun_season * growth * local)[:, None] * bell[None, :])

    # wind: AR(1) daily regime in (0, 1), stronger at night
    z_wind = np.empty(n)
    z_wind[0] = rng.standard_normal()
    for k in range(1, n):
        z_wind[k] = 0.7 * z_wind[k - 1] + np.sqrt(1 - 0.49) * rng.standard_normal()
    wind_level = 1 / (1 + np.exp(-1.2 * z_wind))
    wind_shape = 1.0 + 0.3 * np.cos(2 * np.pi * (hours - 2) / 24)
    winds = []
    for z in range(config.n_wind_zones):
        cap = 2500.0 + 2000.0 * rng.random()
        local = np.clip(wind_level[:, None] * (1 + 0.08 * rng.standard_normal((n, HOURS))), 0.01, None)
        winds.append(cap * local * wind_shape[None, :])

    load_tot = sum(loads)
    net = load_tot - sum(solars) - sum(winds)
    net_z = (net - net.mean()) / net.std()

    dam = 28.0 + 9.0 * net_z + 1.5 * rng.standard_normal((n, HOURS))

    vol = config.volatility
    spread = vol * 2.3 * rng.standard_t(3, size=(n, HOURS))
    # evening crash regime: windier, lower-net-load days crash more often
    evening = (hours >= 17) & (hours <= 20)
    peak_weight = np.where(hours == 19, 1.0, np.where(evening, 0.55, 0.0))
    crash_logit = -0.9 + 2.2 * (wind_level - 0.5) * 2 - 0.8 * net_z[:, 19]
    p_crash = 1 / (1 + np.exp(-crash_logit))
    crash_day = rng.random(n) < p_crash
    crash_size = 10.0 + rng.exponential(14.0, size=n)
    spread -= vol * (crash_day * crash_size)[:, None] * peak_weight[None, :] * (0.8 + 0.4 * rng.random((n, HOURS)))
    # scarcity regime: high net-load afternoons (13-17) spike up
    p_spike = 1 / (1 + np.exp(-(2.5 * (net_z - 1.6))))
    spike = rng.random((n, HOURS)) < p_spike * ((hours >= 13) & (hours <= 17))[None, :]
    spread += vol * spike * (8.0 + rng.exponential(25.0, size=(n, HOURS)))

    sced = dam + spread

    def r6(a):
        return np.round(a, 6)

    forecasts = (
        [ZoneForecastSeries("load", f"L{z + 1}", r6(a)) for z, a in enumerate(loads)]
        + [ZoneForecastSeries("solar", f"S{z + 1}", r6(a)) for z, a in enumerate(solars)]
        + [ZoneForecastSeries("wind", f"W{z + 1}", r6(a)) for z, a in enumerate(winds)]
    )
    return MarketDataset(days=tuple(days), dam=r6(dam), sced=r6(sced), forecasts=tuple(forecasts))
