"""Model-ready samples from a :class:`MarketDataset`.

Each day becomes one flat vector laid out in a fixed block order::

    [calendar (8) | load (24 x n_load) | solar (24 x n_solar) | wind (24 x n_wind) | spread (24)]

Forecast blocks are zone-major (all 24 hours of zone 1, then zone 2, ...)
and robust-scaled with a median/IQR fit on training days only.  The
spread block holds raw SCED-DAM dollars and is zeroed for days T and T+1,
whose spreads are not known at bid-submission time.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Sequence

import numpy as np

from .calendar_features import CALENDAR_FEATURE_NAMES, N_CALENDAR_FEATURES, day_features, nerc_holidays
from .market_data import HOURS, KINDS, DateRangeError, MarketDataset
from .quantizer import DEFAULT_QUANTIZER, SpreadQuantizer

LAGGINGS = (1, 2, 3)


@dataclass(frozen=True, eq=False)
class ScalerParams:
    """Per-series median and IQR, keyed by series name (e.g. ``"wind:W1"``)."""

    names: tuple[str, ...]
    median: np.ndarray
    iqr: np.ndarray

    def index(self, feature: str) -> int:
        try:
            return self.names.index(feature)
        except ValueError:
            raise ValueError(f"unknown feature {feature!r}") from None

    def __eq__(self, other):
        if not isinstance(other, ScalerParams):
            return NotImplemented
        return (
            self.names == other.names
            and np.array_equal(self.median, other.median)
            and np.array_equal(self.iqr, other.iqr)
        )


def fit_scaler(dataset: MarketDataset, start: date, end: date) -> ScalerParams:
    """Fit median/IQR per forecast series over days ``start..end`` only.

    Quartiles use linear interpolation between order statistics, so
    ``{1, 2, 3, 4, 5}`` gives Q1=2, Q3=4.  A zero IQR is replaced by 1.
    """
    if end < start:
        raise ValueError(f"empty scaler range {start}..{end}")
    i, j = dataset.index_of(start), dataset.index_of(end) + 1
    names, med, iqr = [], [], []
    for s in dataset.forecasts:
        window = s.values[i:j].ravel()
        q1, q2, q3 = np.percentile(window, [25, 50, 75])
        spread = q3 - q1
        names.append(s.name)
        med.append(q2)
        iqr.append(spread if spread > 0 else 1.0)
    return ScalerParams(tuple(names), np.array(med), np.array(iqr))


def apply_scaler(x, params: ScalerParams, feature: str):
    k = params.index(feature)
    return (x - params.median[k]) / params.iqr[k]


def invert_scaler(z, params: ScalerParams, feature: str):
    k = params.index(feature)
    return z * params.iqr[k] + params.median[k]


@dataclass(frozen=True)
class FeatureLayout:
    """Column slices of the per-day feature vector."""

    n_load: int
    n_solar: int
    n_wind: int

    @classmethod
    def for_dataset(cls, dataset: MarketDataset) -> "FeatureLayout":
        c = dataset.zone_counts()
        return cls(c["load"], c["solar"], c["wind"])

    @property
    def width(self) -> int:
        return N_CALENDAR_FEATURES + HOURS * (self.n_load + self.n_solar + self.n_wind + 1)

    def block(self, name: str) -> slice:
        start = N_CALENDAR_FEATURES
        sizes = {"load": self.n_load, "solar": self.n_solar, "wind": self.n_wind}
        if name == "calendar":
            return slice(0, N_CALENDAR_FEATURES)
        for kind in KINDS:
            stop = start + HOURS * sizes[kind]
            if name == kind:
                return slice(start, stop)
            start = stop
        if name == "spread":
            return slice(start, start + HOURS)
        raise KeyError(name)

    def column_names(self, dataset: MarketDataset) -> list[str]:
        cols = list(CALENDAR_FEATURE_NAMES)
        for s in dataset.forecasts:
            cols += [f"{s.name}:h{h:02d}" for h in range(HOURS)]
        return cols + [f"spread:h{h:02d}" for h in range(HOURS)]


@dataclass(frozen=True, eq=False)
class ModelSample:
    """Input window for one target day.

    ``x`` has shape (lagging + 1, D), rows ordered T-lagging+1 ... T+1;
    ``labels`` holds the 24 true classes of ``target_date`` (= T+1).
    """

    x: np.ndarray
    labels: np.ndarray
    target_date: date

    @property
    def lagging(self) -> int:
        return self.x.shape[0] - 1


class FeatureFrame:
    """Unmasked per-day feature vectors for a whole dataset under one scaler.

    Building samples repeatedly through a frame avoids recomputing the
    calendar and scaling work for every window.
    """

    def __init__(
        self,
        dataset: MarketDataset,
        scaler: ScalerParams,
        holidays: Iterable[date] | None = None,
        quantizer: SpreadQuantizer = DEFAULT_QUANTIZER,
    ):
        self.dataset = dataset
        self.scaler = scaler
        self.layout = FeatureLayout.for_dataset(dataset)
        if holidays is None:
            holidays = nerc_holidays(range(dataset.days[0].year, dataset.days[-1].year + 1))
        holidays = frozenset(holidays)
        if tuple(s.name for s in dataset.forecasts) != scaler.names:
            raise ValueError("scaler series do not match dataset forecasts")

        n = dataset.n_days
        rows = np.empty((n, self.layout.width))
        rows[:, self.layout.block("calendar")] = [day_features(d, holidays).as_array() for d in dataset.days]
        col = N_CALENDAR_FEATURES
        for k, s in enumerate(dataset.forecasts):
            rows[:, col : col + HOURS] = (s.values - scaler.median[k]) / scaler.iqr[k]
            col += HOURS
        rows[:, self.layout.block("spread")] = dataset.spread
        self.rows = rows
        self.labels = quantizer.quantize_array(dataset.spread)

    def first_target(self, lagging: int) -> date:
        """Earliest target day with a full input window inside the dataset."""
        return self.dataset.days[0] + timedelta(days=lagging)

    def sample(self, target_date: date, lagging: int) -> ModelSample:
        if lagging not in LAGGINGS:
            raise ValueError(f"lagging must be one of {LAGGINGS}, got {lagging}")
        if not self.dataset.contains(target_date):
            raise DateRangeError(f"target {target_date} outside dataset")
        t1 = self.dataset.index_of(target_date)
        first = t1 - lagging
        if first < 0:
            raise DateRangeError(
                f"target {target_date} needs {lagging} prior days; data starts {self.dataset.days[0]}"
            )
        x = self.rows[first : t1 + 1].copy()
        x[-2:, self.layout.block("spread")] = 0.0
        return ModelSample(x=x, labels=self.labels[t1].copy(), target_date=target_date)

    def samples(self, start: date, end: date, lagging: int, strict: bool = False) -> list[ModelSample]:
        """One sample per target day in ``start..end`` that has enough history.

        With ``strict`` a day lacking history raises instead of being skipped.
        """
        out = []
        day = start
        while day <= end:
            if self.dataset.contains(day) and day >= self.first_target(lagging):
                out.append(self.sample(day, lagging))
            elif strict:
                raise DateRangeError(f"no full input window for target {day}")
            day += timedelta(days=1)
        return out


def build_sample(
    dataset: MarketDataset,
    target_date: date,
    lagging: int,
    scaler: ScalerParams,
    holidays: Iterable[date] | None = None,
) -> ModelSample:
    return FeatureFrame(dataset, scaler, holidays).sample(target_date, lagging)


def build_dataset(
    dataset: MarketDataset,
    start: date,
    end: date,
    lagging: int,
    scaler: ScalerParams,
    holidays: Iterable[date] | None = None,
    strict: bool = False,
) -> list[ModelSample]:
    return FeatureFrame(dataset, scaler, holidays).samples(start, end, lagging, strict=strict)


def stack(samples: Sequence[ModelSample]) -> tuple[np.ndarray, np.ndarray]:
    """Batch samples into ``X`` (B, S, D) and ``Y`` (B, 24)."""
    if not samples:
        raise ValueError("no samples to stack")
    return np.stack([s.x for s in samples]), np.stack([s.labels for s in samples])
