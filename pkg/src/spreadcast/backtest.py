"""Virtual-bidding backtests for strategies T1-T7.

Every bid clears (priced at cap/floor), the bidder is a price taker, each
traded MWh pays a flat uplift, and at most 1 MWh is traded per day, split
evenly over the selected hours.  A trade with direction ``d`` and volume
``v`` earns ``v * (d * (sced - dam) - uplift)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .forecaster.model import N_CLASSES, N_HOURS
from .quantizer import class_direction
from .walkforward import PredictionLog

UPLIFT = 5.0
PEAK_HOUR = 19  # hour-beginning; Hour Ending 20 in ERCOT reporting
PROB_THRESHOLD = 0.5
DAILY_BUDGET_MWH = 1.0

# Small exhaustive grid on which settle is cross-checked against a brute-force
# profit formula.
GRID_SPREADS = tuple(float(s) for s in range(-30, 31))
GRID_DIRECTIONS = (-1, 1)
GRID_VOLUMES = (1.0, 0.5, 0.25)


def settle_grid():
    """Yield every (direction, volume, spread) combination of the check grid."""
    for d in GRID_DIRECTIONS:
        for v in GRID_VOLUMES:
            for s in GRID_SPREADS:
                yield d, v, s


class Strategy(str, Enum):
    T1 = "T1"  #: all hours, predicted class
    T2 = "T2"  #: all hours, predicted class with probability > 0.5
    T3 = "T3"  #: hour 19, predicted class
    T4 = "T4"  #: hour 19, only when predicted class 0
    T5 = "T5"  #: hour 19, predicted class 0 with probability > 0.5
    T6 = "T6"  #: all hours, true class (oracle)
    T7 = "T7"  #: hour 19, true class (oracle)

    @property
    def is_oracle(self) -> bool:
        return self in (Strategy.T6, Strategy.T7)


STRATEGIES = tuple(Strategy)


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class TradeDecision:
    date: date
    hour: int
    direction: int
    volume: float


@dataclass(frozen=True)
class TradeRecord:
    date: date
    hour: int
    direction: int
    volume: float
    realized_spread: float
    net_profit: float


def decide_trades(
    strategy: Strategy | str,
    day: date,
    pred: np.ndarray | None = None,
    truth: Sequence[int] | None = None,
) -> list[TradeDecision]:
    """Trades for one day.

    ``pred`` is the (24, 5) predicted distribution (needed by T1-T5),
    ``truth`` the 24 true classes (needed by T6-T7).
    """
    strategy = Strategy(strategy)
    if strategy.is_oracle:
        if truth is None:
            raise ValueError(f"{strategy.value} needs true classes")
        truth = np.asarray(truth, dtype=np.int64)
        if truth.shape != (N_HOURS,):
            raise ValueError(f"truth must have 24 entries, got shape {truth.shape}")
        hours = range(N_HOURS) if strategy is Strategy.T6 else (PEAK_HOUR,)
        picks = [(h, class_direction(int(truth[h]))) for h in hours]
    else:
        if pred is None:
            raise ValueError(f"{strategy.value} needs predicted probabilities")
        pred = np.asarray(pred, dtype=float)
        if pred.shape != (N_HOURS, N_CLASSES):
            raise ValueError(f"pred must be (24, 5), got {pred.shape}")
        top = pred.argmax(axis=1)
        conf = pred.max(axis=1)
        if strategy in (Strategy.T1, Strategy.T2):
            hours = range(N_HOURS)
        else:
            hours = (PEAK_HOUR,)
        picks = []
        for h in hours:
            c = int(top[h])
            if strategy in (Strategy.T4, Strategy.T5) and c != 0:
                continue
            if strategy in (Strategy.T2, Strategy.T5) and not conf[h] > PROB_THRESHOLD:
                continue
            picks.append((h, class_direction(c)))
    picks = [(h, d) for h, d in picks if d != 0]
    if not picks:
        return []
    volume = DAILY_BUDGET_MWH / len(picks)
    return [TradeDecision(day, h, d, volume) for h, d in picks]


def settle(decisions: Sequence[TradeDecision], spreads, uplift: float = UPLIFT) -> list[TradeRecord]:
    """Fill every decision against the realized hourly spreads (sced - dam).

    ``spreads`` is indexable by hour: a length-24 array or a ``{hour: spread}``
    mapping.  A missing or non-finite spread for a traded hour is a
    :class:`DataError`.
    """
    out = []
    for d in decisions:
        try:
            s = float(spreads[d.hour])
        except (KeyError, IndexError):
            raise DataError(f"no realized spread for {d.date} hour {d.hour}") from None
        if not math.isfinite(s):
            raise DataError(f"no realized spread for {d.date} hour {d.hour}")
        out.append(TradeRecord(d.date, d.hour, d.direction, d.volume, s, d.volume * (d.direction * s - uplift)))
    return out


@dataclass
class BacktestResult:
    strategy: Strategy
    label: str
    dates: tuple[date, ...]
    daily: np.ndarray
    trades: list[TradeRecord] = field(default_factory=list)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.daily)

    @property
    def total(self) -> float:
        return float(self.cumulative[-1]) if len(self.daily) else 0.0


def run_backtest(
    strategy: Strategy | str,
    plog: PredictionLog,
    uplift: float = UPLIFT,
    actuals: np.ndarray | None = None,
) -> BacktestResult:
    """Decide, settle and accumulate day by day over a contiguous log.

    ``actuals`` overrides the realized spreads stored in the log, shape
    (n_days, 24).
    """
    strategy = Strategy(strategy)
    for a, b in zip(plog.dates, plog.dates[1:]):
        if b - a != timedelta(days=1):
            raise DataError(f"prediction log is not contiguous at {a} -> {b}")
    spreads = plog.true_spread if actuals is None else np.asarray(actuals, dtype=float)
    if spreads.shape != (len(plog), N_HOURS):
        raise DataError(f"actuals shape {spreads.shape} != {(len(plog), N_HOURS)}")
    daily = np.zeros(len(plog))
    trades: list[TradeRecord] = []
    for i, day in enumerate(plog.dates):
        decisions = decide_trades(strategy, day, pred=plog.probs[i], truth=plog.true_class[i])
        records = settle(decisions, spreads[i], uplift)
        daily[i] = sum(r.net_profit for r in records)
        trades.extend(records)
    return BacktestResult(strategy, plog.label, plog.dates, daily, trades)


PROFIT_HEADER = ["strategy", "date", "daily_profit", "cumulative_profit"]
BLOTTER_HEADER = ["strategy", "date", "hour", "direction", "volume", "realized_spread", "net_profit"]


def write_profit_csv(results: Sequence[BacktestResult], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFIT_HEADER)
        for r in results:
            for day, dp, cp in zip(r.dates, r.daily, r.cumulative):
                w.writerow([r.strategy.value, day.isoformat(), f"{dp:.6f}", f"{cp:.6f}"])
    return path


def write_blotter_csv(results: Sequence[BacktestResult], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BLOTTER_HEADER)
        for r in results:
            for t in r.trades:
                w.writerow(
                    [r.strategy.value, t.date.isoformat(), t.hour, t.direction,
                     f"{t.volume:.6f}", f"{t.realized_spread:.6f}", f"{t.net_profit:.6f}"]
                )  # fmt: skip
    return path
