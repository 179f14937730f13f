"""Confusion matrices and macro classification scores over prediction logs."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from .backtest import BacktestResult
from .forecaster.model import N_CLASSES, N_HOURS
from .walkforward import PredictionLog


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes; ``hour`` None means all hours."""

    counts: np.ndarray
    hour: int | None = None

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def tag(self) -> str:
        return "ALL" if self.hour is None else f"{self.hour:02d}"

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts, self.hour if self.hour == other.hour else None)


@dataclass(frozen=True)
class MetricSummary:
    accuracy: float
    precision: float
    recall: float
    f1: float
    class_precision: tuple[float, ...]
    class_recall: tuple[float, ...]
    class_f1: tuple[float, ...]


def confusion(plog: PredictionLog, hour: int | None = None) -> ConfusionMatrix:
    """Counts of (true class, argmax-predicted class) over the log, optionally one hour."""
    if len(plog) == 0:
        raise ValueError("empty prediction log")
    if hour is not None and not 0 <= hour < N_HOURS:
        raise ValueError(f"hour must be in 0..23, got {hour}")
    truth = plog.true_class
    pred = plog.predicted_class
    if hour is not None:
        truth, pred = truth[:, hour], pred[:, hour]
    m = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(m, (truth.ravel(), pred.ravel()), 1)
    return ConfusionMatrix(m, hour)


def hourly_confusions(plog: PredictionLog) -> list[ConfusionMatrix]:
    return [confusion(plog, h) for h in range(N_HOURS)]


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return out


def precision_at(m: ConfusionMatrix, c: int) -> float:
    col = m.counts[:, c].sum()
    return float(m.counts[c, c] / col) if col > 0 else 0.0


def macro_scores(m: ConfusionMatrix) -> MetricSummary:
    """Accuracy and unweighted per-class averages.

    A class whose precision or recall denominator is zero scores 0 and
    still counts in the average.
    """
    if m.total <= 0:
        raise ValueError("confusion matrix is empty")
    c = m.counts.astype(float)
    tp = np.diag(c)
    prec = _safe_div(tp, c.sum(axis=0))
    rec = _safe_div(tp, c.sum(axis=1))
    f1 = _safe_div(2 * prec * rec, prec + rec)
    return MetricSummary(
        accuracy=float(tp.sum() / c.sum()),
        precision=float(prec.mean()),
        recall=float(rec.mean()),
        f1=float(f1.mean()),
        class_precision=tuple(float(x) for x in prec),
        class_recall=tuple(float(x) for x in rec),
        class_f1=tuple(float(x) for x in f1),
    )


def cumulative_profit_series(result: BacktestResult) -> list[tuple[date, float]]:
    return [(d, float(v)) for d, v in zip(result.dates, np.cumsum(result.daily))]
