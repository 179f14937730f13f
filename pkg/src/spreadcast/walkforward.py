"""Weekly walk-forward retraining with a one-day gap before each test week.

Step ``k`` of a plan::

    train ... train_end+7k | val (7 days) | gap (1 day) | test (7 days)

The gap exists because a model trained on data through the validation end
can only be deployed for the day after it is trained.  Hyperparameters are
searched once per training setting on the step-0 windows and reused for
every week.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .features import LAGGINGS, FeatureFrame, fit_scaler
from .forecaster import ModelConfig, ModelParams, TrainConfig, TrainHistory, init_model, predict_proba, train
from .forecaster.model import N_CLASSES, N_HOURS
from .market_data import DateRangeError, MarketDataset, slice_days
from .quantizer import DEFAULT_QUANTIZER, SpreadQuantizer

log = logging.getLogger(__name__)

STRIDE = 7
VAL_DAYS = 7
TEST_DAYS = 7


class PlanError(ValueError):
    pass


class TrainWindowTruncated(UserWarning):
    """Requested training window is longer than the available history."""


@dataclass(frozen=True)
class DayRange:
    start: date
    end: date

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"empty day range {self.start}..{self.end}")

    def __len__(self) -> int:
        return (self.end - self.start).days + 1

    def __contains__(self, day: date) -> bool:
        return self.start <= day <= self.end

    def __iter__(self) -> Iterator[date]:
        for k in range(len(self)):
            yield self.start + timedelta(days=k)

    def __str__(self) -> str:
        return f"{self.start}..{self.end}"


@dataclass(frozen=True)
class TrainingSetting:
    label: str
    lagging: int
    train_window: int | None  # None: all history
    finetune: bool

    def __post_init__(self):
        if self.lagging not in LAGGINGS:
            raise ValueError(f"lagging must be one of {LAGGINGS}")
        if self.train_window is not None and self.train_window < 1:
            raise ValueError("train_window must be >= 1 or None")

    @property
    def window_label(self) -> str:
        return "All" if self.train_window is None else str(self.train_window)


SETTINGS: dict[str, TrainingSetting] = {
    s.label: s
    for s in (
        TrainingSetting("A", 1, 90, False),
        TrainingSetting("B", 2, 90, False),
        TrainingSetting("C", 3, 90, False),
        TrainingSetting("D", 1, 180, False),
        TrainingSetting("E", 1, 360, False),
        TrainingSetting("F", 1, None, False),
        TrainingSetting("G", 1, 90, True),
    )
}


@dataclass(frozen=True)
class PlanStep:
    index: int
    train: DayRange  # all available history up to the train end
    val: DayRange
    gap: date
    test: DayRange


@dataclass(frozen=True)
class WalkForwardPlan:
    steps: tuple[PlanStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i) -> PlanStep:
        return self.steps[i]

    @property
    def test_period(self) -> DayRange:
        return DayRange(self.steps[0].test.start, self.steps[-1].test.end)


def make_plan(
    dataset_range: tuple[date, date],
    initial_train_end: date,
    test_start: date,
    test_end: date,
) -> WalkForwardPlan:
    first, last = dataset_range
    expected_start = initial_train_end + timedelta(days=VAL_DAYS + 2)
    if test_start != expected_start:
        raise PlanError(
            f"test_start {test_start} must be {expected_start} "
            f"(train end + {VAL_DAYS} validation days + 1 gap day)"
        )
    if test_end < test_start:
        raise PlanError(f"test_end {test_end} precedes test_start {test_start}")
    if initial_train_end < first:
        raise PlanError(f"initial_train_end {initial_train_end} precedes dataset start {first}")
    if test_end > last:
        raise PlanError(f"test_end {test_end} beyond dataset end {last}")

    steps = []
    k = 0
    while True:
        shift = timedelta(days=STRIDE * k)
        train_end = initial_train_end + shift
        t0 = test_start + shift
        if t0 > test_end:
            break
        steps.append(
            PlanStep(
                index=k,
                train=DayRange(first, train_end),
                val=DayRange(train_end + timedelta(days=1), train_end + timedelta(days=VAL_DAYS)),
                gap=train_end + timedelta(days=VAL_DAYS + 1),
                test=DayRange(t0, min(t0 + timedelta(days=TEST_DAYS - 1), test_end)),
            )
        )
        k += 1
    return WalkForwardPlan(tuple(steps))


def resolve_train_range(step: PlanStep, setting: TrainingSetting) -> DayRange:
    """Training days for one step under a setting's window size.

    A window longer than the available history is truncated to it with a
    :class:`TrainWindowTruncated` warning.
    """
    if setting.train_window is None:
        return step.train
    if setting.train_window > len(step.train):
        warnings.warn(
            f"setting {setting.label}: window {setting.train_window} days exceeds "
            f"{len(step.train)} available at step {step.index}; truncating",
            TrainWindowTruncated,
            stacklevel=2,
        )
        return step.train
    return DayRange(step.train.end - timedelta(days=setting.train_window - 1), step.train.end)


# --------------------------------------------------------------------------
# hyperparameters and search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperParams:
    n_layers: int
    pe_dropout: float
    learning_rate: float
    weight_decay: float


SEARCH_LAYERS = (1, 2, 3, 4)
SEARCH_DROPOUT = (0.0, 0.5)
SEARCH_LR = (1e-5, 1e-2)
SEARCH_WD = (1e-6, 1e-2)


def sample_hyperparams(rng: np.random.Generator) -> HyperParams:
    def log_uniform(lo, hi):
        return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))

    return HyperParams(
        n_layers=int(rng.choice(SEARCH_LAYERS)),
        pe_dropout=float(rng.uniform(*SEARCH_DROPOUT)),
        learning_rate=log_uniform(*SEARCH_LR),
        weight_decay=log_uniform(*SEARCH_WD),
    )


@dataclass(frozen=True)
class ModelSettings:
    """Architecture and loop constants that are not searched."""

    d_model: int = 64
    n_heads: int = 4
    ff_width: int = 128
    epochs: int = 200
    patience: int = 20
    batch_size: int | None = None

    def model_config(self, input_width: int, lagging: int, hp: HyperParams, seed: int) -> ModelConfig:
        return ModelConfig(
            input_width=input_width,
            lagging=lagging,
            d_model=self.d_model,
            n_layers=hp.n_layers,
            n_heads=self.n_heads,
            ff_width=self.ff_width,
            pe_dropout=hp.pe_dropout,
            seed=seed,
        )

    def train_config(self, hp: HyperParams, seed: int) -> TrainConfig:
        return TrainConfig(
            learning_rate=hp.learning_rate,
            weight_decay=hp.weight_decay,
            epochs=self.epochs,
            patience=self.patience,
            batch_size=self.batch_size,
            seed=seed,
        )


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for a (stage, index, ...) key."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


_TRIAL, _STEP_INIT, _STEP_TRAIN = 1, 2, 3


@dataclass
class TrialResult:
    index: int
    hyperparams: HyperParams
    val_loss: float
    history: TrainHistory


def _run_trial(args) -> TrialResult:
    index, hp, train_s, val_s, settings, lagging, seed = args
    width = train_s[0].x.shape[1]
    cfg = settings.model_config(width, lagging, hp, derive_seed(seed, _TRIAL, index, 0))
    _, hist = train(init_model(cfg), train_s, val_s, settings.train_config(hp, derive_seed(seed, _TRIAL, index, 1)))
    return TrialResult(index, hp, hist.best_val_loss, hist)


def _step_frame(dataset, step, setting, holidays, quantizer) -> tuple[FeatureFrame, DayRange]:
    """Scaler and features for one step, built only from data through the test end."""
    train_range = resolve_train_range(step, setting)
    visible = slice_days(dataset, dataset.days[0], step.test.end)
    scaler = fit_scaler(visible, train_range.start, train_range.end)
    return FeatureFrame(visible, scaler, holidays, quantizer), train_range


def search_hyperparams(
    dataset: MarketDataset,
    setting: TrainingSetting,
    plan: WalkForwardPlan,
    n_trials: int = 50,
    seed: int = 0,
    settings: ModelSettings = ModelSettings(),
    holidays: Iterable[date] | None = None,
    quantizer: SpreadQuantizer = DEFAULT_QUANTIZER,
    n_jobs: int = 1,
) -> tuple[HyperParams, list[TrialResult]]:
    """Seeded random search scored on the step-0 validation week.

    Returns the lowest-validation-loss trial (earliest index on ties) and
    every trial in index order.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    step = plan[0]
    frame, train_range = _step_frame(dataset, step, setting, holidays, quantizer)
    train_s = frame.samples(train_range.start, train_range.end, setting.lagging)
    val_s = frame.samples(step.val.start, step.val.end, setting.lagging, strict=True)
    if not train_s:
        raise DateRangeError(f"no training samples in {train_range}")

    rng = np.random.default_rng(derive_seed(seed, _TRIAL))
    jobs = [(i, sample_hyperparams(rng), train_s, val_s, settings, setting.lagging, seed) for i in range(n_trials)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            trials = list(pool.map(_run_trial, jobs))
    else:
        trials = [_run_trial(j) for j in jobs]
    trials.sort(key=lambda t: t.index)
    best = min(trials, key=lambda t: (t.val_loss, t.index))
    for t in trials:
        log.debug("trial %d %s val=%.6f", t.index, t.hyperparams, t.val_loss)
    log.info("setting %s: best trial %d val=%.6f %s", setting.label, best.index, best.val_loss, best.hyperparams)
    return best.hyperparams, trials


# --------------------------------------------------------------------------
# walk-forward run and prediction log
# --------------------------------------------------------------------------


@dataclass
class WeekRecord:
    step: int
    hyperparams: HyperParams
    train_range: DayRange
    n_train: int
    val_loss: float
    best_epoch: int
    final_train_loss: float
    scaler_median: np.ndarray
    scaler_iqr: np.ndarray
    history: TrainHistory


@dataclass(eq=False)
class PredictionLog:
    """Out-of-sample predictions, one row of 24 hours per test day."""

    dates: tuple[date, ...]
    probs: np.ndarray  # (n, 24, 5)
    true_class: np.ndarray  # (n, 24)
    true_spread: np.ndarray  # (n, 24)
    label: str = ""
    weeks: list[WeekRecord] = field(default_factory=list)
    final_model: ModelParams | None = None

    def __post_init__(self):
        n = len(self.dates)
        if self.probs.shape != (n, N_HOURS, N_CLASSES):
            raise ValueError(f"probs shape {self.probs.shape} != {(n, N_HOURS, N_CLASSES)}")
        if self.true_class.shape != (n, N_HOURS) or self.true_spread.shape != (n, N_HOURS):
            raise ValueError("truth arrays must be (n_days, 24)")
        if len(set(self.dates)) != n:
            raise ValueError("duplicate dates in prediction log")

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def predicted_class(self) -> np.ndarray:
        return self.probs.argmax(axis=-1)

    def __eq__(self, other):
        if not isinstance(other, PredictionLog):
            return NotImplemented
        return (
            self.dates == other.dates
            and np.array_equal(self.probs, other.probs)
            and np.array_equal(self.true_class, other.true_class)
            and np.array_equal(self.true_spread, other.true_spread)
        )


def run_walkforward(
    dataset: MarketDataset,
    setting: TrainingSetting,
    hp: HyperParams,
    plan: WalkForwardPlan,
    seed: int = 0,
    settings: ModelSettings = ModelSettings(),
    holidays: Iterable[date] | None = None,
    quantizer: SpreadQuantizer = DEFAULT_QUANTIZER,
) -> PredictionLog:
    """Retrain weekly and predict every test day of the plan.

    Each step sees only data dated up to its own test end; the scaler and
    training/validation samples use only days up to the validation end.
    """
    dates: list[date] = []
    probs, tclass, tspread = [], [], []
    weeks: list[WeekRecord] = []
    prev: ModelParams | None = None

    for step in plan:
        frame, train_range = _step_frame(dataset, step, setting, holidays, quantizer)
        train_s = frame.samples(train_range.start, train_range.end, setting.lagging)
        val_s = frame.samples(step.val.start, step.val.end, setting.lagging, strict=True)
        test_s = frame.samples(step.test.start, step.test.end, setting.lagging, strict=True)
        if not train_s:
            raise DateRangeError(f"step {step.index}: no training samples in {train_range}")

        if setting.finetune and prev is not None:
            start_params = prev
        else:
            cfg = settings.model_config(
                frame.layout.width, setting.lagging, hp, derive_seed(seed, _STEP_INIT, step.index)
            )
            start_params = init_model(cfg)
        tcfg = settings.train_config(hp, derive_seed(seed, _STEP_TRAIN, step.index))
        best, hist = train(start_params, train_s, val_s, tcfg)
        prev = best

        p = predict_proba(best, test_s)
        visible = frame.dataset
        for s, row in zip(test_s, p):
            i = visible.index_of(s.target_date)
            dates.append(s.target_date)
            probs.append(row)
            tclass.append(s.labels)
            tspread.append(visible.spread[i])
        weeks.append(
            WeekRecord(
                step=step.index,
                hyperparams=hp,
                train_range=train_range,
                n_train=len(train_s),
                val_loss=hist.best_val_loss,
                best_epoch=hist.best_epoch,
                final_train_loss=hist.final_train_loss,
                scaler_median=frame.scaler.median.copy(),
                scaler_iqr=frame.scaler.iqr.copy(),
                history=hist,
            )
        )
        log.info(
            "setting %s step %d: train %s (%d samples) val=%.4f test %s",
            setting.label, step.index, train_range, len(train_s), hist.best_val_loss, step.test,
        )  # fmt: skip

    return PredictionLog(
        dates=tuple(dates),
        probs=np.array(probs).reshape(-1, N_HOURS, N_CLASSES),
        true_class=np.array(tclass, dtype=np.int64).reshape(-1, N_HOURS),
        true_spread=np.array(tspread, dtype=float).reshape(-1, N_HOURS),
        label=setting.label,
        weeks=weeks,
        final_model=prev,
    )


LOG_HEADER = ["date", "hour", "p0", "p1", "p2", "p3", "p4", "true_class", "true_spread"]


def write_prediction_log(plog: PredictionLog, path) -> Path:
    """CSV with shortest round-trip float formatting, so a reload is bit-exact."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_HEADER)
        for i, day in enumerate(plog.dates):
            iso = day.isoformat()
            for h in range(N_HOURS):
                w.writerow(
                    [iso, h]
                    + [repr(float(v)) for v in plog.probs[i, h]]
                    + [int(plog.true_class[i, h]), repr(float(plog.true_spread[i, h]))]
                )
    return path


def read_prediction_log(path, label: str = "") -> PredictionLog:
    rows: dict[date, dict[int, list]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LOG_HEADER:
            raise ValueError(f"{path}: expected header {','.join(LOG_HEADER)}")
        for row in reader:
            if not row:
                continue
            try:
                day = date.fromisoformat(row[0])
                hour = int(row[1])
                values = [float(v) for v in row[2:7]] + [int(row[7]), float(row[8])]
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{reader.line_num}: malformed row") from None
            if not 0 <= hour < N_HOURS or not 0 <= values[5] < N_CLASSES:
                raise ValueError(f"{path}:{reader.line_num}: hour or class out of range")
            if hour in rows.setdefault(day, {}):
                raise ValueError(f"{path}:{reader.line_num}: duplicate {day} hour {hour}")
            rows[day][hour] = values
    dates = tuple(sorted(rows))
    for day in dates:
        if len(rows[day]) != N_HOURS:
            missing = sorted(set(range(N_HOURS)) - set(rows[day]))
            raise ValueError(f"{path}: {day} is missing hours {missing}")
    grid = [[rows[d][h] for h in range(N_HOURS)] for d in dates]
    return PredictionLog(
        dates=dates,
        probs=np.array([[r[:5] for r in g] for g in grid], dtype=float).reshape(-1, N_HOURS, N_CLASSES),
        true_class=np.array([[r[5] for r in g] for g in grid], dtype=np.int64).reshape(-1, N_HOURS),
        true_spread=np.array([[r[6] for r in g] for g in grid], dtype=float).reshape(-1, N_HOURS),
        label=label,
    )


def week_summary(week: WeekRecord) -> dict:
    """JSON-friendly view of a week's training outcome."""
    return {
        "step": week.step,
        "train_start": week.train_range.start.isoformat(),
        "train_end": week.train_range.end.isoformat(),
        "n_train": week.n_train,
        "val_loss": week.val_loss,
        "best_epoch": week.best_epoch,
        "epochs_run": len(week.history.val_loss),
        "final_train_loss": week.final_train_loss,
        "hyperparams": asdict(week.hyperparams),
    }
