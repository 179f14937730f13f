"""Spread-class forecasting and virtual-bidding backtests for ERCOT-style markets."""

from .backtest import STRATEGIES, BacktestResult, Strategy, decide_trades, run_backtest, settle
from .calendar_features import cyclical_encode, day_features, nerc_holidays
from .features import FeatureFrame, ModelSample, ScalerParams, apply_scaler, build_dataset, build_sample, fit_scaler
from .market_data import MarketDataset, SynthConfig, generate_synthetic, load_dataset, slice_days, write_dataset
from .metrics import ConfusionMatrix, MetricSummary, confusion, macro_scores, precision_at
from .quantizer import SpreadQuantizer, class_bounds, class_direction, quantize
from .walkforward import (
    SETTINGS,
    HyperParams,
    PredictionLog,
    TrainingSetting,
    make_plan,
    resolve_train_range,
    run_walkforward,
    search_hyperparams,
)

__version__ = "0.1.0"
