"""YAML pipeline configuration with defaults for every key.

Example::

    seed: 0
    data:
      prices: null          # default: <out>/data/prices.csv
      forecasts: []         # default: [<out>/data/forecasts.csv]
      holidays: null        # one ISO date per line; default NERC holidays
    synth: {n_days: 420, n_load_zones: 3, n_solar_zones: 2, n_wind_zones: 2,
            volatility: 1.0, start: 2023-01-01}
    quantizer: {thresholds: [-12, -5, 5, 12]}
    walkforward: {initial_train_end: 2023-12-23, test_start: 2024-01-01,
                  test_end: null, n_trials: 50, n_jobs: 1}
    model: {d_model: 64, n_heads: 4, ff_width: 128, epochs: 200,
            patience: 20, batch_size: null}
    backtest: {uplift: 5.0}
    settings: [A, B, C, D, E, F, G]

Relative data paths resolve against the config file's directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import date
from pathlib import Path

import yaml

from .backtest import UPLIFT
from .market_data import SynthConfig
from .quantizer import DEFAULT_THRESHOLDS, SpreadQuantizer
from .walkforward import SETTINGS, ModelSettings


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataPaths:
    prices: Path | None = None
    forecasts: tuple[Path, ...] = ()
    holidays: Path | None = None


@dataclass(frozen=True)
class WalkForwardConfig:
    initial_train_end: date = date(2023, 12, 23)
    test_start: date = date(2024, 1, 1)
    test_end: date | None = None
    n_trials: int = 50
    n_jobs: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    data: DataPaths = DataPaths()
    synth: SynthConfig = SynthConfig()
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    walkforward: WalkForwardConfig = WalkForwardConfig()
    model: ModelSettings = ModelSettings()
    uplift: float = UPLIFT
    settings: tuple[str, ...] = tuple(SETTINGS)
    source: Path | None = field(default=None, compare=False)

    @property
    def quantizer(self) -> SpreadQuantizer:
        return SpreadQuantizer(tuple(self.thresholds))

    def with_seed(self, seed: int) -> "PipelineConfig":
        return replace(self, seed=seed, synth=replace(self.synth, seed=seed))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("source")
        return json.loads(json.dumps(d, default=str))

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _as_date(value, key: str) -> date | None:
    if value is None or isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ConfigError(f"{key}: bad date {value!r}") from None


def _section(raw: dict, name: str, cls, dates=()):
    part = raw.get(name)
    if part is None:
        part = {}
    if not isinstance(part, dict):
        raise ConfigError(f"{name} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(part) - known
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    kwargs = dict(part)
    for key in dates:
        if key in kwargs:
            kwargs[key] = _as_date(kwargs[key], f"{name}.{key}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def parse_config(raw: dict | None, base_dir: Path | None = None) -> PipelineConfig:
    raw = raw or {}
    allowed = {"seed", "data", "synth", "quantizer", "walkforward", "model", "backtest", "settings"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    base = base_dir or Path(".")
    seed = int(raw.get("seed", 0))

    def resolve(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else base / p

    data_raw = raw.get("data") or {}
    forecasts = data_raw.get("forecasts") or []
    if isinstance(forecasts, str):
        forecasts = [forecasts]
    data = DataPaths(
        prices=resolve(data_raw.get("prices")),
        forecasts=tuple(resolve(p) for p in forecasts),
        holidays=resolve(data_raw.get("holidays")),
    )

    synth_raw = dict(raw.get("synth") or {})
    synth_raw.setdefault("seed", seed)
    synth = _section({"synth": synth_raw}, "synth", SynthConfig, dates=("start",))

    q = raw.get("quantizer") or {}
    thresholds = tuple(float(x) for x in q.get("thresholds", DEFAULT_THRESHOLDS))
    try:
        SpreadQuantizer(thresholds)
    except ValueError as exc:
        raise ConfigError(f"quantizer: {exc}") from exc

    wf = _section(raw, "walkforward", WalkForwardConfig, dates=("initial_train_end", "test_start", "test_end"))
    model = _section(raw, "model", ModelSettings)
    bt = raw.get("backtest") or {}
    settings = raw.get("settings", list(SETTINGS))
    if isinstance(settings, str):
        settings = [settings]
    bad = [s for s in settings if s not in SETTINGS]
    if bad:
        raise ConfigError(f"unknown settings {bad}; choose from {sorted(SETTINGS)}")
    return PipelineConfig(
        seed=seed,
        data=data,
        synth=synth,
        thresholds=thresholds,
        walkforward=wf,
        model=model,
        uplift=float(bt.get("uplift", UPLIFT)),
        settings=tuple(settings),
        source=None,
    )


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return replace(parse_config(raw, path.parent), source=path)
