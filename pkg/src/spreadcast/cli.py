"""Command-line entry point: ``spreadcast {synth,train,backtest,report}``.

All subcommands share one working directory (``--out``)::

    <out>/data/       prices.csv, forecasts.csv            (synth)
    <out>/train/      predictions_<S>.csv, search_<S>.json, model_<S>.npz
    <out>/backtest/   profit_<S>.csv, trades_<S>.csv
    <out>/report/     see spreadcast.report
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

from .backtest import STRATEGIES, Strategy, run_backtest, write_blotter_csv, write_profit_csv
from .calendar_features import load_holidays
from .config import ConfigError, PipelineConfig, load_config
from .forecaster import save_checkpoint
from .market_data import MarketDataError, generate_synthetic, load_dataset, write_dataset
from .report import ReportBundle, build_setting_report, emit_report
from .walkforward import (
    SETTINGS,
    TrainWindowTruncated,
    make_plan,
    read_prediction_log,
    run_walkforward,
    search_hyperparams,
    week_summary,
    write_prediction_log,
)

log = logging.getLogger("spreadcast")


def _settings(arg: str | None, cfg: PipelineConfig) -> list[str]:
    if arg is None:
        return list(cfg.settings)
    if arg.lower() == "all":
        return list(SETTINGS)
    labels = [s.strip().upper() for s in arg.split(",")]
    bad = [s for s in labels if s not in SETTINGS]
    if bad:
        raise ConfigError(f"unknown setting(s) {bad}")
    return labels


def _strategies(arg: str | None) -> list[Strategy]:
    if arg is None or arg.lower() == "all":
        return list(STRATEGIES)
    try:
        return [Strategy(s.strip().upper()) for s in arg.split(",")]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _data_paths(cfg: PipelineConfig, out: Path):
    prices = cfg.data.prices or out / "data" / "prices.csv"
    forecasts = list(cfg.data.forecasts) or [out / "data" / "forecasts.csv"]
    return prices, forecasts


def cmd_synth(cfg: PipelineConfig, args) -> int:
    dataset = generate_synthetic(cfg.synth)
    prices, forecasts = write_dataset(dataset, args.out / "data")
    print(f"wrote {dataset.n_days} days {dataset.date_range[0]}..{dataset.date_range[1]} -> {prices}, {forecasts}")
    return 0


def cmd_train(cfg: PipelineConfig, args) -> int:
    prices, forecasts = _data_paths(cfg, args.out)
    dataset = load_dataset(prices, forecasts)
    holidays = load_holidays(cfg.data.holidays) if cfg.data.holidays else None
    wf = cfg.walkforward
    plan = make_plan(dataset.date_range, wf.initial_train_end, wf.test_start, wf.test_end or dataset.date_range[1])
    tdir = args.out / "train"
    tdir.mkdir(parents=True, exist_ok=True)
    for label in _settings(args.setting, cfg):
        setting = SETTINGS[label]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", TrainWindowTruncated)
            hp, trials = search_hyperparams(
                dataset, setting, plan, wf.n_trials, cfg.seed, cfg.model, holidays, cfg.quantizer, wf.n_jobs
            )
            plog = run_walkforward(dataset, setting, hp, plan, cfg.seed, cfg.model, holidays, cfg.quantizer)
        notes = sorted({str(w.message) for w in caught if issubclass(w.category, TrainWindowTruncated)})
        for n in notes:
            log.warning(n)
        write_prediction_log(plog, tdir / f"predictions_{label}.csv")
        save_checkpoint(plog.final_model, tdir / f"model_{label}.npz")
        record = {
            "setting": asdict(setting),
            "seed": cfg.seed,
            "n_steps": len(plan),
            "best": asdict(hp),
            "trials": [{"index": t.index, **asdict(t.hyperparams), "val_loss": t.val_loss} for t in trials],
            "weeks": [week_summary(w) for w in plog.weeks],
            "warnings": notes,
        }
        (tdir / f"search_{label}.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        print(f"setting {label}: {len(plan)} steps, {len(plog)} test days, best {hp}")
    return 0


def _load_log(args, label: str):
    path = args.out / "train" / f"predictions_{label}.csv"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run `train --setting {label}` first")
    return read_prediction_log(path, label)


def cmd_backtest(cfg: PipelineConfig, args) -> int:
    bdir = args.out / "backtest"
    bdir.mkdir(parents=True, exist_ok=True)
    strategies = _strategies(args.strategy)
    for label in _settings(args.setting, cfg):
        plog = _load_log(args, label)
        results = [run_backtest(s, plog, cfg.uplift) for s in strategies]
        write_profit_csv(results, bdir / f"profit_{label}.csv")
        write_blotter_csv(results, bdir / f"trades_{label}.csv")
        totals = "  ".join(f"{r.strategy.value}={r.total:.2f}" for r in results)
        print(f"setting {label}: {totals}")
    return 0


def cmd_report(cfg: PipelineConfig, args) -> int:
    strategies = _strategies(args.strategy)
    reports = []
    training = {}
    for label in _settings(args.setting, cfg):
        plog = _load_log(args, label)
        reports.append(build_setting_report(SETTINGS[label], plog, strategies, cfg.uplift))
        search = args.out / "train" / f"search_{label}.json"
        if search.exists():
            rec = json.loads(search.read_text())
            training[label] = {
                "best": rec["best"],
                "final_train_loss": [w["final_train_loss"] for w in rec["weeks"]],
                "val_loss": [w["val_loss"] for w in rec["weeks"]],
            }
    meta = {
        "seed": cfg.seed,
        "config_digest": cfg.digest(),
        "uplift": cfg.uplift,
        "thresholds": list(cfg.thresholds),
        "strategies": [s.value for s in strategies],
        "training": training,
    }
    written = emit_report(ReportBundle(reports, meta), args.out / "report")
    print(f"wrote {len(written)} files to {args.out / 'report'}")
    for rep in reports:
        row = rep.table_row()
        print("  ".join(f"{k}={v:.3f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file (defaults apply when omitted)")
    common.add_argument("--out", type=Path, default=Path("run"), help="working/output directory")
    common.add_argument("--setting", help="A..G, comma list, or 'all' (default: config settings)")
    common.add_argument("--strategy", help="T1..T7, comma list, or 'all'")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="spreadcast", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in (
        ("synth", cmd_synth, "write a synthetic dataset"),
        ("train", cmd_train, "hyperparameter search + walk-forward predictions"),
        ("backtest", cmd_backtest, "apply trading strategies to prediction logs"),
        ("report", cmd_report, "metrics, confusion matrices and profit curves"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        args.out.mkdir(parents=True, exist_ok=True)
        return args.func(cfg, args)
    except (ConfigError, MarketDataError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
