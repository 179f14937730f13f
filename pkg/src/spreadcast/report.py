"""Assemble per-setting metrics and backtests and write them as plain files.

Output layout under the report directory::

    metrics.csv                      one row per setting: Model, L, S, F, Acc..F1, T1..T7
    summary.json                     the same plus per-class scores and metadata
    confusion/<label>/hour_HH.csv    24 hourly matrices and all.csv
    confusion/<label>/hourly_scores.csv
    profit/<label>_<strategy>.csv    daily and cumulative net profit
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .backtest import STRATEGIES, UPLIFT, BacktestResult, Strategy, run_backtest, write_profit_csv
from .forecaster.model import N_CLASSES
from .metrics import ConfusionMatrix, MetricSummary, confusion, hourly_confusions, macro_scores
from .walkforward import PredictionLog, TrainingSetting

TABLE_COLUMNS = ["Model", "L", "S", "F", "Acc", "Pre", "Rec", "F1"] + [s.value for s in STRATEGIES]


@dataclass
class SettingReport:
    setting: TrainingSetting
    summary: MetricSummary
    overall: ConfusionMatrix
    hourly: list[ConfusionMatrix]
    results: dict[Strategy, BacktestResult] = field(default_factory=dict)

    def table_row(self) -> dict:
        s = self.setting
        row = {
            "Model": s.label,
            "L": s.lagging,
            "S": s.window_label,
            "F": "Yes" if s.finetune else "No",
            "Acc": self.summary.accuracy,
            "Pre": self.summary.precision,
            "Rec": self.summary.recall,
            "F1": self.summary.f1,
        }
        for strat in STRATEGIES:
            row[strat.value] = self.results[strat].total if strat in self.results else None
        return row


@dataclass
class ReportBundle:
    settings: list[SettingReport]
    metadata: dict = field(default_factory=dict)


def build_setting_report(
    setting: TrainingSetting,
    plog: PredictionLog,
    strategies: Sequence[Strategy] = STRATEGIES,
    uplift: float = UPLIFT,
) -> SettingReport:
    overall = confusion(plog)
    return SettingReport(
        setting=setting,
        summary=macro_scores(overall),
        overall=overall,
        hourly=hourly_confusions(plog),
        results={Strategy(s): run_backtest(s, plog, uplift) for s in strategies},
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def _write_matrix(m: ConfusionMatrix, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true\\pred"] + [f"c{c}" for c in range(N_CLASSES)])
        for t in range(N_CLASSES):
            w.writerow([f"c{t}"] + [int(x) for x in m.counts[t]])


def _write_hourly_scores(hourly: Sequence[ConfusionMatrix], path: Path) -> None:
    header = ["hour", "n", "accuracy"] + [f"precision_c{c}" for c in range(N_CLASSES)]
    header += [f"recall_c{c}" for c in range(N_CLASSES)] + [f"support_pred_c{c}" for c in range(N_CLASSES)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for m in hourly:
            s = macro_scores(m)
            w.writerow(
                [m.hour, m.total, _fmt(s.accuracy)]
                + [_fmt(x) for x in s.class_precision]
                + [_fmt(x) for x in s.class_recall]
                + [int(x) for x in m.counts.sum(axis=0)]
            )


def emit_report(bundle: ReportBundle, out_dir) -> list[Path]:
    """Write the report files; returns the written paths in a stable order."""
    out = Path(out_dir)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        metrics_path = out / "metrics.csv"
        with open(metrics_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_COLUMNS)
            for rep in bundle.settings:
                row = rep.table_row()
                w.writerow([_fmt(row[c]) for c in TABLE_COLUMNS])
        written.append(metrics_path)

        for rep in bundle.settings:
            cdir = out / "confusion" / rep.setting.label
            cdir.mkdir(parents=True, exist_ok=True)
            _write_matrix(rep.overall, cdir / "all.csv")
            written.append(cdir / "all.csv")
            for m in rep.hourly:
                p = cdir / f"hour_{m.hour:02d}.csv"
                _write_matrix(m, p)
                written.append(p)
            _write_hourly_scores(rep.hourly, cdir / "hourly_scores.csv")
            written.append(cdir / "hourly_scores.csv")

            if rep.results:
                pdir = out / "profit"
                pdir.mkdir(parents=True, exist_ok=True)
                for strat, res in rep.results.items():
                    p = pdir / f"{rep.setting.label}_{strat.value}.csv"
                    write_profit_csv([res], p)
                    written.append(p)

        summary = {
            "metadata": bundle.metadata,
            "columns": TABLE_COLUMNS,
            "table": [rep.table_row() for rep in bundle.settings],
            "settings": {
                rep.setting.label: {
                    "setting": asdict(rep.setting),
                    "scores": asdict(rep.summary),
                    "n_scored": rep.overall.total,
                    "totals": {s.value: r.total for s, r in rep.results.items()},
                    "trades": {s.value: len(r.trades) for s, r in rep.results.items()},
                }
                for rep in bundle.settings
            },
        }
        summary_path = out / "summary.json"
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        written.append(summary_path)
    except OSError as exc:
        raise OSError(f"failed writing report to {exc.filename or out}: {exc.strerror}") from exc
    return written
