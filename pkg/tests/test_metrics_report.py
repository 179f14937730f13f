import csv
import json
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import enumerate_accuracy, random_distribution
from spreadcast.backtest import STRATEGIES, BacktestResult, Strategy
from spreadcast.metrics import (
    ConfusionMatrix,
    confusion,
    cumulative_profit_series,
    hourly_confusions,
    macro_scores,
    precision_at,
)
from spreadcast.report import TABLE_COLUMNS, ReportBundle, build_setting_report, emit_report
from spreadcast.walkforward import SETTINGS, PredictionLog

counts = arrays(np.int64, (5, 5), elements=st.integers(0, 50)).filter(lambda m: m.sum() > 0)


def log_from_classes(pred_cls, true_cls, spreads=None):
    pred_cls = np.asarray(pred_cls)
    n = len(pred_cls)
    probs = np.full((n, 24, 5), 0.05)
    np.put_along_axis(probs, pred_cls[..., None], 0.8, axis=-1)
    if spreads is None:
        spreads = np.zeros((n, 24))
    return PredictionLog(
        dates=tuple(date(2024, 1, 1) + timedelta(days=k) for k in range(n)),
        probs=probs,
        true_class=np.asarray(true_cls),
        true_spread=np.asarray(spreads, dtype=float),
        label="A",
    )


def random_log(seed, n=12):
    rng = np.random.default_rng(seed)
    probs = np.stack([random_distribution(rng, peaked=True) for _ in range(n)])
    spreads = np.round(rng.standard_t(2, size=(n, 24)) * 8, 3)
    truth = np.digitize(spreads, [-12, -5, 5, 12])
    return PredictionLog(
        dates=tuple(date(2024, 3, 1) + timedelta(days=k) for k in range(n)),
        probs=probs,
        true_class=truth,
        true_spread=spreads,
        label="A",
    )


class TestConfusion:
    def test_perfect_predictions_are_diagonal(self):
        rng = np.random.default_rng(0)
        cls = rng.integers(0, 5, size=(6, 24))
        m = confusion(log_from_classes(cls, cls)).counts
        assert np.all(m == np.diag(np.diag(m)))
        assert m.sum() == 6 * 24

    def test_single_cell(self):
        true = np.full((1, 24), 2)
        pred = np.full((1, 24), 2)
        pred[0, :10] = 0
        true[0, 10:] = 4
        pred[0, 10:] = 4
        m = confusion(log_from_classes(pred, true))
        assert m.counts[2, 0] == 10
        assert m.counts.sum() - m.counts[2, 0] - m.counts[4, 4] == 0

    def test_hourly_partition(self):
        log = random_log(3)
        hourly = hourly_confusions(log)
        assert [m.hour for m in hourly] == list(range(24))
        total = sum(hourly[1:], hourly[0])
        np.testing.assert_array_equal(total.counts, confusion(log).counts)
        assert total.tag == "ALL" and hourly[5].tag == "05"
        assert all(m.total == len(log) for m in hourly)

    def test_empty_log(self):
        empty = PredictionLog((), np.zeros((0, 24, 5)), np.zeros((0, 24), dtype=int), np.zeros((0, 24)))
        with pytest.raises(ValueError):
            confusion(empty)

    def test_bad_hour(self):
        with pytest.raises(ValueError):
            confusion(random_log(0), 24)

    @pytest.mark.parametrize("seed", range(5))
    def test_accuracy_matches_enumeration(self, seed):
        log = random_log(seed)
        acc = macro_scores(confusion(log)).accuracy
        assert acc == pytest.approx(enumerate_accuracy(log.true_class, log.probs.argmax(-1)), abs=1e-15)


class TestScores:
    def test_hand_matrix(self):
        c = np.zeros((5, 5), dtype=np.int64)
        c[0, 0] = 1
        c[2, 0] = 1
        s = macro_scores(ConfusionMatrix(c))
        assert s.class_precision[0] == 0.5
        assert s.class_recall[0] == 1.0
        assert s.accuracy == 0.5
        assert precision_at(ConfusionMatrix(c), 0) == 0.5

    def test_identity_with_absent_classes(self):
        c = np.diag([3, 0, 9, 0, 1])
        s = macro_scores(ConfusionMatrix(c))
        assert s.accuracy == 1.0
        assert s.precision == s.recall == s.f1 == pytest.approx(3 / 5)

    def test_precision_at_edges(self):
        assert precision_at(ConfusionMatrix(np.eye(5, dtype=np.int64) * 4), 3) == 1.0
        c = np.zeros((5, 5), dtype=np.int64)
        c[1, 2] = 5
        assert precision_at(ConfusionMatrix(c), 4) == 0.0

    def test_empty_matrix(self):
        with pytest.raises(ValueError):
            macro_scores(ConfusionMatrix(np.zeros((5, 5), dtype=np.int64)))

    @given(counts)
    @settings(max_examples=150)
    def test_bounds_and_consistency(self, c):
        m = ConfusionMatrix(c)
        s = macro_scores(m)
        for v in (s.accuracy, s.precision, s.recall, s.f1, *s.class_precision, *s.class_recall, *s.class_f1):
            assert 0.0 <= v <= 1.0
        assert min(s.class_f1) - 1e-12 <= s.f1 <= max(s.class_f1) + 1e-12
        assert s.accuracy == pytest.approx(np.trace(c) / c.sum())
        for k in range(5):
            assert precision_at(m, k) == pytest.approx(s.class_precision[k])


class TestCumulative:
    def _result(self, daily):
        days = tuple(date(2024, 1, 1) + timedelta(days=k) for k in range(len(daily)))
        return BacktestResult(Strategy.T7, "A", days, np.asarray(daily, dtype=float))

    def test_running_sum(self):
        r = self._result([15, 0, 5])
        series = cumulative_profit_series(r)
        assert [v for _, v in series] == [15.0, 15.0, 20.0]
        assert [d for d, _ in series] == list(r.dates)
        assert series[-1][1] == r.total

    def test_flat_zero(self):
        assert [v for _, v in cumulative_profit_series(self._result([0, 0, 0, 0]))] == [0.0] * 4


@pytest.fixture
def bundle():
    reps = [
        build_setting_report(SETTINGS["A"], random_log(7)),
        build_setting_report(SETTINGS["B"], random_log(8)),
    ]
    return ReportBundle(reps, {"seed": 7, "config_digest": "abc"})


class TestEmitReport:
    def test_layout(self, bundle, tmp_path):
        paths = emit_report(bundle, tmp_path)
        rel = {p.relative_to(tmp_path).as_posix() for p in paths}
        assert "metrics.csv" in rel and "summary.json" in rel
        for label in "AB":
            assert f"confusion/{label}/all.csv" in rel
            assert sum(r.startswith(f"confusion/{label}/hour_") for r in rel) == 24
            assert {f"profit/{label}_{s.value}.csv" for s in STRATEGIES} <= rel
        header = (tmp_path / "metrics.csv").read_text().splitlines()[0]
        assert header.split(",") == TABLE_COLUMNS

    def test_byte_identical_rerun(self, bundle, tmp_path):
        a = emit_report(bundle, tmp_path / "a")
        b = emit_report(bundle, tmp_path / "b")
        assert [p.relative_to(tmp_path / "a") for p in a] == [p.relative_to(tmp_path / "b") for p in b]
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()

    def test_no_strategies(self, tmp_path):
        rep = build_setting_report(SETTINGS["A"], random_log(1), strategies=())
        paths = emit_report(ReportBundle([rep]), tmp_path)
        assert not (tmp_path / "profit").exists()
        assert all("profit" not in p.as_posix() for p in paths)
        row = next(csv.DictReader(open(tmp_path / "metrics.csv")))
        assert row["T1"] == "" and float(row["Acc"]) >= 0

    def test_summary_totals_match_files(self, bundle, tmp_path):
        emit_report(bundle, tmp_path)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["columns"] == TABLE_COLUMNS
        assert summary["metadata"]["seed"] == 7
        for label, info in summary["settings"].items():
            for strat, total in info["totals"].items():
                rows = list(csv.DictReader(open(tmp_path / "profit" / f"{label}_{strat}.csv")))
                assert float(rows[-1]["cumulative_profit"]) == pytest.approx(total, abs=1e-6)
        metrics = {r["Model"]: r for r in csv.DictReader(open(tmp_path / "metrics.csv"))}
        for row in summary["table"]:
            assert float(metrics[row["Model"]]["T6"]) == pytest.approx(row["T6"], abs=1e-6)
            assert float(metrics[row["Model"]]["Acc"]) == pytest.approx(row["Acc"], abs=1e-6)

    def test_confusion_file_matches_matrix(self, bundle, tmp_path):
        emit_report(bundle, tmp_path)
        rows = list(csv.reader(open(tmp_path / "confusion" / "A" / "hour_19.csv")))
        got = np.array([[int(x) for x in r[1:]] for r in rows[1:]])
        np.testing.assert_array_equal(got, bundle.settings[0].hourly[19].counts)

    def test_unwritable_target_reports_path(self, bundle, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            emit_report(bundle, blocker / "sub")
