import csv
import json
from datetime import date

import pytest
import yaml

from spreadcast.cli import main
from spreadcast.config import ConfigError, PipelineConfig, load_config, parse_config
from spreadcast.walkforward import read_prediction_log

TINY = {
    "seed": 4,
    "synth": {"n_days": 60, "n_load_zones": 1, "n_solar_zones": 1, "n_wind_zones": 1},
    "walkforward": {
        "initial_train_end": "2023-02-10",
        "test_start": "2023-02-19",
        "test_end": "2023-02-28",
        "n_trials": 2,
    },
    "model": {"d_model": 8, "n_heads": 2, "ff_width": 16, "epochs": 4, "patience": 2},
    "settings": ["A"],
}


def write_cfg(tmp_path, body):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(body))
    return p


class TestConfig:
    def test_defaults(self):
        cfg = parse_config(None)
        assert cfg == PipelineConfig()
        assert cfg.walkforward.initial_train_end == date(2023, 12, 23)
        assert cfg.synth.n_days == 420 and cfg.model.d_model == 64

    def test_tiny(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, TINY))
        assert cfg.synth.seed == 4
        assert cfg.walkforward.test_end == date(2023, 2, 28)
        assert cfg.model.epochs == 4
        assert cfg.source == tmp_path / "cfg.yaml"

    def test_relative_paths(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, {"data": {"prices": "d/p.csv", "forecasts": "d/f.csv"}}))
        assert cfg.data.prices == tmp_path / "d" / "p.csv"
        assert cfg.data.forecasts == (tmp_path / "d" / "f.csv",)

    def test_digest_tracks_content(self):
        a, b = parse_config({"seed": 1}), parse_config({"seed": 2})
        assert a.digest() != b.digest()
        assert a.digest() == parse_config({"seed": 1}).digest()
        assert a.with_seed(2).digest() == b.digest()

    @pytest.mark.parametrize(
        "raw",
        [
            {"bogus": 1},
            {"model": {"d_model": 8, "wings": 2}},
            {"walkforward": {"test_start": "soon"}},
            {"quantizer": {"thresholds": [5, -5, 1, 2]}},
            {"settings": ["A", "Q"]},
            {"synth": {"n_days": 3}},
            {"model": []},
        ],
    )
    def test_rejects(self, raw):
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_non_mapping_file(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(p)


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_cfg(tmp, TINY)
    out = tmp / "out"
    for cmd in ("synth", "train", "backtest", "report"):
        assert main([cmd, "--config", str(cfg), "--out", str(out)]) == 0
    return out


class TestCli:
    def test_outputs(self, run_dir):
        for rel in (
            "data/prices.csv",
            "data/forecasts.csv",
            "train/predictions_A.csv",
            "train/model_A.npz",
            "train/search_A.json",
            "backtest/profit_A.csv",
            "backtest/trades_A.csv",
            "report/metrics.csv",
            "report/summary.json",
            "report/confusion/A/hour_19.csv",
            "report/profit/A_T7.csv",
        ):
            assert (run_dir / rel).is_file(), rel

    def test_prediction_log_covers_test_period(self, run_dir):
        plog = read_prediction_log(run_dir / "train" / "predictions_A.csv", "A")
        assert plog.dates[0] == date(2023, 2, 19) and plog.dates[-1] == date(2023, 2, 28)

    def test_summary(self, run_dir):
        s = json.loads((run_dir / "report" / "summary.json").read_text())
        assert s["metadata"]["seed"] == 4
        assert len(s["metadata"]["training"]["A"]["final_train_loss"]) == 2
        assert [r["Model"] for r in s["table"]] == ["A"]

    def test_strategy_filter(self, run_dir, tmp_path):
        cfg = write_cfg(tmp_path, TINY)
        assert main(["backtest", "--config", str(cfg), "--out", str(run_dir), "--strategy", "T6,T7"]) == 0
        rows = list(csv.DictReader(open(run_dir / "backtest" / "profit_A.csv")))
        assert {r["strategy"] for r in rows} == {"T6", "T7"}

    def test_missing_log(self, tmp_path, capsys):
        assert main(["backtest", "--out", str(tmp_path), "--setting", "B"]) == 2
        assert "predictions_B.csv" in capsys.readouterr().err

    def test_bad_setting(self, tmp_path):
        assert main(["report", "--out", str(tmp_path), "--setting", "Z"]) == 2

    def test_bad_config(self, tmp_path):
        p = write_cfg(tmp_path, {"nope": 1})
        assert main(["synth", "--config", str(p), "--out", str(tmp_path)]) == 2

    def test_seed_override(self, tmp_path):
        cfg = write_cfg(tmp_path, TINY)
        assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "9"]) == 0
        assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a/data/prices.csv").read_bytes() != (tmp_path / "b/data/prices.csv").read_bytes()
