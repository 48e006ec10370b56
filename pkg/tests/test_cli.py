"""Command-line subcommands, outputs and exit codes."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import ujson

from src.repositories.matrix import MatrixRepository
from src.routers.cli import main
from src.schemas.matrix import SDataMatrix

BASE = """
[TestConfig]
test_id = dense-G
p = 3
n = 32

[NoiseSpec]
family = gaussian
alpha = 2
{noise_extra}

[Experiment]
seed = 5
reps = 200
{experiment_extra}
"""

SIGNAL = """
[SignalSpec]
kind = single-change
p = 3
n = 32
t0 = 16
delta = 2, 2, 2

[Power]
t0 = 16
rho = 0, 40
"""


@pytest.fixture()
def scenario(tmp_path: Path):
    def write(noise_extra: str = "", experiment_extra: str = "", tail: str = "") -> str:
        path = tmp_path / "scenario.ini"
        path.write_text(
            BASE.format(noise_extra=noise_extra, experiment_extra=experiment_extra) + tail
        )
        return str(path)

    return write


def _matrix(tmp_path: Path, values: np.ndarray, name: str = "x.csv") -> str:
    return str(MatrixRepository(tmp_path / name).write(SDataMatrix(values=values)))


def _decision(out: Path) -> dict:
    with open(out / "decision.json") as handle:
        return ujson.load(handle)


class TestPhaseDiagram:
    def test_rows(self, tmp_path: Path) -> None:
        assert main(["phase-diagram", "--out", str(tmp_path)]) == 0
        frame = pd.read_csv(tmp_path / "curves.csv", comment="#")
        assert list(frame.columns) == ["alpha", "curve_id", "value"]
        assert (frame["curve_id"] == "gamma").sum() == 17
        assert (tmp_path / "manifest.json").is_file()

    def test_custom_grid(self, tmp_path: Path) -> None:
        args = ["phase-diagram", "--out", str(tmp_path), "--alpha-min", "0.5", "--alpha-max", "2", "--step", "0.5"]
        assert main(args) == 0
        frame = pd.read_csv(tmp_path / "curves.csv", comment="#")
        beta = frame[frame["curve_id"] == "beta"]
        np.testing.assert_allclose(beta["value"], [4.0, 2.0, 4 / 3, 1.0])

    def test_invalid_grid(self, tmp_path: Path) -> None:
        assert main(["phase-diagram", "--out", str(tmp_path), "--alpha-min", "3", "--alpha-max", "2"]) == 2


class TestCalibrate:
    def test_smoke_and_determinism(self, tmp_path: Path, scenario) -> None:
        config = scenario()
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["calibrate", "--config", config, "--out", str(first)]) == 0
        assert main(["calibrate", "--config", config, "--out", str(second)]) == 0
        assert (first / "calibration.csv").read_bytes() == (second / "calibration.csv").read_bytes()
        with open(first / "manifest.json") as handle:
            manifest = ujson.load(handle)
        assert manifest["seed"] == 5
        assert manifest["outputs"] == ["calibration.csv"]
        assert config in manifest["input_hashes"]

    def test_seed_flag_overrides(self, tmp_path: Path, scenario) -> None:
        config = scenario()
        assert main(["calibrate", "--config", config, "--out", str(tmp_path / "a")]) == 0
        assert main(["calibrate", "--config", config, "--out", str(tmp_path / "b"), "--seed", "6"]) == 0
        assert (tmp_path / "a" / "calibration.csv").read_bytes() != (
            tmp_path / "b" / "calibration.csv"
        ).read_bytes()

    def test_degenerate_null_exit_code(self, tmp_path: Path, scenario) -> None:
        config = scenario(noise_extra="scale = 0")
        assert main(["calibrate", "--config", config, "--out", str(tmp_path)]) == 3

    def test_missing_config(self, tmp_path: Path) -> None:
        assert main(["calibrate", "--config", str(tmp_path / "absent.ini"), "--out", str(tmp_path)]) == 2

    def test_invalid_value(self, tmp_path: Path, scenario) -> None:
        config = scenario(experiment_extra="threads = zero")
        assert main(["calibrate", "--config", config, "--out", str(tmp_path)]) == 2


class TestTestCommand:
    def test_constant_matrix_accepts(self, tmp_path: Path, scenario) -> None:
        data = _matrix(tmp_path, np.full((3, 32), 2.0))
        out = tmp_path / "out"
        assert main(["test", "--config", scenario(), "--data", data, "--out", str(out)]) == 0
        decision = _decision(out)
        assert decision["reject"] is False
        assert decision["test_id"] == "dense-G"

    def test_change_rejects(self, tmp_path: Path, scenario) -> None:
        values = np.zeros((3, 32))
        values[:, :16] = 10.0
        data = _matrix(tmp_path, values)
        out = tmp_path / "out"
        assert main(["test", "--config", scenario(), "--data", data, "--out", str(out)]) == 0
        assert _decision(out)["reject"] is True

    def test_uses_calibration_file(self, tmp_path: Path, scenario) -> None:
        config = scenario()
        calibrated = tmp_path / "cal"
        assert main(["calibrate", "--config", config, "--out", str(calibrated)]) == 0
        data = _matrix(tmp_path, np.full((3, 32), 2.0))
        out = tmp_path / "out"
        args = ["test", "--config", config, "--data", data, "--out", str(out)]
        assert main(args + ["--calibration", str(calibrated / "calibration.csv")]) == 0
        assert _decision(out)["reject"] is False

    def test_malformed_csv(self, tmp_path: Path, scenario) -> None:
        bad = tmp_path / "bad.csv"
        bad.write_text("t1,t2\n1,oops\n")
        assert main(["test", "--config", scenario(), "--data", str(bad), "--out", str(tmp_path)]) == 2

    def test_shape_mismatch(self, tmp_path: Path, scenario) -> None:
        data = _matrix(tmp_path, np.zeros((2, 32)))
        assert main(["test", "--config", scenario(), "--data", data, "--out", str(tmp_path)]) == 2

    def test_needs_data(self, tmp_path: Path, scenario) -> None:
        assert main(["test", "--config", scenario(), "--out", str(tmp_path)]) == 2


class TestRiskAndPower:
    def test_risk(self, tmp_path: Path, scenario) -> None:
        config = scenario(experiment_extra="multiplier = 1.0", tail=SIGNAL)
        assert main(["risk", "--config", config, "--out", str(tmp_path), "--reps", "50"]) == 0
        frame = pd.read_csv(tmp_path / "risk.csv", comment="#")
        assert list(frame.columns) == ["type1", "type2", "total", "se1", "se2", "R"]
        assert frame["R"].iloc[0] == 50

    def test_risk_needs_alternative(self, tmp_path: Path, scenario) -> None:
        config = scenario(experiment_extra="multiplier = 1.0")
        assert main(["risk", "--config", config, "--out", str(tmp_path)]) == 2

    def test_power(self, tmp_path: Path, scenario) -> None:
        config = scenario(experiment_extra="multiplier = 1.0", tail=SIGNAL)
        assert main(["power", "--config", config, "--out", str(tmp_path), "--reps", "50"]) == 0
        frame = pd.read_csv(tmp_path / "power.csv", comment="#")
        assert list(frame["rho"]) == [0.0, 40.0]
        assert frame["power"].iloc[-1] == 1.0
