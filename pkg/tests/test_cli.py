import json
import math

import numpy as np
import pandas as pd
import pytest

from src.cli import build_parser, main, run_config_from_args
from src.config import Config
from src.experiment import read_run_log

S4_FLAGS = ["--subalgebra", "S4", "--eps", "1", "--c1", "1.6", "--ic-alpha", "0.3",
            "--grid=-3:3:601", "--window=-1:1:-1:1:11"]


@pytest.fixture
def results(tmp_path):
    return tmp_path / "results"


def run(results, *argv):
    return main([*argv, "--results-dir", str(results)])


def report(results, command):
    (path,) = results.glob(f"*_{command}.json")
    return json.loads(path.read_text(encoding="utf-8"))


def test_verify_algebra_passes(results, capsys):
    assert run(results, "verify-algebra") == 0
    data = report(results, "verify-algebra")
    assert data["exit_code"] == 0
    assert data["report"]["supercommutators"]["Qt,Qt"]["computed"] == "2Pt"
    assert "✓ supercommutators: 25/25 cells" in capsys.readouterr().out


def test_sentinel_is_detected(results, capsys):
    assert run(results, "verify-algebra", "--sentinel") == 1
    assert "('Qt', 'Qt')" in capsys.readouterr().out
    assert report(results, "verify-algebra")["report"]["supercommutators"]["Qt,Qt"]["pass"] is False


def test_verify_invariants_and_kdv_check(results):
    assert run(results, "verify-invariants") == 0
    data = report(results, "verify-invariants")["report"]
    assert len(data["subalgebras"]) == 32
    assert data["s5_demo"]["reducible"] is False
    assert run(results, "kdv-check", "--window=-1:1:-1:1:11") == 0


def test_solve_writes_and_certifies(results, tmp_path):
    out = tmp_path / "s4" / "wave"
    code = run(results, "solve", *S4_FLAGS, "--out", str(out), "--format", "json", "--format", "csv")
    assert code == 0
    assert (tmp_path / "s4" / "wave.json").exists()
    frame = pd.read_csv(tmp_path / "s4" / "wave.csv")
    assert "beta_m0" in frame.columns
    data = report(results, "solve")["report"]
    assert data["certified"] is True
    assert data["checks"]["energy_drift"] < 1e-8

    assert run(results, "certify", "--solution", str(out.with_suffix(".json")),
               "--window=-0.5:0.5:-0.5:0.5:11") == 0
    assert run(results, "reduce", "--solution", str(out.with_suffix(".json"))) == 0


def test_reduce_null_only_class(results):
    assert run(results, "reduce", "--subalgebra", "S6", "--mu", "[[1, 1.0]]", "--grid=-5:5:51") == 0
    assert report(results, "reduce")["report"]["null_only"] is True


def test_nonstandard_class_is_not_reducible(results):
    assert run(results, "solve", "--subalgebra", "S5", "--grid=-1:1:11") == 3
    error = report(results, "solve")["report"]["error"]
    assert error["type"] == "NotReducible"


def test_s1_window_must_stay_in_positive_time(results):
    code = run(results, "solve", "--subalgebra", "S1", "--ic-alpha", "0.05", "--ic-dalpha", "0.02",
               "--grid", "0.5:4.5:201", "--window", "0.5:1.5:-1:1:5")
    assert code == 2
    assert report(results, "solve")["report"]["error"]["type"] == "DomainError"


def test_numerical_blow_up_exit_code(results):
    code = run(results, "solve", "--subalgebra", "S4", "--eps", "-1", "--ic-alpha", "3.0",
               "--grid=-5:5:101", "--window=-1:1:-1:1:5")
    assert code == 4


def test_configuration_errors(results, capsys):
    assert run(results, "solve", "--subalgebra", "S17") == 2
    assert run(results, "solve", "--mu", "[[3, 1.0]]") == 2
    assert "must be Odd" in capsys.readouterr().out
    assert run(results, "certify") == 2


def test_elliptic_table(results):
    assert run(results, "elliptic", "--points", "0.25", "0.5", "1.0", "--modulus", "0.5") == 0
    (table,) = results.glob("*_elliptic.csv")
    frame = pd.read_csv(table)
    assert list(frame["u"]) == [0.25, 0.5, 1.0]
    assert {"sn", "cn", "dn", "F_amplitude", "wp", "wp_prime"} <= set(frame.columns)
    data = report(results, "elliptic")["report"]
    assert data["poles"] == 0
    assert data["invariants"]["g2_agrees"] is True


def test_elliptic_table_at_unit_modulus(results):
    assert run(results, "elliptic", "--points", "0.5", "2.0", "--modulus", "1") == 0
    frame = pd.read_csv(next(results.glob("*_elliptic.csv")))
    np.testing.assert_allclose(frame["sn"], np.tanh([0.5, 2.0]))
    assert frame["F_amplitude"][0] == pytest.approx(math.atanh(math.sin(0.5)))
    assert np.isinf(frame["F_amplitude"][1])
    assert report(results, "elliptic")["report"]["K"] is None


def test_run_log_collects_every_execution(results):
    run(results, "verify-algebra")
    run(results, "solve", "--subalgebra", "S5", "--grid=-1:1:11")
    entries = read_run_log(results)
    assert [e["exit_code"] for e in entries] == [0, 3]
    assert entries[1]["subalgebra"] == "S5"


def test_flags_override_run_files(tmp_path):
    preset = tmp_path / "preset"
    preset.mkdir()
    (preset / "run.yaml").write_text("command: solve\nsubalgebra: S8\nmu: [[1, 1.0]]\nic:\n  alpha: 0.3\n")
    args = build_parser().parse_args(["solve", "--config", str(preset), "--ic-dalpha", "0.2", "--eps", "-1"])
    cfg = run_config_from_args(args, Config())
    assert cfg.subalgebra == "S8" and cfg.epsilon == -1
    assert cfg.ic == {"alpha": 0.3, "dalpha": 0.2}
    assert cfg.grid == "-5:5:2001"


def test_list_presets(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "s4_bosonic" in out and "s6_null" in out
