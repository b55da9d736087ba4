"""Command-line behavior: parsing, outputs, exit codes, determinism."""

import json
import math

import numpy as np
import pytest

from switchoff import ExponentialParams, exponential_profile
from switchoff.cli import emit_curve, main, parse_args

LN2 = math.log(2.0)
EXP_FLAGS = ["--a", "1", "--b", "1", "--t0", str(LN2), "--T", str(LN2)]


def rows_of(csv_text):
    lines = csv_text.strip().split("\n")
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_parse_args_maps_flags():
    cfg = parse_args(["solve-exp", "--a", "1.5", "--b", "2", "--t0", "1", "--T", "3", "--Q", "4"])
    assert cfg.command == "solve-exp"
    assert (cfg.a, cfg.b, cfg.t0, cfg.T, cfg.Q) == (1.5, 2.0, 1.0, 3.0, 4.0)
    assert cfg.seed == 0  # default
    assert cfg.format == "text"


def test_parse_args_rejects_nonpositive_rate():
    from switchoff import UsageError

    with pytest.raises(UsageError, match="--a"):
        parse_args(["solve-exp", "--a", "-1", "--b", "1", "--t0", "1", "--T", "1", "--Q", "2"])


def test_parse_args_requires_flags():
    from switchoff import UsageError

    with pytest.raises(UsageError, match="--Q"):
        parse_args(["solve-exp", "--a", "1", "--b", "1", "--t0", "1", "--T", "1"])


def test_seed_comes_from_environment(monkeypatch):
    monkeypatch.setenv("SWITCHOFF_SEED", "77")
    cfg = parse_args(["solve-exp"] + EXP_FLAGS + ["--Q", "2"])
    assert cfg.seed == 77
    cfg = parse_args(["solve-exp"] + EXP_FLAGS + ["--Q", "2", "--seed", "5"])
    assert cfg.seed == 5


def test_solve_linear_text_output(capsys):
    code = main(["solve-linear", "--a", "2", "--t0", "1", "--T", "1", "--Q", "5"])
    out = capsys.readouterr().out
    assert code == 0
    assert "t1_hat=2.5" in out
    assert "t2=3.5" in out
    assert "method=closed_form_linear" in out
    assert "feasible=true" in out


def test_infeasible_demand_exit_code(capsys):
    code = main(["solve-linear", "--a", "2", "--t0", "1", "--T", "1", "--Q", "1.5"])
    err = capsys.readouterr().err
    assert code == 3
    assert err.startswith("QTooSmall:")


def test_unknown_flag_exit_code(capsys):
    assert main(["solve-exp", "--nope", "1"]) == 2


def test_unknown_command_exit_code(capsys):
    assert main(["frobnicate"]) == 2


def test_json_output_and_config_round_trip(tmp_path, capsys):
    out_file = tmp_path / "sol.json"
    code = main(
        ["solve-exp"] + EXP_FLAGS + ["--Q", "2", "--format", "json", "--out", str(out_file)]
    )
    assert code == 0
    payload = json.loads(out_file.read_text())
    assert payload["t1_hat"] == pytest.approx(3.0 * LN2, abs=1e-12)
    assert payload["method"] == "closed_form_exponential"
    assert payload["feasible"] is True

    # The output file round-trips as a config; result keys are ignored.
    code = main(["solve-exp", "--config", str(out_file)])
    out = capsys.readouterr().out
    assert code == 0
    assert f"t1_hat={payload['t1_hat']:.17g}" in out


def test_flags_override_config(tmp_path, capsys):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"a": 2.0, "t0": 1.0, "T": 1.0, "Q": 5.0}))
    code = main(["solve-linear", "--config", str(cfg_file), "--Q", "7"])
    out = capsys.readouterr().out
    assert code == 0
    assert "t1_hat=3.5" in out  # q/a - T/2 + t0/2 = 3.5 - 0.5 + 0.5


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"a": 2.0, "bogus": 1.0}))
    code = main(["solve-linear", "--config", str(cfg_file)])
    err = capsys.readouterr().err
    assert code == 2
    assert "bogus" in err


def test_curve_csv_shape_and_totals(capsys):
    code = main(["curve"] + EXP_FLAGS + ["--Q", "2", "--points", "1000"])
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert header == ["t", "rate", "cumulative_energy"]
    assert len(rows) == 1000
    assert float(rows[0][1]) == 0.0
    assert float(rows[-1][1]) <= 1e-9
    cumulative = np.array([float(r[2]) for r in rows])
    assert cumulative[0] == 0.0
    assert abs(cumulative[-1] - 2.0) <= 1e-6
    assert np.all(np.diff(cumulative) >= -1e-12)


def test_curve_with_explicit_switch_off(capsys):
    code = main(["curve"] + EXP_FLAGS + ["--t1", str(3.0 * LN2), "--points", "9"])
    out = capsys.readouterr().out
    assert code == 0
    _, rows = rows_of(out)
    assert float(rows[-1][0]) == pytest.approx(4.0 * LN2, abs=1e-12)


def test_curve_bytes_are_deterministic(tmp_path):
    paths = []
    for name in ("one.csv", "two.csv"):
        target = tmp_path / name
        assert main(["curve"] + EXP_FLAGS + ["--Q", "2", "--points", "50", "--out", str(target)]) == 0
        paths.append(target.read_bytes())
    assert paths[0] == paths[1]


def test_emit_curve_function(tmp_path):
    profile = exponential_profile(ExponentialParams(a=1.0, b=1.0, t0=LN2, T=LN2))
    target = tmp_path / "curve.csv"
    text = emit_curve(profile, 3.0 * LN2, 20, out=str(target))
    assert target.read_text() == text
    header, rows = rows_of(text)
    assert header == ["t", "rate", "cumulative_energy"]
    assert len(rows) == 20
    assert emit_curve(profile, 3.0 * LN2, 20) == text  # pure function of inputs


def test_plot_writes_png(tmp_path):
    png = tmp_path / "curve.png"
    code = main(
        ["curve"] + EXP_FLAGS + ["--Q", "2", "--points", "40",
         "--out", str(tmp_path / "c.csv"), "--plot", str(png)]
    )
    assert code == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_simulate_zero_noise_stderr_column(capsys):
    code = main(
        ["simulate"] + EXP_FLAGS
        + ["--t1", str(3.0 * LN2), "--dt", "0.01", "--paths", "8", "--points", "30"]
    )
    out = capsys.readouterr().out
    assert code == 0
    header, rows = rows_of(out)
    assert header == ["t", "rate", "cumulative_energy", "mean", "stderr"]
    assert len(rows) == 30
    assert all(float(r[4]) == 0.0 for r in rows)
    # Noise-free Monte Carlo mean tracks the rate up to Euler bias, O(dt).
    for r in rows:
        assert abs(float(r[3]) - float(r[1])) <= 2e-2


def test_simulate_is_seed_deterministic(capsys):
    args = (
        ["simulate"] + EXP_FLAGS
        + ["--t1", str(3.0 * LN2), "--dt", "0.01", "--paths", "16",
           "--c4", "0.3", "--points", "10", "--seed", "3"]
    )
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    assert main(args[:-1] + ["4"]) == 0
    assert capsys.readouterr().out != first


def test_tabulated_csv_ingestion(tmp_path, capsys):
    ramp = tmp_path / "ramp.csv"
    decay = tmp_path / "decay.csv"
    ramp.write_text("t,rate\n0,0\n1,2\n")
    decay.write_text("t,rate\n0,2\n1,0\n")
    code = main(
        ["solve-general", "--ramp-csv", str(ramp), "--decay-csv", str(decay), "--Q", "5"]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "t1_hat=2.5" in out
    assert "method=energy_balance" in out


def test_tabulated_csv_requires_both_files(tmp_path):
    ramp = tmp_path / "ramp.csv"
    ramp.write_text("t,rate\n0,0\n1,2\n")
    assert main(["solve-general", "--ramp-csv", str(ramp), "--Q", "5"]) == 2


def test_malformed_sample_csv(tmp_path, capsys):
    ramp = tmp_path / "ramp.csv"
    decay = tmp_path / "decay.csv"
    ramp.write_text("t,rate\n0,zero\n1,2\n")
    decay.write_text("t,rate\n0,2\n1,0\n")
    code = main(
        ["solve-general", "--ramp-csv", str(ramp), "--decay-csv", str(decay), "--Q", "5"]
    )
    assert code == 2
    assert "UsageError" in capsys.readouterr().err


def test_family_not_bracketed_exit_code(capsys):
    code = main(
        ["solve-family"] + EXP_FLAGS
        + ["--Q", "100", "--t1-lo", "1", "--t1-hi", "3"]
    )
    err = capsys.readouterr().err
    assert code == 3
    assert err.startswith("NotBracketed:")


def test_step_too_large_exit_code(capsys):
    code = main(["solve-noisy"] + EXP_FLAGS + ["--Q", "2", "--dt", "5", "--paths", "4"])
    err = capsys.readouterr().err
    assert code == 1
    assert err.startswith("StepTooLarge:")


def test_solve_noisy_reports_verification(capsys):
    code = main(
        ["solve-noisy"] + EXP_FLAGS
        + ["--Q", "2", "--dt", "0.001", "--paths", "64", "--c4", "0.4", "--seed", "2"]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "t1_hat=" in out
    assert "delivered_mean=" in out
    assert "delivered_stderr=" in out
    assert "n_paths=64" in out


def test_no_switchoff_output(capsys):
    code = main(["no-switchoff"] + EXP_FLAGS + ["--Q", "2"])
    out = capsys.readouterr().out
    assert code == 0
    value = float(out.strip().split("=")[1])
    assert value == pytest.approx(1.0 + 2.0 * LN2, abs=1e-9)


def test_help_exits_cleanly():
    assert main(["--help"]) == 0
