"""Command-line front end.

Subcommands
    solve-exp      closed form, exponential model
    solve-linear   closed form, linear model
    solve-general  energy balance for any profile (parametric or tabulated)
    solve-family   root finding over a family of supply curves
    no-switchoff   time the demand is met if the device never switches off
    curve          rate / cumulative-energy table (CSV), optional figure
    simulate       Monte-Carlo mean of the noisy line on a grid (CSV)
    solve-noisy    switch-off time for the noisy line, with MC verification

Parameters come from flags, optionally seeded by a flat JSON config file
(--config); explicit flags win.  The default RNG seed is the SWITCHOFF_SEED
environment variable when set.  Exit codes: 0 success, 2 bad usage or
invalid input data, 3 infeasible problem (QTooSmall / NotBracketed),
1 numeric or I/O failure.  Every failure prints a single
"ErrorName: detail" line to stderr.
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ContinuityMismatch,
    DegenerateProfile,
    EmptySamples,
    InvalidParams,
    MaxIterationsExceeded,
    MeanVerificationFailed,
    NonFinite,
    NonMonotoneSamples,
    NotBracketed,
    QTooSmall,
    StepTooLarge,
    SwitchOffBeforePeak,
    SwitchOffError,
    UsageError,
)
from .numerics import DEFAULT_TOLERANCE, Interval, Tolerance
from .profiles import (
    ExponentialParams,
    LinearParams,
    SupplyProfile,
    exponential_profile,
    linear_profile,
    rate_at,
    tabulated_profile,
)
from .solver import (
    SwitchOffSolution,
    family_from_profile,
    no_switchoff_time,
    solve_exponential,
    solve_family,
    solve_general,
    solve_linear,
)
from .stochastic import MeanEstimate, SimConfig, estimate_mean, phases_from_profile, solve_noisy
from .profiles import _integrate_piecewise

__all__ = ["RunConfig", "parse_args", "run", "main", "emit_curve"]

_COMMANDS = (
    "solve-exp",
    "solve-linear",
    "solve-general",
    "solve-family",
    "no-switchoff",
    "curve",
    "simulate",
    "solve-noisy",
)

# Flags that must be strictly positive when present.
_POSITIVE = ("a", "b", "t0", "T", "Q", "dt")
# Keys a JSON solve output may contain beyond the input flags; ignored on
# ingest so that an output file round-trips as a config.
_OUTPUT_KEYS = frozenset(
    {
        "command",
        "t1_hat",
        "t2",
        "y",
        "residual",
        "method",
        "feasible",
        "no_switchoff_time",
        "delivered_mean",
        "delivered_stderr",
        "delivered_drift",
        "demand",
        "n_paths",
    }
)


@dataclass
class RunConfig:
    """Everything one invocation needs, after config/flag merging."""

    command: str
    a: Optional[float] = None
    b: Optional[float] = None
    t0: Optional[float] = None
    T: Optional[float] = None
    Q: Optional[float] = None
    t1: Optional[float] = None
    dt: Optional[float] = None
    c3: Optional[float] = None
    c4: Optional[float] = None
    t1_lo: Optional[float] = None
    t1_hi: Optional[float] = None
    paths: Optional[int] = None
    points: Optional[int] = None
    seed: Optional[int] = None
    ramp_csv: Optional[str] = None
    decay_csv: Optional[str] = None
    config: Optional[str] = None
    out: Optional[str] = None
    plot: Optional[str] = None
    format: str = "text"


_FLOAT_KEYS = ("a", "b", "t0", "T", "Q", "t1", "dt", "c3", "c4", "t1_lo", "t1_hi")
_INT_KEYS = ("paths", "points", "seed")
_STR_KEYS = ("ramp_csv", "decay_csv", "out", "plot", "format")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchoff",
        description="Earliest switch-off times for ramp/plateau/decay energy supplies.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in _COMMANDS:
        p = sub.add_parser(name)
        for flag in _FLOAT_KEYS:
            p.add_argument(f"--{flag.replace('_', '-')}", type=float, default=None, dest=flag)
        for flag in _INT_KEYS:
            p.add_argument(f"--{flag}", type=int, default=None, dest=flag)
        p.add_argument("--ramp-csv", default=None, dest="ramp_csv")
        p.add_argument("--decay-csv", default=None, dest="decay_csv")
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--plot", default=None)
        p.add_argument("--format", default=None, choices=("text", "json", "csv"))
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read --config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"--config file {path} must hold a flat JSON object")
    return data


def _merge_config(cfg: RunConfig, data: dict) -> None:
    valid = {f.name for f in fields(RunConfig)} - {"command", "config"}
    for key, value in data.items():
        if key in _OUTPUT_KEYS:
            continue
        if key not in valid:
            raise UsageError(f"unknown config key '{key}'")
        if getattr(cfg, key) is not None and key != "format":
            continue  # explicit flag wins
        if key == "format" and cfg.format != "text":
            continue
        if key in _FLOAT_KEYS:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise UsageError(f"config key '{key}' must be a number")
            setattr(cfg, key, float(value))
        elif key in _INT_KEYS:
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value != int(value):
                raise UsageError(f"config key '{key}' must be an integer")
            setattr(cfg, key, int(value))
        else:
            if not isinstance(value, str):
                raise UsageError(f"config key '{key}' must be a string")
            setattr(cfg, key, value)


def parse_args(argv: Sequence[str]) -> RunConfig:
    """Parse argv into a RunConfig, merging in --config and defaults.

    Raises UsageError (or lets argparse exit with code 2) on unknown flags,
    missing required parameters, or out-of-range values.
    """
    ns = _build_parser().parse_args(list(argv))
    cfg = RunConfig(command=ns.command)
    for f in fields(RunConfig):
        if f.name in ("command", "format"):
            continue
        setattr(cfg, f.name, getattr(ns, f.name, None))
    cfg.format = ns.format if ns.format is not None else "text"
    if ns.format is None:
        cfg.format = "text"
    if cfg.config is not None:
        _merge_config(cfg, _load_config(cfg.config))
    if cfg.seed is None:
        env = os.environ.get("SWITCHOFF_SEED")
        if env is not None:
            try:
                cfg.seed = int(env)
            except ValueError as exc:
                raise UsageError(f"SWITCHOFF_SEED must be an integer, got {env!r}") from exc
        else:
            cfg.seed = 0
    _validate(cfg)
    return cfg


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            flag = "--" + name.replace("_", "-")
            raise UsageError(f"missing required flag {flag} for {cfg.command}")


def _validate(cfg: RunConfig) -> None:
    for name in _POSITIVE:
        value = getattr(cfg, name)
        if value is not None and not (math.isfinite(value) and value > 0.0):
            raise UsageError(f"--{name} must be positive and finite, got {value}")
    for name in ("t1", "t1_lo", "t1_hi"):
        value = getattr(cfg, name)
        if value is not None and not math.isfinite(value):
            raise UsageError(f"--{name.replace('_', '-')} must be finite, got {value}")
    if cfg.points is not None and cfg.points < 2:
        raise UsageError(f"--points must be >= 2, got {cfg.points}")
    if cfg.paths is not None and cfg.paths < 2:
        raise UsageError(f"--paths must be >= 2, got {cfg.paths}")
    if (cfg.ramp_csv is None) != (cfg.decay_csv is None):
        raise UsageError("--ramp-csv and --decay-csv must be given together")

    need_profile = ("solve-general", "solve-family", "no-switchoff", "curve")
    if cfg.command == "solve-exp":
        _require(cfg, "a", "b", "t0", "T", "Q")
    elif cfg.command == "solve-linear":
        _require(cfg, "a", "t0", "T", "Q")
    elif cfg.command in need_profile:
        if cfg.ramp_csv is None:
            _require(cfg, "a", "t0", "T")
        if cfg.command == "curve":
            if cfg.t1 is None and cfg.Q is None:
                raise UsageError("curve needs --t1 or --Q to place the switch-off")
        else:
            _require(cfg, "Q")
    elif cfg.command == "simulate":
        _require(cfg, "a", "b", "t0", "T", "t1")
    elif cfg.command == "solve-noisy":
        _require(cfg, "a", "b", "t0", "T", "Q")
    if cfg.t1_lo is not None and cfg.t1_hi is not None and cfg.t1_lo > cfg.t1_hi:
        raise UsageError("--t1-lo must not exceed --t1-hi")


def _read_rate_samples(path: str) -> list[tuple[float, float]]:
    """Read (t, rate) rows from a CSV file with a 't,rate' header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise EmptySamples(f"{path} holds no samples")
    start = 0
    try:
        float(rows[0][0])
    except (ValueError, IndexError):
        start = 1  # header row
    samples = []
    for row in rows[start:]:
        if len(row) < 2:
            raise UsageError(f"{path}: expected 't,rate' rows, got {row!r}")
        try:
            samples.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise UsageError(f"{path}: non-numeric sample row {row!r}") from exc
    return samples


def _profile_from_config(cfg: RunConfig) -> SupplyProfile:
    if cfg.ramp_csv is not None:
        return tabulated_profile(
            _read_rate_samples(cfg.ramp_csv), _read_rate_samples(cfg.decay_csv)
        )
    if cfg.b is not None:
        return exponential_profile(ExponentialParams(a=cfg.a, b=cfg.b, t0=cfg.t0, T=cfg.T))
    return linear_profile(LinearParams(a=cfg.a, t0=cfg.t0, T=cfg.T))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _params_payload(cfg: RunConfig, *names: str) -> dict:
    payload = {}
    for name in names:
        value = getattr(cfg, name)
        if value is not None:
            payload[name] = value
    return payload


def _emit_text(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _emit_solution(
    cfg: RunConfig, sol: SwitchOffSolution, params: dict, extra: Optional[dict] = None
) -> None:
    feasible = "true" if sol.feasible else "false"
    if cfg.format == "json":
        payload = {"command": cfg.command}
        payload.update(params)
        payload.update(
            t1_hat=sol.t1_hat,
            t2=sol.t2,
            y=sol.y,
            residual=sol.delivered_residual,
            method=sol.method,
            feasible=sol.feasible,
        )
        if extra:
            payload.update(extra)
        _emit_text(json.dumps(payload, indent=2), cfg.out)
    elif cfg.format == "csv":
        head = ["t1_hat", "t2", "y", "residual", "method", "feasible"]
        row = [_fmt(sol.t1_hat), _fmt(sol.t2), _fmt(sol.y), _fmt(sol.delivered_residual), sol.method, feasible]
        if extra:
            head += list(extra)
            row += [_fmt(v) if isinstance(v, float) else str(v) for v in extra.values()]
        _emit_text(",".join(head) + "\n" + ",".join(row) + "\n", cfg.out)
    else:
        line = (
            f"t1_hat={_fmt(sol.t1_hat)} t2={_fmt(sol.t2)} y={_fmt(sol.y)} "
            f"residual={_fmt(sol.delivered_residual)} method={sol.method} feasible={feasible}"
        )
        if extra:
            line += "\n" + " ".join(
                f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in extra.items()
            )
        _emit_text(line + "\n", cfg.out)


def _curve_table(
    profile: SupplyProfile,
    t1: float,
    n_points: int,
    tol: Tolerance,
) -> tuple[np.ndarray, list[float], list[float]]:
    t2 = t1 + profile.T
    grid = np.linspace(0.0, t2, n_points)
    cuts = profile.breakpoints(t1)
    rates = [rate_at(profile, t1, float(t)) for t in grid]
    cumulative = [0.0]
    total = 0.0
    for lo, hi in zip(grid, grid[1:]):
        total += _integrate_piecewise(
            lambda t: rate_at(profile, t1, t), float(lo), float(hi), cuts, tol
        )
        cumulative.append(total)
    return grid, rates, cumulative


def emit_curve(
    profile: SupplyProfile,
    t1: float,
    n_points: int,
    out: Optional[str] = None,
    tol: Tolerance = DEFAULT_TOLERANCE,
    estimate: Optional[MeanEstimate] = None,
) -> str:
    """Write the rate / cumulative-energy table as CSV, returning the text.

    Columns are t,rate,cumulative_energy over [0, t1 + T]; when a
    Monte-Carlo estimate on the same grid is supplied, mean and stderr
    columns are appended.  Floats are rendered with 17 significant digits
    and '.' decimals, so byte output is deterministic for identical inputs.
    """
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    grid, rates, cumulative = _curve_table(profile, t1, n_points, tol)
    stochastic = estimate is not None
    if stochastic:
        if len(estimate.grid) != len(grid) or np.max(np.abs(estimate.grid - grid)) > 1e-9:
            raise ValueError("estimate grid does not match the curve grid")
    lines = ["t,rate,cumulative_energy" + (",mean,stderr" if stochastic else "")]
    for i, t in enumerate(grid):
        row = f"{_fmt(float(t))},{_fmt(rates[i])},{_fmt(cumulative[i])}"
        if stochastic:
            row += f",{_fmt(float(estimate.mean[i]))},{_fmt(float(estimate.stderr[i]))}"
        lines.append(row)
    text = "\n".join(lines) + "\n"
    if out is not None:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _run_curve(cfg: RunConfig) -> int:
    profile = _profile_from_config(cfg)
    if cfg.t1 is not None:
        t1 = cfg.t1
    else:
        t1 = solve_general(profile, cfg.Q).t1_hat
    n_points = cfg.points if cfg.points is not None else 200
    grid, rates, cumulative = _curve_table(profile, t1, n_points, DEFAULT_TOLERANCE)
    lines = ["t,rate,cumulative_energy"]
    for t, r, c in zip(grid, rates, cumulative):
        lines.append(f"{_fmt(float(t))},{_fmt(r)},{_fmt(c)}")
    _emit_text("\n".join(lines) + "\n", cfg.out)
    if cfg.plot is not None:
        from .plots import render_curve_figure

        render_curve_figure(
            cfg.plot, grid, rates, cumulative,
            t1=t1, t2=t1 + profile.T, demand=cfg.Q,
        )
    return 0


def _run_simulate(cfg: RunConfig) -> int:
    p = ExponentialParams(a=cfg.a, b=cfg.b, t0=cfg.t0, T=cfg.T)
    profile = exponential_profile(p)
    noise = (cfg.c3 if cfg.c3 is not None else 0.0, cfg.c4 if cfg.c4 is not None else 0.0)
    sde = phases_from_profile(p, cfg.t1).with_noise(noise)
    sim = SimConfig(
        dt=cfg.dt if cfg.dt is not None else 1e-3,
        n_paths=cfg.paths if cfg.paths is not None else 256,
        seed=cfg.seed,
    )
    n_points = cfg.points if cfg.points is not None else 200
    grid, rates, cumulative = _curve_table(profile, cfg.t1, n_points, DEFAULT_TOLERANCE)
    est = estimate_mean(sde, sim, grid)
    lines = ["t,rate,cumulative_energy,mean,stderr"]
    for i, t in enumerate(grid):
        lines.append(
            f"{_fmt(float(t))},{_fmt(rates[i])},{_fmt(cumulative[i])},"
            f"{_fmt(float(est.mean[i]))},{_fmt(float(est.stderr[i]))}"
        )
    _emit_text("\n".join(lines) + "\n", cfg.out)
    if cfg.plot is not None:
        from .plots import render_curve_figure

        render_curve_figure(
            cfg.plot, grid, rates, cumulative,
            t1=cfg.t1, t2=cfg.t1 + p.T, demand=cfg.Q,
            mean=est.mean, stderr=est.stderr,
        )
    return 0


def run(cfg: RunConfig) -> int:
    """Execute a parsed invocation; returns the process exit code."""
    if cfg.command == "solve-exp":
        sol = solve_exponential(
            ExponentialParams(a=cfg.a, b=cfg.b, t0=cfg.t0, T=cfg.T), cfg.Q
        )
        _emit_solution(cfg, sol, _params_payload(cfg, "a", "b", "t0", "T", "Q"))
    elif cfg.command == "solve-linear":
        sol = solve_linear(LinearParams(a=cfg.a, t0=cfg.t0, T=cfg.T), cfg.Q)
        _emit_solution(cfg, sol, _params_payload(cfg, "a", "t0", "T", "Q"))
    elif cfg.command == "solve-general":
        sol = solve_general(_profile_from_config(cfg), cfg.Q)
        _emit_solution(
            cfg, sol,
            _params_payload(cfg, "a", "b", "t0", "T", "Q", "ramp_csv", "decay_csv"),
        )
    elif cfg.command == "solve-family":
        domain = None
        if cfg.t1_lo is not None and cfg.t1_hi is not None:
            domain = Interval(cfg.t1_lo, cfg.t1_hi)
        family = family_from_profile(_profile_from_config(cfg), t1_domain=domain)
        sol = solve_family(family, cfg.Q)
        _emit_solution(
            cfg, sol,
            _params_payload(
                cfg, "a", "b", "t0", "T", "Q", "t1_lo", "t1_hi", "ramp_csv", "decay_csv"
            ),
        )
    elif cfg.command == "no-switchoff":
        t = no_switchoff_time(_profile_from_config(cfg), cfg.Q)
        params = _params_payload(cfg, "a", "b", "t0", "T", "Q", "ramp_csv", "decay_csv")
        if cfg.format == "json":
            payload = {"command": cfg.command, **params, "no_switchoff_time": t}
            _emit_text(json.dumps(payload, indent=2), cfg.out)
        elif cfg.format == "csv":
            _emit_text("no_switchoff_time\n" + _fmt(t) + "\n", cfg.out)
        else:
            _emit_text(f"no_switchoff_time={_fmt(t)}\n", cfg.out)
    elif cfg.command == "curve":
        return _run_curve(cfg)
    elif cfg.command == "simulate":
        return _run_simulate(cfg)
    elif cfg.command == "solve-noisy":
        p = ExponentialParams(a=cfg.a, b=cfg.b, t0=cfg.t0, T=cfg.T)
        noise = (cfg.c3 if cfg.c3 is not None else 0.0, cfg.c4 if cfg.c4 is not None else 0.0)
        sim = SimConfig(
            dt=cfg.dt if cfg.dt is not None else 1e-3,
            n_paths=cfg.paths if cfg.paths is not None else 256,
            seed=cfg.seed,
        )
        sol, verification = solve_noisy(p, noise, cfg.Q, sim)
        extra = {
            "delivered_mean": verification.delivered_mean,
            "delivered_stderr": verification.delivered_stderr,
            "delivered_drift": verification.delivered_drift,
            "demand": verification.demand,
            "n_paths": verification.n_paths,
            "dt": verification.dt,
        }
        _emit_solution(
            cfg, sol,
            _params_payload(cfg, "a", "b", "t0", "T", "Q", "c3", "c4", "paths", "seed"),
            extra=extra,
        )
    else:  # pragma: no cover - argparse restricts the choices
        raise UsageError(f"unknown command {cfg.command!r}")
    return 0


def _fail(exc: BaseException) -> None:
    sys.stderr.write(f"{type(exc).__name__}: {exc}\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the exit code instead of raising."""
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else list(argv))
    except UsageError as exc:
        _fail(exc)
        return 2
    except SystemExit as exc:  # argparse --help or its own usage errors
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    try:
        return run(cfg)
    except (QTooSmall, NotBracketed) as exc:
        _fail(exc)
        return 3
    except (
        UsageError,
        InvalidParams,
        SwitchOffBeforePeak,
        NonMonotoneSamples,
        ContinuityMismatch,
        EmptySamples,
        DegenerateProfile,
    ) as exc:
        _fail(exc)
        return 2
    except (
        NonFinite,
        MaxIterationsExceeded,
        StepTooLarge,
        MeanVerificationFailed,
        SwitchOffError,
        OSError,
    ) as exc:
        _fail(exc)
        return 1
