"""Noisy supply lines: piecewise-affine SDEs around the deterministic rate.

Each phase of the supply (ramp, plateau, decay) turns into an Ito SDE with
affine drift and affine noise,

    d(phi) = (c1 * phi + c2) dt + (c3 * phi + c4) dB,

whose drift coefficients are chosen so that the noise-free solution is the
deterministic rate itself.  Expectation kills the noise term, so the mean of
the noisy rate solves the drift ODE and the switch-off problem for the mean
line reduces to the deterministic one; the Monte-Carlo machinery here exists
to verify that reduction and to quantify spread, not to find the answer.

Reproducibility contract: path path_id of a simulation with seed s consumes
exactly the deviates of stream (s, path_id) in step order, so any batching of
paths yields bit-identical results and aggregation is a pure function of
(seed, n_paths, dt, grid).
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import (
    InvalidParams,
    MeanVerificationFailed,
    NonFinite,
    StepTooLarge,
    SwitchOffBeforePeak,
)
from .numerics import DEFAULT_TOLERANCE, Tolerance, normal_deviates
from .profiles import ExponentialParams, SupplyProfile
from .solver import EnergyDemand, SwitchOffSolution, _demand_value, solve_general

__all__ = [
    "AffinePhase",
    "PiecewiseAffineSde",
    "SimConfig",
    "Trajectory",
    "MeanEstimate",
    "NoisyVerification",
    "phases_from_profile",
    "analytic_mean",
    "simulate_path",
    "simulate_general_sde",
    "estimate_mean",
    "solve_noisy",
]

# Paths per simulation batch; fixed so batching never shows up in results.
_CHUNK = 1024


@dataclass(frozen=True)
class AffinePhase:
    """One phase of a piecewise-affine SDE on [start, end).

    c1, c2 are the drift coefficients, c3, c4 the noise coefficients.  The
    final phase of an SDE may leave end as None, meaning open-ended.
    """

    c1: float
    c2: float
    c3: float = 0.0
    c4: float = 0.0
    start: float = 0.0
    end: Optional[float] = None

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "c4", "start"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParams(f"{name} must be finite, got {getattr(self, name)}")
        if self.end is not None:
            if not math.isfinite(self.end):
                raise InvalidParams(f"end must be finite or None, got {self.end}")
            if self.end <= self.start:
                raise InvalidParams(
                    f"phase must have positive length, got [{self.start}, {self.end}]"
                )


@dataclass(frozen=True)
class PiecewiseAffineSde:
    """Contiguous affine phases starting at time 0, plus an initial value."""

    phases: tuple[AffinePhase, ...]
    initial_value: float = 0.0

    def __post_init__(self):
        if len(self.phases) == 0:
            raise InvalidParams("an SDE needs at least one phase")
        if not math.isfinite(self.initial_value):
            raise InvalidParams(f"initial value must be finite, got {self.initial_value}")
        first = self.phases[0]
        if abs(first.start) > 1e-12:
            raise InvalidParams(f"first phase must start at 0, got {first.start}")
        for i, (prev, nxt) in enumerate(zip(self.phases, self.phases[1:])):
            if prev.end is None:
                raise InvalidParams("only the final phase may be open-ended")
            if abs(nxt.start - prev.end) > 1e-12 * max(1.0, abs(prev.end)):
                raise InvalidParams(
                    f"phase {i + 1} starts at {nxt.start} but phase {i} ends at {prev.end}"
                )

    @property
    def end(self) -> Optional[float]:
        """End of coverage; None when the final phase is open."""
        return self.phases[-1].end

    def with_noise(
        self, noise: Union[tuple[float, float], Sequence[tuple[float, float]]]
    ) -> "PiecewiseAffineSde":
        """Copy of this SDE with (c3, c4) set per phase.

        A single (c3, c4) pair applies to every phase; otherwise one pair per
        phase is required.
        """
        pairs = _normalize_noise(noise, len(self.phases))
        phases = tuple(
            replace(ph, c3=float(c3), c4=float(c4))
            for ph, (c3, c4) in zip(self.phases, pairs)
        )
        return PiecewiseAffineSde(phases=phases, initial_value=self.initial_value)


def _normalize_noise(noise, n_phases: int) -> list[tuple[float, float]]:
    seq = list(noise)
    if len(seq) == 2 and all(isinstance(x, (int, float)) for x in seq):
        return [(float(seq[0]), float(seq[1]))] * n_phases
    if len(seq) != n_phases:
        raise InvalidParams(
            f"need one (c3, c4) pair per phase ({n_phases}), got {len(seq)}"
        )
    return [(float(c3), float(c4)) for c3, c4 in seq]


@dataclass(frozen=True)
class SimConfig:
    """Euler-Maruyama settings: step dt, number of paths, stream seed."""

    dt: float
    n_paths: int
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise InvalidParams(f"dt must be positive and finite, got {self.dt}")
        if self.n_paths < 1:
            raise InvalidParams(f"n_paths must be >= 1, got {self.n_paths}")


class Trajectory(NamedTuple):
    """One simulated path: times and the rate at those times."""

    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class MeanEstimate:
    """Monte-Carlo mean of the rate on a grid, with its standard error."""

    grid: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray


@dataclass(frozen=True)
class NoisyVerification:
    """Delivered-energy cross-check attached to a noisy solve.

    delivered_mean / delivered_stderr summarize the per-path energies
    integrated up to t2; delivered_drift is the same integral of the
    noise-free Euler path on the same grid, which is exactly the expectation
    of the discrete scheme.  Their gap to `demand` is pure time
    discretization and shrinks with dt.
    """

    delivered_mean: float
    delivered_stderr: float
    delivered_drift: float
    demand: float
    n_paths: int
    dt: float


def phases_from_profile(p: ExponentialParams, t1: float) -> PiecewiseAffineSde:
    """Drift phases whose noise-free solution is the exponential profile.

    Ramp: phi' = a * phi + a reproduces e^(a*t) - 1.
    Plateau: phi' = 0 holds the peak.
    Decay: phi' = -b * phi - b * C * e^(-b*T) with C the decay scale
    reproduces the matched exponential decay.  Noise coefficients start at
    zero; attach them with with_noise.
    """
    if not math.isfinite(t1):
        raise InvalidParams(f"switch-off time must be finite, got {t1}")
    if t1 < p.t0 - 1e-12 * max(1.0, p.t0):
        raise SwitchOffBeforePeak(
            f"switch-off at t1 = {t1:g} precedes the end of the ramp at t0 = {p.t0:g}"
        )
    t1_eff = max(t1, p.t0)
    plateau = math.expm1(p.a * p.t0)
    denom = -math.expm1(-p.b * p.T)
    scale = plateau / denom
    phases = [AffinePhase(c1=p.a, c2=p.a, start=0.0, end=p.t0)]
    if t1_eff > p.t0:
        phases.append(AffinePhase(c1=0.0, c2=0.0, start=p.t0, end=t1_eff))
    phases.append(
        AffinePhase(
            c1=-p.b,
            c2=-p.b * scale * math.exp(-p.b * p.T),
            start=t1_eff,
            end=t1_eff + p.T,
        )
    )
    return PiecewiseAffineSde(phases=tuple(phases), initial_value=0.0)


def _affine_mean_step(mu0: float, c1: float, c2: float, dt: float) -> float:
    """Mean of an affine-drift phase after dt, starting from mu0.

    mu(dt) = mu0 * e^(c1*dt) + (c2/c1) * (e^(c1*dt) - 1); for |c1*dt| below
    1e-8 a series keeps the c2 term accurate without dividing by c1 (which
    also covers c1 = 0 exactly).
    """
    if dt == 0.0:
        return mu0
    z = c1 * dt
    if abs(z) < 1e-8:
        return mu0 * (1.0 + z * (1.0 + 0.5 * z)) + c2 * dt * (1.0 + z * (0.5 + z / 6.0))
    return mu0 * math.exp(z) + (c2 / c1) * math.expm1(z)


def analytic_mean(sde: PiecewiseAffineSde) -> Callable[[float], float]:
    """Exact mean of the SDE as a function of time.

    The noise term has zero expectation, so the mean solves the drift ODE
    phase by phase; phase-start means are chained once and evaluation is a
    single exponential step inside the enclosing phase.
    """
    starts = [ph.start for ph in sde.phases]
    start_means = [sde.initial_value]
    for ph in sde.phases[:-1]:
        start_means.append(
            _affine_mean_step(start_means[-1], ph.c1, ph.c2, ph.end - ph.start)
        )
    last_end = sde.phases[-1].end

    def mean(t: float) -> float:
        if not math.isfinite(t):
            raise ValueError(f"time must be finite, got {t}")
        slack = 1e-12 * max(1.0, abs(t))
        if t < -slack or (last_end is not None and t > last_end + slack):
            raise ValueError(f"time {t} is outside the SDE's phase coverage")
        i = max(0, np.searchsorted(starts, t, side="right") - 1)
        ph = sde.phases[i]
        return _affine_mean_step(start_means[i], ph.c1, ph.c2, max(t - ph.start, 0.0))

    return mean


def _uniform_cells(lo: float, hi: float, dt: float) -> np.ndarray:
    n = max(1, math.ceil((hi - lo) / dt - 1e-9))
    return np.linspace(lo, hi, n + 1)


def _simulation_grid(sde: PiecewiseAffineSde, t_end: float, dt: float) -> np.ndarray:
    """Time grid for Euler-Maruyama: steps of at most dt, snapped to phase
    boundaries so no step straddles a coefficient switch."""
    if not (math.isfinite(t_end) and t_end > 0.0):
        raise ValueError(f"t_end must be positive and finite, got {t_end}")
    coverage = sde.end
    if coverage is not None and coverage < t_end * (1.0 - 1e-12):
        raise InvalidParams(
            f"phases cover [0, {coverage:g}] but t_end = {t_end:g} was requested"
        )
    pieces = [np.array([0.0])]
    for ph in sde.phases:
        if ph.start >= t_end:
            break
        hi = t_end if ph.end is None else min(ph.end, t_end)
        if hi <= ph.start:
            continue
        if ph.end is not None and ph.end <= t_end and dt > (ph.end - ph.start) * (1.0 + 1e-12):
            raise StepTooLarge(
                f"dt = {dt:g} exceeds the length {ph.end - ph.start:g} of the "
                f"phase starting at {ph.start:g}"
            )
        pieces.append(_uniform_cells(ph.start, hi, dt)[1:])
    return np.concatenate(pieces)


def _augment_grid(base: np.ndarray, extra: np.ndarray, dt: float) -> np.ndarray:
    """Insert extra times into base, skipping ones already there (within a
    negligible snap distance, so phase boundaries stay exact)."""
    tiny = 1e-9 * dt
    inserts = []
    for t in np.asarray(extra, dtype=float):
        i = int(np.searchsorted(base, t))
        near_left = i > 0 and abs(base[i - 1] - t) <= tiny
        near_right = i < base.size and abs(base[i] - t) <= tiny
        if not (near_left or near_right):
            inserts.append(t)
    if not inserts:
        return base
    return np.union1d(base, np.asarray(inserts, dtype=float))


def _nearest_indices(grid: np.ndarray, times: np.ndarray, dt: float) -> np.ndarray:
    idx = np.clip(np.searchsorted(grid, times), 0, grid.size - 1)
    left = np.clip(idx - 1, 0, grid.size - 1)
    use_left = np.abs(grid[left] - times) < np.abs(grid[idx] - times)
    out = np.where(use_left, left, idx)
    if np.any(np.abs(grid[out] - times) > 1e-9 * dt + 1e-30):
        raise ValueError("requested grid times are not on the simulation grid")
    return out


def _step_coefficients(sde: PiecewiseAffineSde, grid: np.ndarray):
    starts = np.asarray([ph.start for ph in sde.phases])
    mids = 0.5 * (grid[:-1] + grid[1:])
    idx = np.clip(np.searchsorted(starts, mids, side="right") - 1, 0, len(sde.phases) - 1)
    pick = lambda attr: np.asarray([getattr(ph, attr) for ph in sde.phases])[idx]
    return pick("c1"), pick("c2"), pick("c3"), pick("c4")


def _euler_kernel(grid, c1, c2, c3, c4, z, phi0) -> np.ndarray:
    """Euler-Maruyama over the grid for a batch of paths.

    z has shape (paths, steps).  Returns values of shape (paths, len(grid)).
    The update is written exactly as

        phi + (c1*phi + c2)*h + (c3*phi + c4)*sqrt(h)*z

    so that a scalar re-implementation with affine callables reproduces it
    bit for bit.
    """
    h = np.diff(grid)
    sqrt_h = np.sqrt(h)
    out = np.empty((z.shape[0], grid.size), dtype=float)
    phi = np.full(z.shape[0], float(phi0))
    out[:, 0] = phi
    for k in range(h.size):
        phi = phi + (c1[k] * phi + c2[k]) * h[k] + (c3[k] * phi + c4[k]) * sqrt_h[k] * z[:, k]
        out[:, k + 1] = phi
    if not np.all(np.isfinite(phi)):
        raise NonFinite("simulation produced non-finite values; reduce dt")
    return out


def simulate_path(
    sde: PiecewiseAffineSde,
    config: SimConfig,
    path_id: int = 0,
    t_end: Optional[float] = None,
) -> Trajectory:
    """Simulate one path of the SDE up to t_end.

    t_end defaults to the end of the last phase, which must be bounded in
    that case.  The grid uses steps of at most config.dt, snapped to phase
    boundaries.
    The path is fully determined by (config.seed, path_id): it consumes the
    deviates of that stream in step order and nothing else.  Paths are not
    clipped; with noise attached, excursions below zero are real samples.
    """
    if t_end is None:
        t_end = sde.end
        if t_end is None:
            raise InvalidParams("t_end is required when the last phase is open-ended")
    grid = _simulation_grid(sde, t_end, config.dt)
    coeffs = _step_coefficients(sde, grid)
    z = normal_deviates(config.seed, path_id, grid.size - 1)[None, :]
    values = _euler_kernel(grid, *coeffs, z, sde.initial_value)
    return Trajectory(times=grid, values=values[0])


def simulate_general_sde(
    drift: Callable[[float, float], float],
    diffusion: Callable[[float, float], float],
    config: SimConfig,
    t_end: float,
    path_id: int = 0,
    initial_value: float = 0.0,
) -> Trajectory:
    """Euler-Maruyama for arbitrary drift/diffusion callables.

    Uniform grid with steps of at most config.dt.  With affine coefficients
    this reproduces simulate_path on a single-phase SDE exactly, deviate for
    deviate, which is the equivalence the tests pin down.
    """
    if not (math.isfinite(t_end) and t_end > 0.0):
        raise ValueError(f"t_end must be positive and finite, got {t_end}")
    grid = _uniform_cells(0.0, t_end, config.dt)
    z = normal_deviates(config.seed, path_id, grid.size - 1)
    values = np.empty(grid.size, dtype=float)
    phi = float(initial_value)
    values[0] = phi
    for k in range(grid.size - 1):
        t = grid[k]
        h = grid[k + 1] - grid[k]
        phi = phi + drift(t, phi) * h + diffusion(t, phi) * math.sqrt(h) * z[k]
        values[k + 1] = phi
    if not np.all(np.isfinite(values)):
        raise NonFinite("simulation produced non-finite values; reduce dt")
    return Trajectory(times=grid, values=values)


def _batched_values(sde, config, grid, columns):
    """Simulate all paths on `grid`, returning values at `columns` indices,
    rows ordered by path_id."""
    n_steps = grid.size - 1
    coeffs = _step_coefficients(sde, grid)
    out = np.empty((config.n_paths, len(columns)), dtype=float)
    energies = np.empty(config.n_paths, dtype=float)
    for lo in range(0, config.n_paths, _CHUNK):
        hi = min(lo + _CHUNK, config.n_paths)
        z = np.empty((hi - lo, n_steps), dtype=float)
        for i, pid in enumerate(range(lo, hi)):
            z[i] = normal_deviates(config.seed, pid, n_steps)
        values = _euler_kernel(grid, *coeffs, z, sde.initial_value)
        out[lo:hi] = values[:, columns]
        energies[lo:hi] = np.trapezoid(values, grid, axis=1)
    return out, energies


def estimate_mean(
    sde: PiecewiseAffineSde,
    config: SimConfig,
    grid: Sequence[float],
) -> MeanEstimate:
    """Monte-Carlo mean and standard error of the rate on the given grid.

    All n_paths paths (path_id 0 .. n_paths - 1) are simulated on a common
    time grid that contains every requested time, then reduced in path_id
    order.  Output is bit-identical for fixed (seed, n_paths, dt, grid)
    regardless of how paths are batched internally.
    """
    req = np.asarray(grid, dtype=float)
    if req.ndim != 1 or req.size == 0:
        raise ValueError("grid must be a nonempty 1-d sequence of times")
    if not np.all(np.isfinite(req)) or np.any(req < 0.0):
        raise ValueError("grid times must be finite and nonnegative")
    if np.any(np.diff(req) < 0.0):
        raise ValueError("grid times must be nondecreasing")
    if config.n_paths < 2:
        raise InvalidParams("estimating a standard error needs n_paths >= 2")
    t_end = float(req[-1])
    base = _simulation_grid(sde, t_end, config.dt)
    master = _augment_grid(base, req, config.dt)
    columns = _nearest_indices(master, req, config.dt)
    values, _ = _batched_values(sde, config, master, columns)
    mean = values.mean(axis=0)
    spread = values.std(axis=0, ddof=1)
    # Bit-identical paths (e.g. zero noise) report exactly zero spread.
    spread[np.all(values == values[:1, :], axis=0)] = 0.0
    stderr = spread / math.sqrt(config.n_paths)
    return MeanEstimate(grid=req.copy(), mean=mean, stderr=stderr)


def solve_noisy(
    p: ExponentialParams,
    noise: Union[tuple[float, float], Sequence[tuple[float, float]]],
    q: Union[float, EnergyDemand],
    config: SimConfig,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> tuple[SwitchOffSolution, NoisyVerification]:
    """Switch-off time for a noisy exponential supply line.

    The noise term has zero mean, so the mean rate is the deterministic
    profile and the answer is the deterministic one: the analytic mean of
    each phase is assembled into a profile and handed to solve_general.
    A Monte-Carlo check then simulates the noisy line to t2 and compares the
    sample-mean delivered energy against the noise-free Euler path on the
    same grid (the exact expectation of the discrete scheme); disagreement
    beyond 4 standard errors raises MeanVerificationFailed.  The remaining
    gap between either number and q is time-discretization error, reported
    in the verification record.
    """
    qv = _demand_value(q)
    plateau = math.expm1(p.a * p.t0)
    denom = -math.expm1(-p.b * p.T)
    scale = plateau / denom
    decay_c2 = -p.b * scale * math.exp(-p.b * p.T)

    def mean_ramp(t: float) -> float:
        return _affine_mean_step(0.0, p.a, p.a, t)

    plateau_mean = mean_ramp(p.t0)

    def mean_decay(u: float) -> float:
        return _affine_mean_step(plateau_mean, -p.b, decay_c2, u)

    mean_profile = SupplyProfile(
        ramp=mean_ramp, t0=p.t0, decay_shape=mean_decay, T=p.T
    )
    solution = solve_general(mean_profile, qv, tol)

    sde = phases_from_profile(p, solution.t1_hat).with_noise(noise)
    grid = _simulation_grid(sde, solution.t2, config.dt)
    _, energies = _batched_values(sde, config, grid, np.array([0], dtype=int))
    coeffs = _step_coefficients(sde, grid)
    silent = np.zeros((1, grid.size - 1))
    drift_path = _euler_kernel(grid, *coeffs, silent, sde.initial_value)
    delivered_drift = float(np.trapezoid(drift_path[0], grid))

    delivered_mean = float(energies.mean())
    spread = float(energies.std(ddof=1)) if config.n_paths > 1 else 0.0
    if np.all(energies == energies[0]):
        spread = 0.0
    stderr = spread / math.sqrt(config.n_paths)
    band = 4.0 * stderr + 1e-9 * max(1.0, qv)
    if abs(delivered_mean - delivered_drift) > band:
        raise MeanVerificationFailed(
            f"sample-mean delivered energy {delivered_mean:.12g} J differs "
            f"from the drift value {delivered_drift:.12g} J by more than "
            f"{band:g} J ({config.n_paths} paths)"
        )
    verification = NoisyVerification(
        delivered_mean=delivered_mean,
        delivered_stderr=stderr,
        delivered_drift=delivered_drift,
        demand=qv,
        n_paths=config.n_paths,
        dt=config.dt,
    )
    return solution, verification
