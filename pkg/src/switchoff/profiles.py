"""Supply-rate profiles: ramp up, hold, switch off, decay to zero.

A profile describes the instantaneous supply rate of a device that ramps up
over [0, t0], holds its peak rate until it is switched off at some t1 >= t0,
and then decays to zero over a window of fixed length T.  The decay is
shift-invariant: its shape depends only on the time elapsed since switch-off,
never on t1 itself, which is what lets a single profile answer rate and
energy queries for every candidate switch-off time.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ContinuityMismatch,
    EmptySamples,
    InvalidParams,
    NonMonotoneSamples,
    SwitchOffBeforePeak,
)
from .numerics import DEFAULT_TOLERANCE, Interval, Tolerance, integrate

__all__ = [
    "ExponentialParams",
    "LinearParams",
    "SupplyProfile",
    "exponential_profile",
    "linear_profile",
    "tabulated_profile",
    "rate_at",
    "cumulative_energy",
    "extinction_time",
]

_MONOTONE_SAMPLES = 33


def _require_positive_finite(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise InvalidParams(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class ExponentialParams:
    """Parameters of the exponential model.

    a: ramp growth rate (1/s); the ramp rate is e^(a*t) - 1.
    b: decay rate (1/s).
    t0: ramp duration (s).
    T: decay window length (s).
    """

    a: float
    b: float
    t0: float
    T: float

    def __post_init__(self):
        for name in ("a", "b", "t0", "T"):
            _require_positive_finite(name, getattr(self, name))


@dataclass(frozen=True)
class LinearParams:
    """Parameters of the linear model: ramp to rate a over t0, decay over T."""

    a: float
    t0: float
    T: float

    def __post_init__(self):
        for name in ("a", "t0", "T"):
            _require_positive_finite(name, getattr(self, name))


@dataclass(frozen=True)
class SupplyProfile:
    """Rate profile assembled from a ramp and a shift-invariant decay shape.

    ramp(t) gives the rate on [0, t0] and must climb from 0 to the plateau
    rate; decay_shape(u) gives the rate u seconds after switch-off and must
    fall from the plateau rate to 0 at u = T.  Between t0 and the switch-off
    time the rate holds at ramp(t0).  Interior kink positions of piecewise
    ramps/decays can be listed in ramp_breakpoints / decay_breakpoints so
    that energy queries integrate each smooth piece separately.

    Construction samples the invariants and raises ContinuityMismatch or
    NonMonotoneSamples when the pieces do not form a valid profile.
    """

    ramp: Callable[[float], float]
    t0: float
    decay_shape: Callable[[float], float]
    T: float
    ramp_breakpoints: tuple[float, ...] = field(default=())
    decay_breakpoints: tuple[float, ...] = field(default=())

    def __post_init__(self):
        _require_positive_finite("t0", self.t0)
        _require_positive_finite("T", self.T)
        peak = self.ramp(self.t0)
        scale = max(1.0, abs(peak))
        if abs(self.ramp(0.0)) > 1e-12 * scale:
            raise ContinuityMismatch(
                f"ramp must start at zero rate, got ramp(0) = {self.ramp(0.0):g}"
            )
        joint = self.decay_shape(0.0)
        if abs(joint - peak) > 1e-9 * scale:
            raise ContinuityMismatch(
                f"decay must start at the plateau rate: decay(0) = {joint:g}, "
                f"ramp({self.t0:g}) = {peak:g}"
            )
        tail = self.decay_shape(self.T)
        if abs(tail) > 1e-9 * scale:
            raise ContinuityMismatch(
                f"decay must reach zero at T = {self.T:g}, got {tail:g}"
            )
        slack = 1e-12 * scale
        ramp_vals = [self.ramp(t) for t in np.linspace(0.0, self.t0, _MONOTONE_SAMPLES)]
        if any(b < a - slack for a, b in zip(ramp_vals, ramp_vals[1:])):
            raise NonMonotoneSamples("ramp rate must be nondecreasing on [0, t0]")
        decay_vals = [self.decay_shape(u) for u in np.linspace(0.0, self.T, _MONOTONE_SAMPLES)]
        if any(b > a + slack for a, b in zip(decay_vals, decay_vals[1:])):
            raise NonMonotoneSamples("decay rate must be nonincreasing on [0, T]")
        if any(v < -slack for v in ramp_vals) or any(v < -slack for v in decay_vals):
            raise NonMonotoneSamples("rates must be nonnegative")

    @property
    def plateau_rate(self) -> float:
        """Peak rate held between the end of the ramp and switch-off."""
        return self.ramp(self.t0)

    def breakpoints(self, t1: float) -> tuple[float, ...]:
        """Times where the assembled rate is allowed to kink, given t1."""
        _check_switch_off(self, t1)
        interior = tuple(t for t in self.ramp_breakpoints if 0.0 < t < self.t0)
        interior += tuple(t1 + u for u in self.decay_breakpoints if 0.0 < u < self.T)
        return tuple(sorted(set(interior + (self.t0, t1, t1 + self.T))))


def exponential_profile(p: ExponentialParams) -> SupplyProfile:
    """Profile with ramp e^(a*t) - 1 and matched exponential decay.

    The decay shape is scaled so that it starts exactly at the plateau rate
    and reaches zero at the end of the window:

        decay(u) = (e^(a*t0) - 1) * (e^(-b*u) - e^(-b*T)) / (1 - e^(-b*T))

    All exponential differences go through expm1 so that tiny b*T does not
    cancel catastrophically.
    """
    a, b, t0, T = p.a, p.b, p.t0, p.T
    plateau = math.expm1(a * t0)
    denom = -math.expm1(-b * T)  # 1 - e^(-b*T), stable for small b*T
    scale = plateau / denom
    tail = math.expm1(-b * T)  # e^(-b*T) - 1

    def ramp(t: float) -> float:
        return math.expm1(a * t)

    def decay(u: float) -> float:
        # e^(-b*u) - e^(-b*T), written as a difference of expm1 values.
        return scale * (math.expm1(-b * u) - tail)

    return SupplyProfile(ramp=ramp, t0=t0, decay_shape=decay, T=T)


def linear_profile(p: LinearParams) -> SupplyProfile:
    """Profile with straight-line ramp to rate a and straight-line decay."""
    a, t0, T = p.a, p.t0, p.T
    slope = a / t0

    def ramp(t: float) -> float:
        return slope * t

    def decay(u: float) -> float:
        return a * (1.0 - u / T)

    return SupplyProfile(ramp=ramp, t0=t0, decay_shape=decay, T=T)


def tabulated_profile(
    ramp_samples: Sequence[tuple[float, float]],
    decay_samples: Sequence[tuple[float, float]],
) -> SupplyProfile:
    """Profile interpolated linearly through measured (time, rate) samples.

    ramp_samples run from (0, 0) to (t0, peak); decay_samples run from
    (0, peak) to (T, 0), the time column being seconds since switch-off.
    Sample times must be strictly increasing, ramp rates nondecreasing and
    decay rates nonincreasing.  The decay's first rate may disagree with the
    ramp's peak by up to 1e-6 relative; within that it is pinned to the peak
    so the assembled profile is exactly continuous.
    """
    if len(ramp_samples) == 0 or len(decay_samples) == 0:
        raise EmptySamples("both ramp and decay need at least one sample")
    ramp_t = np.asarray([s[0] for s in ramp_samples], dtype=float)
    ramp_v = np.asarray([s[1] for s in ramp_samples], dtype=float)
    decay_t = np.asarray([s[0] for s in decay_samples], dtype=float)
    decay_v = np.asarray([s[1] for s in decay_samples], dtype=float)
    if ramp_t.size < 2 or decay_t.size < 2:
        raise EmptySamples("both ramp and decay need at least two samples")
    if not (np.all(np.isfinite(ramp_t)) and np.all(np.isfinite(ramp_v))
            and np.all(np.isfinite(decay_t)) and np.all(np.isfinite(decay_v))):
        raise InvalidParams("samples must be finite")

    if np.any(np.diff(ramp_t) <= 0.0) or np.any(np.diff(decay_t) <= 0.0):
        raise NonMonotoneSamples("sample times must be strictly increasing")
    if ramp_t[0] != 0.0 or decay_t[0] != 0.0:
        raise InvalidParams("ramp and decay samples must start at time 0")
    if np.any(np.diff(ramp_v) < 0.0):
        raise NonMonotoneSamples("ramp rates must be nondecreasing")
    if np.any(np.diff(decay_v) > 0.0):
        raise NonMonotoneSamples("decay rates must be nonincreasing")

    peak = float(ramp_v[-1])
    scale = max(1.0, abs(peak))
    if abs(ramp_v[0]) > 1e-12 * scale:
        raise ContinuityMismatch(f"ramp must start at zero rate, got {ramp_v[0]:g}")
    if abs(decay_v[-1]) > 1e-9 * scale:
        raise ContinuityMismatch(f"decay must end at zero rate, got {decay_v[-1]:g}")
    if abs(decay_v[0] - peak) > 1e-6 * scale:
        raise ContinuityMismatch(
            f"decay start rate {decay_v[0]:g} does not match ramp peak {peak:g}"
        )
    # Pin the joint so the assembled profile is continuous to the bit.
    decay_v = decay_v.copy()
    decay_v[0] = peak

    def ramp(t: float) -> float:
        return float(np.interp(t, ramp_t, ramp_v))

    def decay(u: float) -> float:
        return float(np.interp(u, decay_t, decay_v))

    return SupplyProfile(
        ramp=ramp,
        t0=float(ramp_t[-1]),
        decay_shape=decay,
        T=float(decay_t[-1]),
        ramp_breakpoints=tuple(float(t) for t in ramp_t[1:-1]),
        decay_breakpoints=tuple(float(u) for u in decay_t[1:-1]),
    )


def _check_switch_off(profile: SupplyProfile, t1: float) -> None:
    if not math.isfinite(t1):
        raise InvalidParams(f"switch-off time must be finite, got {t1}")
    if t1 < profile.t0 - 1e-12 * max(1.0, profile.t0):
        raise SwitchOffBeforePeak(
            f"switch-off at t1 = {t1:g} precedes the end of the ramp at t0 = {profile.t0:g}"
        )


def rate_at(profile: SupplyProfile, t1: float, t: float) -> float:
    """Instantaneous supply rate at time t when switching off at t1.

    Exactly zero once the decay window has passed (t > t1 + T).
    """
    _check_switch_off(profile, t1)
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if t <= profile.t0:
        return profile.ramp(t)
    if t <= t1:
        return profile.plateau_rate
    u = t - t1
    if u <= profile.T:
        return profile.decay_shape(u)
    return 0.0


def _integrate_piecewise(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    interior: Sequence[float],
    tol: Tolerance,
) -> float:
    """Quadrature over [lo, hi] split at the interior kinks inside it."""
    cuts = [lo] + [c for c in sorted(interior) if lo < c < hi] + [hi]
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        value, _ = integrate(f, Interval(a, b), tol)
        total += value
    return total


def cumulative_energy(
    profile: SupplyProfile,
    t1: float,
    t: float,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """Energy delivered on [0, t] when switching off at t1.

    Computed by quadrature of the rate, split at the profile's breakpoints so
    every panel sees a smooth integrand.  Nondecreasing in t, and constant
    for t >= t1 + T.
    """
    _check_switch_off(profile, t1)
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    total = 0.0
    ramp_end = min(t, profile.t0)
    if ramp_end > 0.0:
        total += _integrate_piecewise(
            profile.ramp, 0.0, ramp_end, profile.ramp_breakpoints, tol
        )
    plateau_end = min(t, t1)
    if plateau_end > profile.t0:
        value, _ = integrate(
            lambda _t: profile.plateau_rate, Interval(profile.t0, plateau_end), tol
        )
        total += value
    decay_end = min(t - t1, profile.T)
    if decay_end > 0.0:
        total += _integrate_piecewise(
            profile.decay_shape, 0.0, decay_end, profile.decay_breakpoints, tol
        )
    return total


def extinction_time(profile: SupplyProfile, t1: float) -> float:
    """Time at which the supply rate reaches zero for good: t1 + T."""
    _check_switch_off(profile, t1)
    return t1 + profile.T
