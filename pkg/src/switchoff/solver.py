"""Switch-off time solvers.

All of them answer the same question: given a supply profile and an energy
demand q, what is the earliest switch-off time t1 such that the energy
delivered over the whole episode [0, t1 + T] still reaches q?  Because the
decay shape is shift-invariant, delivered energy is affine and strictly
increasing in t1,

    E(t1) = F(t0) + plateau * (t1 - t0) + H(T),

with F the ramp energy and H the decay-window energy, so the general solver
is a single division.  The exponential and linear models additionally admit
closed forms, which the quadrature-based solvers cross-check.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

from .errors import (
    DegenerateProfile,
    InvalidParams,
    NotBracketed,
    QTooSmall,
)
from .numerics import DEFAULT_TOLERANCE, Interval, Tolerance, find_root
from .profiles import (
    ExponentialParams,
    LinearParams,
    SupplyProfile,
    _integrate_piecewise,
    cumulative_energy,
    exponential_profile,
    linear_profile,
    rate_at,
)

__all__ = [
    "EnergyDemand",
    "SwitchOffSolution",
    "ExponentialConstants",
    "EnergyFamily",
    "RampPhaseDemand",
    "latent_heat_demand",
    "exponential_constants",
    "solve_exponential",
    "solve_linear",
    "solve_general",
    "family_from_profile",
    "solve_family",
    "no_switchoff_time",
]

# Geometric bracket expansion for auto-derived switch-off domains.
_BRACKET_DOUBLINGS = 60


@dataclass(frozen=True)
class EnergyDemand:
    """Total energy the device must deliver, in joules.  Strictly positive."""

    q: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and self.q > 0.0):
            raise InvalidParams(f"energy demand must be positive and finite, got {self.q}")


def _demand_value(q: Union[float, EnergyDemand]) -> float:
    value = q.q if isinstance(q, EnergyDemand) else float(q)
    if not (math.isfinite(value) and value > 0.0):
        raise InvalidParams(f"energy demand must be positive and finite, got {value}")
    return value


def latent_heat_demand(mass_kg: float, latent_heat_j_per_kg: float) -> EnergyDemand:
    """Demand for fully vaporizing a mass: q = m * Lv."""
    if not (math.isfinite(mass_kg) and mass_kg > 0.0):
        raise InvalidParams(f"mass must be positive and finite, got {mass_kg}")
    if not (math.isfinite(latent_heat_j_per_kg) and latent_heat_j_per_kg > 0.0):
        raise InvalidParams(
            f"latent heat must be positive and finite, got {latent_heat_j_per_kg}"
        )
    return EnergyDemand(mass_kg * latent_heat_j_per_kg)


@dataclass(frozen=True)
class SwitchOffSolution:
    """Solved switch-off schedule.

    t1_hat: earliest admissible switch-off time.
    t2: time the supply is extinct, t1_hat + y.
    y: length of the post-switch-off dwell actually used (T for the
       profile-based solvers).
    delivered_residual: quadrature-checked delivered energy minus demand.
    method: which solver produced it (closed_form_exponential,
       closed_form_linear, energy_balance, family_root).
    feasible: t1_hat >= t0 held (solvers raise QTooSmall otherwise, so a
       returned solution always has it True).
    """

    t1_hat: float
    t2: float
    y: float
    delivered_residual: float
    method: str
    feasible: bool


@dataclass(frozen=True)
class ExponentialConstants:
    """Constants of the exponential model's switch-off relation.

    With y the dwell between switch-off and extinction, the relation is

        t1 = offset + decay_coeff * e^(-b*y) + slope * y.

    The linear-in-y coefficient admits an off-by-one variant, slope_alt =
    slope + 1, which arises when the extinction time t2 rather than the dwell
    y multiplies the linear term.  Using slope_alt shifts the solved t1 by
    exactly T and over-delivers plateau_rate * T of energy; both values are
    kept so the discrepancy stays inspectable.  The solver uses slope, the
    energy-balance-consistent one.
    """

    offset: float
    decay_coeff: float
    slope: float
    slope_alt: float


class RampPhaseDemand(UserWarning):
    """The demanded energy is met before the ramp finishes."""


def _feasibility_slack(t0: float) -> float:
    return 1e-12 * max(1.0, abs(t0))


def exponential_constants(
    p: ExponentialParams, q: Union[float, EnergyDemand]
) -> ExponentialConstants:
    """Constants of the switch-off relation for the exponential model."""
    qv = _demand_value(q)
    plateau = math.expm1(p.a * p.t0)
    denom = -math.expm1(-p.b * p.T)  # 1 - e^(-b*T)
    offset = (
        p.t0
        + (p.t0 + qv) / plateau
        - 1.0 / p.a
        - 1.0 / (p.b * denom)
    )
    decay_coeff = 1.0 / (p.b * denom)
    slope_alt = 1.0 / denom
    slope = math.exp(-p.b * p.T) / denom
    return ExponentialConstants(
        offset=offset, decay_coeff=decay_coeff, slope=slope, slope_alt=slope_alt
    )


def _solution(
    profile: SupplyProfile,
    t1: float,
    qv: float,
    method: str,
    tol: Tolerance,
) -> SwitchOffSolution:
    t2 = t1 + profile.T
    residual = cumulative_energy(profile, t1, t2, tol) - qv
    return SwitchOffSolution(
        t1_hat=t1,
        t2=t2,
        y=t2 - t1,
        delivered_residual=residual,
        method=method,
        feasible=True,
    )


def _exponential_ramp_energy(a: float, t0: float) -> float:
    # Integral of e^(a*t) - 1 over [0, t0] = (e^(a*t0) - 1)/a - t0.  The
    # subtraction cancels for small a*t0, so switch to its series there.
    x = a * t0
    if x < 1e-3:
        return t0 * x * (0.5 + x * (1.0 / 6.0 + x / 24.0))
    return math.expm1(x) / a - t0


def _exponential_decay_energy(plateau: float, b: float, T: float) -> float:
    # Integral of the matched decay over its window: plateau * T * g(b*T)
    # with g(x) = (1 - x / (e^x - 1)) / x, the Bernoulli generating ratio.
    # Direct evaluation of g cancels for small x; its series takes over.
    x = b * T
    if x < 1e-3:
        g = 0.5 - x / 12.0 + x**3 / 720.0
    else:
        g = (1.0 - x / math.expm1(x)) / x
    return plateau * T * g


def solve_exponential(
    p: ExponentialParams,
    q: Union[float, EnergyDemand],
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> SwitchOffSolution:
    """Closed-form switch-off time for the exponential model.

    Algebraically this is t1 = offset + decay_coeff * e^(-b*T) + slope * T
    in the constants of exponential_constants; it is evaluated in the
    equivalent energy-balance arrangement t1 = t0 + (q - F - H) / plateau,
    whose terms stay well scaled even when a*t0 or b*T is tiny (the
    constants form loses all precision there, its terms growing like
    1/(b * (1 - e^(-b*T)))).  Raises QTooSmall when even switching off at
    the end of the ramp would over-deliver.
    """
    qv = _demand_value(q)
    plateau = math.expm1(p.a * p.t0)
    ramp_energy = _exponential_ramp_energy(p.a, p.t0)
    decay_energy = _exponential_decay_energy(plateau, p.b, p.T)
    t1 = p.t0 + (qv - ramp_energy - decay_energy) / plateau
    if t1 < p.t0 - _feasibility_slack(p.t0):
        raise QTooSmall(
            f"demand {qv:g} J is below the minimum "
            f"{ramp_energy + decay_energy:g} J deliverable with switch-off "
            f"at t0 = {p.t0:g}"
        )
    profile = exponential_profile(p)
    return _solution(profile, t1, qv, "closed_form_exponential", tol)


def solve_linear(
    p: LinearParams,
    q: Union[float, EnergyDemand],
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> SwitchOffSolution:
    """Closed-form switch-off time for the linear model.

    t1 = q/a - T/2 + t0/2, feasible iff q/a - T/2 - t0/2 >= 0.
    """
    qv = _demand_value(q)
    margin = qv / p.a - 0.5 * p.T - 0.5 * p.t0
    if margin < -_feasibility_slack(p.t0):
        q_min = p.a * 0.5 * (p.t0 + p.T)
        raise QTooSmall(
            f"demand {qv:g} J is below the minimum {q_min:g} J deliverable "
            f"with switch-off at t0 = {p.t0:g}"
        )
    t1 = p.t0 + margin
    profile = linear_profile(p)
    return _solution(profile, t1, qv, "closed_form_linear", tol)


def _profile_energies(
    profile: SupplyProfile, tol: Tolerance
) -> tuple[float, float, float]:
    """(ramp energy F, decay-window energy H, plateau rate)."""
    ramp_energy = _integrate_piecewise(
        profile.ramp, 0.0, profile.t0, profile.ramp_breakpoints, tol
    )
    decay_energy = _integrate_piecewise(
        profile.decay_shape, 0.0, profile.T, profile.decay_breakpoints, tol
    )
    return ramp_energy, decay_energy, profile.plateau_rate


def solve_general(
    profile: SupplyProfile,
    q: Union[float, EnergyDemand],
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> SwitchOffSolution:
    """Switch-off time for any profile, via the energy balance.

    Delivered energy is affine in t1 with slope equal to the plateau rate, so

        t1 = t0 + (q - F - H) / plateau_rate

    with F and H obtained by quadrature.  Works for any valid profile,
    including tabulated ones.
    """
    qv = _demand_value(q)
    ramp_energy, decay_energy, plateau = _profile_energies(profile, tol)
    if plateau <= tol.abs_tol:
        raise DegenerateProfile(
            f"plateau rate {plateau:g} is not positive; no demand can be met"
        )
    t1 = profile.t0 + (qv - ramp_energy - decay_energy) / plateau
    if t1 < profile.t0 - _feasibility_slack(profile.t0):
        raise QTooSmall(
            f"demand {qv:g} J is below the minimum "
            f"{ramp_energy + decay_energy:g} J deliverable with switch-off "
            f"at t0 = {profile.t0:g}"
        )
    return _solution(profile, t1, qv, "energy_balance", tol)


@dataclass(frozen=True)
class EnergyFamily:
    """A family of supply curves indexed by the switch-off time.

    rate(t, t1) is the instantaneous rate at time t when switching off at
    t1; extinction(t1) is when that curve reaches zero for good.  Total
    delivered energy must be strictly increasing in t1.  When t1_domain is
    given, solve_family searches exactly that interval; when it is None the
    solver derives a bracket itself and widens it geometrically as needed.
    breakpoints(t1), if provided, lists times where rate(., t1) may kink.
    """

    rate: Callable[[float, float], float]
    extinction: Callable[[float], float]
    t1_domain: Optional[Interval] = None
    t1_min: float = 0.0
    breakpoints: Optional[Callable[[float], Sequence[float]]] = None


def family_from_profile(
    profile: SupplyProfile, t1_domain: Optional[Interval] = None
) -> EnergyFamily:
    """Wrap a profile as an energy family over its switch-off times."""
    return EnergyFamily(
        rate=lambda t, t1: rate_at(profile, t1, t),
        extinction=lambda t1: t1 + profile.T,
        t1_domain=t1_domain,
        t1_min=profile.t0,
        breakpoints=profile.breakpoints,
    )


def _family_energy(family: EnergyFamily, t1: float, tol: Tolerance) -> float:
    end = family.extinction(t1)
    interior = list(family.breakpoints(t1)) if family.breakpoints is not None else []
    return _integrate_piecewise(
        lambda t: family.rate(t, t1), 0.0, end, interior, tol
    )


def solve_family(
    family: EnergyFamily,
    q: Union[float, EnergyDemand],
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> SwitchOffSolution:
    """Switch-off time by root finding on delivered energy minus demand.

    Makes no structural assumption beyond energy increasing in t1: the
    residual R(t1) = integral of rate(., t1) up to extinction minus q is
    bracketed and handed to the root finder.  With an explicit t1_domain a
    residual that does not change sign raises NotBracketed; an auto-derived
    bracket is widened geometrically (x2, up to 60 doublings) first.
    """
    qv = _demand_value(q)

    def residual(t1: float) -> float:
        return _family_energy(family, t1, tol) - qv

    if family.t1_domain is not None:
        lo, hi = family.t1_domain.lo, family.t1_domain.hi
        r_lo, r_hi = residual(lo), residual(hi)
        if (r_lo > 0.0) == (r_hi > 0.0) and r_lo != 0.0 and r_hi != 0.0:
            raise NotBracketed(
                f"demand {qv:g} J is outside the energy range "
                f"[{r_lo + qv:g}, {r_hi + qv:g}] J reachable on "
                f"t1 in [{lo:g}, {hi:g}]"
            )
    else:
        lo = family.t1_min
        r_lo = residual(lo)
        if r_lo > 0.0:
            raise NotBracketed(
                f"demand {qv:g} J is below the {r_lo + qv:g} J already "
                f"delivered when switching off at t1 = {lo:g}"
            )
        peak_rate = family.rate(lo, lo)
        if peak_rate <= tol.abs_tol:
            raise DegenerateProfile(
                f"rate at the earliest switch-off time is {peak_rate:g}; "
                "delivered energy cannot grow"
            )
        width = 10.0 * (qv / peak_rate + (family.extinction(lo) - lo))
        hi = lo + width
        r_hi = residual(hi)
        doublings = 0
        while r_hi < 0.0:
            doublings += 1
            if doublings > _BRACKET_DOUBLINGS:
                raise NotBracketed(
                    f"delivered energy never reaches {qv:g} J even with "
                    f"switch-off at t1 = {hi:g}"
                )
            width *= 2.0
            hi = lo + width
            r_hi = residual(hi)

    t1 = find_root(residual, Interval(lo, hi), tol)
    t2 = family.extinction(t1)
    return SwitchOffSolution(
        t1_hat=t1,
        t2=t2,
        y=t2 - t1,
        delivered_residual=residual(t1),
        method="family_root",
        feasible=True,
    )


def no_switchoff_time(
    profile: SupplyProfile,
    q: Union[float, EnergyDemand],
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """Time at which the demand is met if the device is never switched off.

    For q at or beyond the ramp energy this is t0 + (q - F) / plateau_rate.
    A demand met during the ramp itself is answered with the ramp-phase
    crossing time and flagged with a RampPhaseDemand warning, since it
    usually means the demand was far smaller than the profile was sized for.
    """
    qv = _demand_value(q)
    ramp_energy = _integrate_piecewise(
        profile.ramp, 0.0, profile.t0, profile.ramp_breakpoints, tol
    )
    plateau = profile.plateau_rate
    if plateau <= tol.abs_tol:
        raise DegenerateProfile(
            f"plateau rate {plateau:g} is not positive; demand is never met"
        )
    if qv >= ramp_energy:
        return profile.t0 + (qv - ramp_energy) / plateau
    warnings.warn(
        f"demand {qv:g} J is met during the ramp (ramp delivers {ramp_energy:g} J)",
        RampPhaseDemand,
        stacklevel=2,
    )

    def ramp_residual(t: float) -> float:
        return _integrate_piecewise(
            profile.ramp, 0.0, t, profile.ramp_breakpoints, tol
        ) - qv

    return find_root(ramp_residual, Interval(0.0, profile.t0), tol)
