"""Earliest switch-off times for ramp/plateau/decay energy supplies.

A supply line ramps up to a plateau, holds, and after switch-off decays to
zero over a fixed tail length.  Given a total energy demand, this package
finds the earliest time the device can be switched off so the demand is
still met: in closed form for exponential and linear shapes, by energy
balance or root finding for arbitrary profiles, and in the mean for a
noisy line driven by an affine SDE.
"""

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
from .numerics import (
    DEFAULT_TOLERANCE,
    Interval,
    Tolerance,
    find_root,
    integrate,
    normal_deviates,
)
from .profiles import (
    ExponentialParams,
    LinearParams,
    SupplyProfile,
    cumulative_energy,
    exponential_profile,
    extinction_time,
    linear_profile,
    rate_at,
    tabulated_profile,
)
from .solver import (
    EnergyDemand,
    EnergyFamily,
    ExponentialConstants,
    RampPhaseDemand,
    SwitchOffSolution,
    exponential_constants,
    family_from_profile,
    latent_heat_demand,
    no_switchoff_time,
    solve_exponential,
    solve_family,
    solve_general,
    solve_linear,
)
from .stochastic import (
    AffinePhase,
    MeanEstimate,
    NoisyVerification,
    PiecewiseAffineSde,
    SimConfig,
    Trajectory,
    analytic_mean,
    estimate_mean,
    phases_from_profile,
    simulate_general_sde,
    simulate_path,
    solve_noisy,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SwitchOffError",
    "InvalidParams",
    "NonFinite",
    "MaxIterationsExceeded",
    "NotBracketed",
    "SwitchOffBeforePeak",
    "QTooSmall",
    "DegenerateProfile",
    "NonMonotoneSamples",
    "ContinuityMismatch",
    "EmptySamples",
    "StepTooLarge",
    "MeanVerificationFailed",
    "UsageError",
    # numerics
    "Interval",
    "Tolerance",
    "DEFAULT_TOLERANCE",
    "integrate",
    "find_root",
    "normal_deviates",
    # profiles
    "ExponentialParams",
    "LinearParams",
    "SupplyProfile",
    "exponential_profile",
    "linear_profile",
    "tabulated_profile",
    "rate_at",
    "cumulative_energy",
    "extinction_time",
    # solver
    "EnergyDemand",
    "EnergyFamily",
    "ExponentialConstants",
    "RampPhaseDemand",
    "SwitchOffSolution",
    "exponential_constants",
    "latent_heat_demand",
    "family_from_profile",
    "no_switchoff_time",
    "solve_exponential",
    "solve_family",
    "solve_general",
    "solve_linear",
    # stochastic
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
