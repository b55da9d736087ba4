"""Deterministic numerical kernels.

Three routines live here: an adaptive quadrature, a bracketing root finder,
and a reproducible source of normal deviates.  The quadrature and the root
finder are the independent reference path the rest of the package checks its
closed-form algebra against, so they are written for robustness and
predictability rather than raw speed.  Everything is a pure function of its
arguments; nothing in this module keeps state between calls.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import MaxIterationsExceeded, NonFinite, NotBracketed

__all__ = [
    "Interval",
    "Tolerance",
    "DEFAULT_TOLERANCE",
    "integrate",
    "find_root",
    "normal_deviates",
]

# 10-point Gauss-Legendre rule, generated rather than transcribed.  Plain
# Python floats so the evaluation loop below stays allocation-free.
_GL_RULE = tuple(zip(*(arr.tolist() for arr in np.polynomial.legendre.leggauss(10))))


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] on the real line, lo <= hi, both finite."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class Tolerance:
    """Accuracy budget shared by the iterative routines.

    abs_tol and rel_tol are combined as max(abs_tol, rel_tol * |value|);
    max_iterations bounds subdivision / iteration counts so a misbehaving
    integrand fails loudly instead of spinning.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_iterations: int = 10_000

    def __post_init__(self):
        if not (math.isfinite(self.abs_tol) and self.abs_tol > 0.0):
            raise ValueError(f"abs_tol must be positive and finite, got {self.abs_tol}")
        if not (math.isfinite(self.rel_tol) and self.rel_tol >= 0.0):
            raise ValueError(f"rel_tol must be nonnegative and finite, got {self.rel_tol}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


DEFAULT_TOLERANCE = Tolerance()


def _gauss(f: Callable[[float], float], lo: float, hi: float) -> float:
    # Fixed 10-point Gauss-Legendre panel on [lo, hi].
    half = 0.5 * (hi - lo)
    mid = 0.5 * (lo + hi)
    total = 0.0
    for node, weight in _GL_RULE:
        total += weight * f(mid + half * node)
    return half * total


def integrate(
    f: Callable[[float], float],
    domain: Interval,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> tuple[float, float]:
    """Integrate f over domain, returning (value, error_estimate).

    The rule is h-adaptive: each panel is estimated with a 10-point
    Gauss-Legendre quadrature, and the difference between the one-panel value
    and the sum over its two halves serves as the embedded error estimate.
    Panels whose estimate exceeds their share of the budget are split, each
    half inheriting half of the parent's share, so the accepted estimates sum
    to at most max(abs_tol, rel_tol * |integral|).  The reported
    error_estimate is that sum; for smooth integrands the true error is far
    below it.

    Integrands with kinks converge too, just more slowly around the kink;
    callers that know their breakpoints should split the domain there and
    integrate piecewise.

    Raises NonFinite if the integrand produces NaN or infinity, and
    MaxIterationsExceeded when the subdivision budget runs out.
    """
    lo, hi = domain.lo, domain.hi
    if lo == hi:
        return 0.0, 0.0
    whole = _gauss(f, lo, hi)
    if not math.isfinite(whole):
        raise NonFinite(f"integrand is not finite on [{lo}, {hi}]")
    goal = max(tol.abs_tol, tol.rel_tol * abs(whole))

    value = 0.0
    estimate = 0.0
    # Stack items: (panel lo, panel hi, one-panel value, local error budget).
    stack = [(lo, hi, whole, goal)]
    pops = 0
    while stack:
        a, b, coarse, budget = stack.pop()
        pops += 1
        if pops > tol.max_iterations:
            raise MaxIterationsExceeded(
                f"quadrature budget of {tol.max_iterations} panels exhausted "
                f"before reaching tolerance {goal:g}"
            )
        m = 0.5 * (a + b)
        left = _gauss(f, a, m)
        right = _gauss(f, m, b)
        refined = left + right
        if not math.isfinite(refined):
            raise NonFinite(f"integrand is not finite on [{a}, {b}]")
        delta = abs(refined - coarse)
        if delta <= budget or m <= a or m >= b:
            # Accept.  Once a panel can no longer be split (m collides with
            # an endpoint) we take what we have and report its estimate.
            value += refined
            estimate += delta
        else:
            half_budget = 0.5 * budget
            stack.append((a, m, left, half_budget))
            stack.append((m, b, right, half_budget))
    return value, estimate


def find_root(
    f: Callable[[float], float],
    bracket: Interval,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> float:
    """Find a root of f inside bracket, which must change sign across it.

    Brent's method: bisection guarantees convergence, secant / inverse
    quadratic steps give superlinear speed when the iterates cooperate.
    Returns x with |f(x)| <= abs_tol, or the midpoint of a bracket narrower
    than abs_tol + rel_tol * |x| when f is too steep for the residual test.

    Raises NotBracketed when f has the same strict sign at both endpoints,
    NonFinite on NaN/infinite values, MaxIterationsExceeded on stall.
    """
    xpre, xcur = bracket.lo, bracket.hi
    fpre, fcur = f(xpre), f(xcur)
    if not (math.isfinite(fpre) and math.isfinite(fcur)):
        raise NonFinite("function is not finite at the bracket endpoints")
    if fpre == 0.0:
        return xpre
    if fcur == 0.0:
        return xcur
    if (fpre > 0.0) == (fcur > 0.0):
        raise NotBracketed(
            f"f({bracket.lo}) = {fpre:g} and f({bracket.hi}) = {fcur:g} "
            "have the same sign"
        )

    xblk, fblk = 0.0, 0.0
    spre = scur = 0.0
    for _ in range(tol.max_iterations):
        if fpre * fcur < 0.0:
            xblk, fblk = xpre, fpre
            spre = scur = xcur - xpre
        if abs(fblk) < abs(fcur):
            # Keep the smaller residual in xcur; xblk brackets it.
            xpre, xcur, xblk = xcur, xblk, xcur
            fpre, fcur, fblk = fcur, fblk, fcur

        delta = 0.5 * (tol.abs_tol + tol.rel_tol * abs(xcur))
        sbis = 0.5 * (xblk - xcur)
        if fcur == 0.0 or abs(fcur) <= tol.abs_tol or abs(sbis) < delta:
            return xcur

        if abs(spre) > delta and abs(fcur) < abs(fpre):
            if xpre == xblk:
                # Secant step.
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                # Inverse quadratic interpolation.
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            if 2.0 * abs(stry) < min(abs(spre), 3.0 * abs(sbis) - delta):
                spre, scur = scur, stry
            else:
                spre = scur = sbis
        else:
            spre = scur = sbis

        xpre, fpre = xcur, fcur
        if abs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0.0 else -delta
        fcur = f(xcur)
        if not math.isfinite(fcur):
            raise NonFinite(f"function is not finite at x = {xcur}")
    raise MaxIterationsExceeded(
        f"root finder made no bracket of width {tol.abs_tol:g} "
        f"within {tol.max_iterations} iterations"
    )


def normal_deviates(seed: int, stream_id: int, count: int) -> np.ndarray:
    """Return `count` standard normal deviates from a named stream.

    The generator is counter-based (Philox keyed by (seed, stream_id)), so
    the triple (seed, stream_id, index) fully determines each deviate:
    repeated calls reproduce the same values bit for bit, and distinct
    stream_ids give statistically independent streams.  This is what makes
    per-path Monte-Carlo reproducible regardless of how paths are batched.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    key = np.array([seed % (1 << 64), stream_id % (1 << 64)], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal(count)
