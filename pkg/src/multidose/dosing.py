"""Regimen design: invert the steady-state bounds into a (dose, interval).

The peak/trough ratio of the limiting cycle depends on the interval
alone, is strictly increasing in it, and sweeps (1, inf); the dose then
scales the trough linearly. Designing a regimen therefore reduces to a
one-dimensional bracketed root find on the ratio followed by a linear
solve for the dose. The ratio map is invariant under swapping the two
rate constants, so flip-flop parameter vectors need no special casing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import NoConvergence, PkParams, ValidationError, validate_params
from . import steady_state

#: Bracketing floor for the interval root find (hours).
TAU_FLOOR = 1e-9

#: Relative tolerance on the achieved ratio at the root.
RATIO_RTOL = 1e-12

#: Maximum bisection iterations (the bracket shrinks by 2^-200).
MAX_BISECT = 200

#: Below (ka + ke) * tau = 1e-4 the ratio excess uses its quadratic
#: leading term; direct evaluation would drown in cancellation there.
_SERIES_THRESHOLD = 1e-4

#: Relative mismatch allowed when verifying the designed regimen.
DESIGN_VERIFY_RTOL = 1e-8


@dataclass(frozen=True)
class TherapeuticTarget:
    """Clinical bounds and the asymptotic range to aim for inside them.

    mic/tc are the minimum inhibitory and toxic concentrations; lower
    and upper are the exact steady-state trough and peak the design
    must achieve, with mic <= lower < upper <= tc.
    """

    mic: float
    tc: float
    lower: float
    upper: float

    def __post_init__(self):
        if not (self.mic > 0.0 and math.isfinite(self.mic)):
            raise ValidationError(f"mic must be > 0, got {self.mic!r}")
        if not self.tc > self.mic:
            raise ValidationError(
                f"tc must exceed mic, got tc={self.tc!r} mic={self.mic!r}"
            )
        if not (self.mic <= self.lower < self.upper <= self.tc):
            raise ValidationError(
                "targets must satisfy mic <= lower < upper <= tc, got "
                f"mic={self.mic!r} lower={self.lower!r} "
                f"upper={self.upper!r} tc={self.tc!r}"
            )


@dataclass(frozen=True)
class SolverContext:
    """Precomputed exponents and shape functions of the bound ratio.

    p1, p2 are the peak-formula exponents -ka/(ka-ke), -ke/(ka-ke)
    (p2 - p1 = 1); p3, p4 their powers of ka/ke. trough_shape and
    peak_shape give the steady-state bounds once multiplied by the dose
    gain, and their quotient f = peak/trough is the strictly increasing
    map inverted by the designer.
    """

    params: PkParams
    p1: float
    p2: float
    p3: float
    p4: float

    @classmethod
    def for_params(cls, p: PkParams) -> "SolverContext":
        validate_params(p)
        p1 = -p.ka / (p.ka - p.ke)
        p2 = -p.ke / (p.ka - p.ke)
        return cls(params=p, p1=p1, p2=p2,
                   p3=(p.ka / p.ke) ** p1, p4=(p.ka / p.ke) ** p2)

    def trough_shape(self, tau: float) -> float:
        """Psi: the trough bound with the dose gain divided out."""
        p = self.params
        z = -math.expm1(-p.ka * tau)
        w = -math.expm1(-p.ke * tau)
        # beta/w - alpha/z = (beta - alpha)/(w z); the numerator is
        # factored through the slower rate so neither orientation can
        # overflow or cancel.
        k_slow, k_fast = min(p.ka, p.ke), max(p.ka, p.ke)
        diff = -math.exp(-k_slow * tau) * math.expm1(-(k_fast - k_slow) * tau)
        if p.ka < p.ke:
            diff = -diff
        return diff / (w * z)

    def peak_shape(self, tau: float) -> float:
        """Phi: the peak bound with the dose gain divided out."""
        p = self.params
        z = -math.expm1(-p.ka * tau)
        w = -math.expm1(-p.ke * tau)
        ratio = p.ka * w / (p.ke * z)
        return ratio ** self.p2 / w - ratio ** self.p1 / z

    def f(self, tau: float) -> float:
        """Peak/trough ratio of the limiting cycle; increasing, range (1, inf)."""
        trough = self.trough_shape(tau)
        if trough == 0.0:
            # The trough underflows once the slow exponential does; the
            # ratio has genuinely outgrown float range by then.
            return math.inf
        return self.peak_shape(tau) / trough

    def f_excess(self, tau: float) -> float:
        """f(tau) - 1 without the cancellation that hits tiny intervals."""
        p = self.params
        if (p.ka + p.ke) * tau < _SERIES_THRESHOLD:
            return p.ka * p.ke * tau * tau / 8.0
        return self.f(tau) - 1.0


def f_ratio(p: PkParams, tau: float) -> float:
    """Limiting peak/trough ratio for the given interval."""
    if not tau > 0.0:
        raise ValidationError(f"interval must be > 0, got {tau!r}")
    return SolverContext.for_params(p).f(tau)


def f_ratio_excess(p: PkParams, tau: float) -> float:
    """f_ratio(p, tau) - 1, accurate down to vanishing intervals."""
    if not tau > 0.0:
        raise ValidationError(f"interval must be > 0, got {tau!r}")
    return SolverContext.for_params(p).f_excess(tau)


def _dose_for_trough(ctx: SolverContext, target_lower: float,
                     tau: float) -> float:
    p = ctx.params
    return target_lower * p.volume * (p.ka - p.ke) / (
        p.ka * p.gamma * ctx.trough_shape(tau)
    )


def design(p: PkParams, target: TherapeuticTarget) -> tuple[float, float]:
    """Unique (dose, interval) whose steady-state bounds hit the target.

    Solves f(tau) = upper/lower by expanding-bracket bisection (the
    ratio map is strictly increasing), then the dose from the trough
    equation, and verifies both achieved bounds to 1e-8 relative.
    """
    ctx = SolverContext.for_params(p)
    ratio_excess = (target.upper - target.lower) / target.lower
    if not ratio_excess > 0.0:
        raise ValidationError("target upper must strictly exceed target lower")

    lo, hi = TAU_FLOOR, 1.0
    if ctx.f_excess(lo) > ratio_excess:
        raise NoConvergence(
            "target ratio is below the resolvable range at the bracket floor",
            bracket=(lo, hi), ratio=1.0 + ratio_excess,
        )
    expansions = 0
    while ctx.f_excess(hi) < ratio_excess:
        hi *= 2.0
        expansions += 1
        if expansions > 200:
            raise NoConvergence(
                "bracket expansion failed to enclose the target ratio",
                bracket=(lo, hi), ratio=1.0 + ratio_excess,
            )

    tau = 0.5 * (lo + hi)
    for _ in range(MAX_BISECT):
        tau = 0.5 * (lo + hi)
        excess = ctx.f_excess(tau)
        if abs(excess - ratio_excess) <= RATIO_RTOL * (1.0 + ratio_excess):
            break
        if excess < ratio_excess:
            lo = tau
        else:
            hi = tau
    else:
        raise NoConvergence(
            "bisection did not reach the ratio tolerance",
            bracket=(lo, hi), achieved_ratio=1.0 + ctx.f_excess(tau),
            ratio=1.0 + ratio_excess,
        )

    d = _dose_for_trough(ctx, target.lower, tau)
    achieved_lower = steady_state.ss_lower(p, d, tau)
    achieved_upper = steady_state.ss_upper(p, d, tau)
    if (abs(achieved_lower - target.lower) > DESIGN_VERIFY_RTOL * target.lower
            or abs(achieved_upper - target.upper) > DESIGN_VERIFY_RTOL * target.upper):
        raise NoConvergence(
            "designed regimen failed verification against its targets",
            d=d, tau=tau, achieved=(achieved_lower, achieved_upper),
            target=(target.lower, target.upper),
        )
    return d, tau


def feasible_set_check(p: PkParams, d: float, tau: float,
                       target: TherapeuticTarget) -> bool:
    """Whether the regimen's asymptotic range stays within [mic, tc]."""
    return (steady_state.ss_lower(p, d, tau) >= target.mic
            and steady_state.ss_upper(p, d, tau) <= target.tc)
