"""Per-cycle and single-dose pharmacokinetic summary quantities.

Cycle AUCs come from the analytic antiderivative of the two-exponential
cycle form; peaks from the closed-form critical point. When the
analytic in-cycle peak offset exceeds the cycle length (possible for
short intervals early in a schedule, where concentration is still
rising at the next dose), the reported maximum is the end-of-cycle
value and the result is flagged instead of silently pretending the
critical point was reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import PkParams, ValidationError, validate_params
from .bateman import (
    CycleCoefficients,
    PiecewiseSolution,
    absorption_gain,
    equi_multidose,
)


@dataclass(frozen=True)
class CycleMetrics:
    """Summary of one dosing cycle: AUC, peak time, peak concentration.

    peak_in_cycle is False when the analytic critical point falls after
    the cycle end; t_max and x_max then report the end-of-cycle supremum.
    """

    n: int
    auc: float
    t_max: float
    x_max: float
    peak_in_cycle: bool = True


def auc_single(p: PkParams, d: float) -> float:
    """Area under the single-dose curve over [0, inf)."""
    validate_params(p)
    if not d > 0.0:
        raise ValidationError(f"dose must be > 0, got {d!r}")
    return absorption_gain(p) * d * (1.0 / p.ke - 1.0 / p.ka)


def auc_cycle(p: PkParams, d: float, tau: float, n: int) -> float:
    """Area under the concentration curve over cycle n of an equi-dose plan."""
    validate_params(p)
    if n < 1:
        raise ValidationError(f"cycle number must be >= 1, got {n}")
    if not (d > 0.0 and tau > 0.0):
        raise ValidationError("dose and interval must be > 0")
    alpha = math.exp(-p.ka * tau)
    beta = math.exp(-p.ke * tau)
    return absorption_gain(p) * d * (
        (1.0 - beta ** n) / p.ke - (1.0 - alpha ** n) / p.ka
    )


def _peak_from_coefficients(p: PkParams, c: CycleCoefficients) -> CycleMetrics:
    ratio = (p.ka * c.c2) / (p.ke * c.c1)
    offset = math.log(ratio) / (p.ka - p.ke)
    t_end = c.t_start + c.tau
    if 0.0 < offset <= c.tau:
        e2 = ratio ** (-p.ke / (p.ka - p.ke))
        e1 = ratio ** (-p.ka / (p.ka - p.ke))
        x_max = c.c1 * e2 - c.c2 * e1
        return CycleMetrics(
            n=c.n, auc=_auc_from_coefficients(p, c),
            t_max=c.t_start + offset, x_max=x_max, peak_in_cycle=True,
        )
    # Concentration is still rising at the next dose; the in-cycle
    # supremum sits at the closing boundary.
    x_end = c.c1 * c.beta - c.c2 * c.alpha
    return CycleMetrics(
        n=c.n, auc=_auc_from_coefficients(p, c),
        t_max=t_end, x_max=x_end, peak_in_cycle=False,
    )


def _auc_from_coefficients(p: PkParams, c: CycleCoefficients) -> float:
    return (c.c1 * (1.0 - c.beta) / p.ke) - (c.c2 * (1.0 - c.alpha) / p.ka)


def peak(p: PkParams, d: float, tau: float, n: int) -> CycleMetrics:
    """Peak time and concentration within cycle n of an equi-dose plan."""
    validate_params(p)
    if n < 1:
        raise ValidationError(f"cycle number must be >= 1, got {n}")
    sol = equi_multidose(p, d, tau)
    return _peak_from_coefficients(p, sol.coefficients(n))


def cycle_metrics(sol: PiecewiseSolution, n: int) -> CycleMetrics:
    """AUC and peak for cycle n of any piecewise solution."""
    return _peak_from_coefficients(sol.params, sol.coefficients(n))
