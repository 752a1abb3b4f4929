"""Closed-form concentration and gut-amount trajectories.

Single doses follow the classic two-exponential oral curve; repeated
dosing yields a piecewise solution whose cycle-n coefficients are
geometric sums (constant regimens) or running remainders (arbitrary
schedules). Evaluation is exact closed form everywhere: no
interpolation, cycle lookup by binary search over precomputed dose
times.

Conventions: evaluation exactly at a dose time t_n returns the incoming
cycle's values, i.e. the (continuous) concentration and the post-dose
gut amount. For a finite arbitrary schedule the final cycle's form
remains valid for all later times, so queries beyond the last interval
simply keep decaying.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    EquiDose,
    PkParams,
    Regimen,
    ValidationError,
    dose_times,
    validate_params,
    validate_regimen,
)


def absorption_gain(p: PkParams) -> float:
    """The factor ka*gamma / (V*(ka - ke)) that scales every dose into x."""
    return p.ka * p.gamma / (p.volume * (p.ka - p.ke))


@dataclass(frozen=True)
class SingleDoseCurve:
    """Response to one oral dose at t=0: x rises then falls, y decays."""

    params: PkParams
    dose: float

    def x(self, t):
        p = self.params
        t = np.asarray(t, dtype=float)
        out = absorption_gain(p) * self.dose * (np.exp(-p.ke * t) - np.exp(-p.ka * t))
        return out if out.shape else float(out)

    def y(self, t):
        t = np.asarray(t, dtype=float)
        out = self.dose * np.exp(-self.params.ka * t)
        return out if out.shape else float(out)

    def __call__(self, t):
        return self.x(t), self.y(t)


def single_dose(p: PkParams, d: float) -> SingleDoseCurve:
    """Closed-form trajectory for a single dose of d mg at t=0."""
    validate_params(p)
    if not d > 0.0:
        raise ValidationError(f"dose must be > 0, got {d!r}")
    return SingleDoseCurve(p, d)


@dataclass(frozen=True)
class CycleCoefficients:
    """Closed-form coefficients of cycle n over [t_start, t_start + tau].

    Within the cycle, x(t) = c1*exp(-ke*(t - t_start)) -
    c2*exp(-ka*(t - t_start)) and y(t) = y_start*exp(-ka*(t - t_start)),
    where y_start is the gut amount just after the cycle's dose. alpha
    and beta are the per-cycle decay factors exp(-ka*tau), exp(-ke*tau).
    """

    n: int
    c1: float
    c2: float
    y_start: float
    t_start: float
    tau: float
    alpha: float
    beta: float


class PiecewiseSolution:
    """Multi-dose closed-form solution, immutable after construction.

    Equi-dose regimens have coefficients available for every cycle index
    (computed on the fly from the geometric sums); arbitrary regimens
    carry the finite coefficient table built by the remainder recursion.
    """

    def __init__(self, params: PkParams, regimen: Regimen):
        validate_params(params)
        validate_regimen(regimen)
        self.params = params
        self.regimen = regimen
        p = params
        self._gain = absorption_gain(p)
        if isinstance(regimen, EquiDose):
            self._equi = True
            self._alpha = float(np.exp(-p.ka * regimen.interval))
            self._beta = float(np.exp(-p.ke * regimen.interval))
            self._n_cycles = None
        else:
            self._equi = False
            self._n_cycles = len(regimen.entries)
            self._build_arbitrary_table()

    # -- construction ---------------------------------------------------

    def _build_arbitrary_table(self) -> None:
        p = self.params
        entries = self.regimen.entries
        starts = dose_times(self.regimen)
        c1 = np.empty(len(entries))
        c2 = np.empty(len(entries))
        y0 = np.empty(len(entries))
        rem_x = np.zeros(len(entries) + 1)
        rem_y = np.zeros(len(entries) + 1)
        for i, (d, tau) in enumerate(entries):
            amount = rem_y[i] + d
            c2[i] = self._gain * amount
            c1[i] = c2[i] + rem_x[i]
            y0[i] = amount
            a = np.exp(-p.ka * tau)
            b = np.exp(-p.ke * tau)
            rem_y[i + 1] = amount * a
            rem_x[i + 1] = c1[i] * b - c2[i] * a
        self._c1 = c1
        self._c2 = c2
        self._y0 = y0
        self._rem_x = rem_x
        self._rem_y = rem_y
        self._starts = starts

    # -- coefficient access ----------------------------------------------

    @property
    def n_cycles(self) -> int | None:
        """Number of cycles, or None for an unbounded equi-dose schedule."""
        return self._n_cycles

    def coefficients(self, n: int) -> CycleCoefficients:
        """Closed-form coefficients of cycle n (1-based)."""
        if n < 1:
            raise ValidationError(f"cycle number must be >= 1, got {n}")
        p = self.params
        if self._equi:
            r = self.regimen
            geo_b = (1.0 - self._beta ** n) / (1.0 - self._beta)
            geo_a = (1.0 - self._alpha ** n) / (1.0 - self._alpha)
            g = self._gain * r.dose
            return CycleCoefficients(
                n=n, c1=g * geo_b, c2=g * geo_a, y_start=r.dose * geo_a,
                t_start=(n - 1) * r.interval, tau=r.interval,
                alpha=self._alpha, beta=self._beta,
            )
        if n > self._n_cycles:
            raise ValidationError(
                f"cycle {n} exceeds the {self._n_cycles} cycles of the regimen"
            )
        i = n - 1
        tau = float(self.regimen.entries[i][1])
        return CycleCoefficients(
            n=n, c1=float(self._c1[i]), c2=float(self._c2[i]),
            y_start=float(self._y0[i]), t_start=float(self._starts[i]),
            tau=tau, alpha=float(np.exp(-p.ka * tau)),
            beta=float(np.exp(-p.ke * tau)),
        )

    def remainders(self, n: int) -> tuple[float, float]:
        """(x, y) just before dose n+1: the values closing cycle n.

        n = 0 returns (0, 0); the gut remainder is the pre-jump left
        limit at t_n.
        """
        if n < 0:
            raise ValidationError(f"cycle number must be >= 0, got {n}")
        if n == 0:
            return 0.0, 0.0
        if not self._equi:
            if n > self._n_cycles:
                raise ValidationError(
                    f"cycle {n} exceeds the {self._n_cycles} cycles of the regimen"
                )
            return float(self._rem_x[n]), float(self._rem_y[n])
        c = self.coefficients(n)
        a, b = self._alpha, self._beta
        return float(c.c1 * b - c.c2 * a), float(c.y_start * a)

    # -- evaluation -------------------------------------------------------

    def _dose_grid(self, t_max: float) -> np.ndarray:
        if self._equi:
            tau = self.regimen.interval
            n = max(1, int(np.floor(t_max / tau)) + 2)
            return np.arange(n, dtype=float) * tau
        return self._starts[:-1]

    def cycle_index(self, t) -> np.ndarray | int:
        """1-based cycle covering t; dose instants map to the new cycle."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t_arr < 0.0):
            raise ValidationError("trajectory is defined for t >= 0 only")
        starts = self._dose_grid(float(t_arr.max()) if t_arr.size else 0.0)
        idx = np.searchsorted(starts, t_arr, side="right")
        if self._n_cycles is not None:
            idx = np.minimum(idx, self._n_cycles)
        if np.isscalar(t) or np.asarray(t).shape == ():
            return int(idx[0])
        return idx

    def _cycle_arrays(self, idx: np.ndarray) -> tuple[np.ndarray, ...]:
        """(c1, c2, y_start, t_start) for an array of 1-based cycle indices."""
        if not self._equi:
            i = idx - 1
            return self._c1[i], self._c2[i], self._y0[i], self._starts[i]
        r = self.regimen
        geo_b = (1.0 - self._beta ** idx) / (1.0 - self._beta)
        geo_a = (1.0 - self._alpha ** idx) / (1.0 - self._alpha)
        g = self._gain * r.dose
        return (g * geo_b, g * geo_a, r.dose * geo_a,
                (idx - 1) * r.interval)

    def x(self, t):
        """Plasma concentration at t (scalar or array)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.atleast_1d(self.cycle_index(t_arr))
        c1, c2, _, t0 = self._cycle_arrays(idx)
        s = t_arr - t0
        p = self.params
        out = c1 * np.exp(-p.ke * s) - c2 * np.exp(-p.ka * s)
        if np.isscalar(t) or np.asarray(t).shape == ():
            return float(out[0])
        return out

    def y(self, t):
        """Gut amount at t (post-dose at exact dose instants)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.atleast_1d(self.cycle_index(t_arr))
        _, _, y0, t0 = self._cycle_arrays(idx)
        out = y0 * np.exp(-self.params.ka * (t_arr - t0))
        if np.isscalar(t) or np.asarray(t).shape == ():
            return float(out[0])
        return out

    def __call__(self, t):
        return self.x(t), self.y(t)


def equi_multidose(p: PkParams, d: float, tau: float) -> PiecewiseSolution:
    """Piecewise solution for d mg every tau hours, indefinitely."""
    return PiecewiseSolution(p, EquiDose(dose=d, interval=tau))


def arbitrary_multidose(p: PkParams, r: Regimen) -> PiecewiseSolution:
    """Piecewise solution for any dosing schedule."""
    return PiecewiseSolution(p, r)


def remainders(sol: PiecewiseSolution, n: int) -> tuple[float, float]:
    """Module-level alias for PiecewiseSolution.remainders."""
    return sol.remainders(n)
