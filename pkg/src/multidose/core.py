"""Domain types and validation shared by every other module.

Units are fixed throughout the package: time in hours, dose amounts in mg,
distribution volume in mL. Concentrations carry an explicit unit tag
(ug/mL by default, ng/mL accepted) and are converted only at I/O
boundaries. All times are offsets from the first dose at t = 0.

Every type here is an immutable value; instances are safe to share
between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

#: Relative separation below which the two rate constants are treated as
#: equal and rejected (the closed forms divide by ka - ke).
RATE_EQUALITY_RTOL = 1e-9

CONCENTRATION_UNITS = ("ug/mL", "ng/mL")

#: Conversion factors into the canonical unit (ug/mL).
_TO_UG_PER_ML = {"ug/mL": 1.0, "ng/mL": 1e-3}


class PkError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PkError, ValueError):
    """Invalid parameters, regimens, schemas, or input data."""


class NonPositiveParameter(ValidationError):
    """A parameter that must be strictly positive is not."""


class EqualRateConstants(ValidationError):
    """ka and ke coincide within RATE_EQUALITY_RTOL; the model excludes this."""


class InsufficientData(ValidationError):
    """Too few data points for the requested estimation."""


class StepTooLarge(ValidationError):
    """Integrator step too coarse for the dosing schedule."""


class NumericalError(PkError):
    """A numerical procedure failed to produce a trustworthy result."""


class NoConvergence(NumericalError):
    """Iteration limits hit or verification failed; carries final state."""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context


@dataclass(frozen=True)
class PkParams:
    """Patient/drug parameter vector for first-order absorption-elimination.

    ka and ke are the absorption and elimination rate constants (1/h),
    gamma is the lumped bioavailability factor (dimensionless) scaling
    absorbed amount into concentration, volume the distribution volume
    (mL). Both orderings are permitted: ka > ke (the usual case) and
    ka < ke (flip-flop kinetics). ka == ke is rejected by
    validate_params; the closed forms are singular there.
    """

    ka: float
    ke: float
    gamma: float
    volume: float = 5000.0


def validate_params(p: PkParams) -> PkParams:
    """Check a parameter vector, returning it unchanged when valid.

    Raises NonPositiveParameter or EqualRateConstants naming the violated
    bound. Idempotent and total over finite floating-point inputs.
    """
    for name in ("ka", "ke", "gamma", "volume"):
        value = getattr(p, name)
        if not np.isfinite(value):
            raise NonPositiveParameter(f"{name} must be finite, got {value!r}")
        if value <= 0.0:
            raise NonPositiveParameter(f"{name} must be > 0, got {value!r}")
    if abs(p.ka - p.ke) < RATE_EQUALITY_RTOL * max(p.ka, p.ke):
        raise EqualRateConstants(
            f"ka={p.ka!r} and ke={p.ke!r} are equal within relative "
            f"tolerance {RATE_EQUALITY_RTOL:g}; this model requires ka != ke"
        )
    return p


@dataclass(frozen=True)
class EquiDose:
    """Constant regimen: `dose` mg administered every `interval` hours."""

    dose: float
    interval: float


@dataclass(frozen=True)
class Arbitrary:
    """Arbitrary regimen: ordered (dose_n, interval_n) pairs.

    Dose n is administered at t_{n-1} = sum of the preceding intervals
    (the first dose at t = 0); interval_n is the time from dose n to
    dose n+1, so entry n spans the cycle [t_{n-1}, t_n]. A skipped
    intake is encoded by widening the previous entry's interval.
    """

    entries: tuple[tuple[float, float], ...]

    def __init__(self, entries: Iterable[Sequence[float]]):
        normalized = tuple((float(d), float(tau)) for d, tau in entries)
        object.__setattr__(self, "entries", normalized)


Regimen = Union[EquiDose, Arbitrary]


def validate_regimen(r: Regimen) -> Regimen:
    """Check doses and intervals are strictly positive; return r unchanged."""
    if isinstance(r, EquiDose):
        if not (np.isfinite(r.dose) and r.dose > 0.0):
            raise NonPositiveParameter(f"dose must be > 0, got {r.dose!r}")
        if not (np.isfinite(r.interval) and r.interval > 0.0):
            raise NonPositiveParameter(f"interval must be > 0, got {r.interval!r}")
        return r
    if isinstance(r, Arbitrary):
        if not r.entries:
            raise ValidationError("arbitrary regimen must have at least one entry")
        for n, (d, tau) in enumerate(r.entries, start=1):
            if not (np.isfinite(d) and d > 0.0):
                raise NonPositiveParameter(f"entry {n}: dose must be > 0, got {d!r}")
            if not (np.isfinite(tau) and tau > 0.0):
                raise NonPositiveParameter(f"entry {n}: interval must be > 0, got {tau!r}")
        return r
    raise ValidationError(f"not a regimen: {r!r}")


def dose_times(r: Regimen, n_max: int | None = None) -> np.ndarray:
    """Cumulative dose-time grid [t_0=0, t_1, ..., t_{n_max}].

    t_{n-1} is when dose n is administered; t_n closes cycle n. For an
    EquiDose regimen t_n = n * interval and n_max is required; for an
    Arbitrary regimen n_max defaults to the number of entries and may
    not exceed it.
    """
    validate_regimen(r)
    if isinstance(r, EquiDose):
        if n_max is None:
            raise ValidationError("n_max is required for an equi-dose regimen")
        if n_max < 1:
            raise ValidationError(f"n_max must be >= 1, got {n_max}")
        return np.arange(n_max + 1, dtype=float) * r.interval
    if n_max is None:
        n_max = len(r.entries)
    if n_max < 1:
        raise ValidationError(f"n_max must be >= 1, got {n_max}")
    if n_max > len(r.entries):
        raise ValidationError(
            f"n_max={n_max} exceeds the {len(r.entries)} entries of the regimen"
        )
    intervals = np.array([tau for _, tau in r.entries[:n_max]], dtype=float)
    return np.concatenate(([0.0], np.cumsum(intervals)))


def cycle_window(r: Regimen, n: int) -> tuple[float, float]:
    """The half-open time window [t_{n-1}, t_n] covered by cycle n (1-based)."""
    if n < 1:
        raise ValidationError(f"cycle number must be >= 1, got {n}")
    t = dose_times(r, n)
    return float(t[n - 1]), float(t[n])


@dataclass(frozen=True)
class ConcentrationSeries:
    """Sampled (time, concentration) data with an explicit unit tag.

    Times are hours, strictly increasing and >= 0; concentrations are
    >= 0 in the declared unit.
    """

    times: tuple[float, ...]
    values: tuple[float, ...]
    unit: str = "ug/mL"

    def __init__(self, times: Iterable[float], values: Iterable[float],
                 unit: str = "ug/mL"):
        t = tuple(float(v) for v in times)
        c = tuple(float(v) for v in values)
        if len(t) != len(c):
            raise ValidationError(
                f"times ({len(t)}) and values ({len(c)}) differ in length"
            )
        if unit not in CONCENTRATION_UNITS:
            raise ValidationError(
                f"unknown concentration unit {unit!r}; expected one of "
                f"{CONCENTRATION_UNITS}"
            )
        for i, v in enumerate(t):
            if not np.isfinite(v) or v < 0.0:
                raise ValidationError(f"time at index {i} must be finite and >= 0, got {v!r}")
            if i and v <= t[i - 1]:
                raise ValidationError(
                    f"times must be strictly increasing; index {i} has {v!r} after {t[i-1]!r}"
                )
        for i, v in enumerate(c):
            if not np.isfinite(v) or v < 0.0:
                raise ValidationError(
                    f"concentration at index {i} must be finite and >= 0, got {v!r}"
                )
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", c)
        object.__setattr__(self, "unit", unit)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def points(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.times, self.values))

    def times_array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def to_unit(self, unit: str) -> "ConcentrationSeries":
        if unit not in CONCENTRATION_UNITS:
            raise ValidationError(
                f"unknown concentration unit {unit!r}; expected one of "
                f"{CONCENTRATION_UNITS}"
            )
        factor = _TO_UG_PER_ML[self.unit] / _TO_UG_PER_ML[unit]
        if factor == 1.0:
            return self
        return ConcentrationSeries(self.times,
                                   tuple(v * factor for v in self.values),
                                   unit)
