import math

import numpy as np
import pytest
from scipy.integrate import simpson

from multidose.core import PkParams, ValidationError
from multidose.bateman import equi_multidose
from multidose.pkmetrics import auc_single, peak
from multidose.steady_state import (
    auc_equality_check,
    gap_envelope,
    n_epsilon,
    periodicity_gap,
    ss_lower,
    ss_upper,
    summarize,
    width,
    width_limit,
)

PARAM_SETS = [
    PkParams(1.0, 0.1, 1.0, 1.0),
    PkParams(0.7480, 0.2031, 19.1933, 5000.0),
    PkParams(0.4, 1.6, 2.0, 250.0),  # flip-flop
]


class TestBounds:
    def test_lower_is_remainder_limit(self, canonical):
        sol = equi_multidose(canonical, 100.0, 6.0)
        limit = ss_lower(canonical, 100.0, 6.0)
        assert limit == pytest.approx(134.87603372266955, rel=1e-13)
        assert abs(sol.remainders(200)[0] - limit) <= 1e-9 * limit

    def test_upper_is_peak_limit(self, canonical):
        limit = ss_upper(canonical, 100.0, 6.0)
        assert limit == pytest.approx(187.41999262256405, rel=1e-13)
        assert abs(peak(canonical, 100.0, 6.0, 200).x_max - limit) <= 1e-9 * limit

    def test_long_interval_limits(self, canonical):
        assert ss_lower(canonical, 100.0, 1e6) == 0.0
        assert ss_upper(canonical, 100.0, 1e6) == pytest.approx(
            peak(canonical, 100.0, 1e6, 1).x_max, rel=1e-12)

    def test_linear_in_dose(self, canonical):
        assert ss_lower(canonical, 200.0, 6.0) == pytest.approx(
            2.0 * ss_lower(canonical, 100.0, 6.0), rel=1e-14)
        assert ss_upper(canonical, 200.0, 6.0) == pytest.approx(
            2.0 * ss_upper(canonical, 100.0, 6.0), rel=1e-14)

    def test_upper_exceeds_lower_randomized(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            ka, ke = rng.uniform(0.05, 3.0, 2)
            if abs(ka - ke) < 1e-3 * max(ka, ke):
                continue
            p = PkParams(ka, ke, rng.uniform(0.2, 5.0), rng.uniform(1.0, 5000.0))
            d = rng.uniform(10.0, 1000.0)
            tau = rng.uniform(0.5, 48.0)
            lo, hi = ss_lower(p, d, tau), ss_upper(p, d, tau)
            assert 0.0 < lo < hi

    @pytest.mark.parametrize("p", PARAM_SETS, ids=["normal", "fitted", "flipflop"])
    def test_monotone_in_dose_and_interval(self, p):
        taus = np.linspace(2.0, 40.0, 20)
        lows = [ss_lower(p, 100.0, t) for t in taus]
        highs = [ss_upper(p, 100.0, t) for t in taus]
        assert all(b < a for a, b in zip(lows, lows[1:]))
        assert all(b < a for a, b in zip(highs, highs[1:]))
        doses = np.linspace(50.0, 500.0, 20)
        assert all(ss_lower(p, b, 8.0) > ss_lower(p, a, 8.0)
                   for a, b in zip(doses, doses[1:]))
        assert all(ss_upper(p, b, 8.0) > ss_upper(p, a, 8.0)
                   for a, b in zip(doses, doses[1:]))


class TestWidth:
    def test_linear_in_dose(self, canonical):
        assert width(canonical, 200.0, 6.0) == pytest.approx(
            2.0 * width(canonical, 100.0, 6.0), rel=1e-13)

    @pytest.mark.parametrize("p", PARAM_SETS, ids=["normal", "fitted", "flipflop"])
    def test_increasing_in_interval(self, p):
        taus = np.linspace(1.0, 40.0, 20)
        values = [width(p, 100.0, t) for t in taus]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_long_interval_limit(self, canonical):
        assert width(canonical, 100.0, 1e6) == pytest.approx(
            width_limit(canonical, 100.0), rel=1e-6)
        assert width_limit(canonical, 100.0) == pytest.approx(
            peak(canonical, 100.0, 1e6, 1).x_max, rel=1e-12)


class TestPeriodicityGap:
    def test_dominated_by_envelope(self, canonical):
        # The bound is attained at the cycle opening, so allow rounding
        # headroom between the two evaluation paths.
        sol = equi_multidose(canonical, 100.0, 6.0)
        for n in range(1, 61):
            gap = periodicity_gap(sol, n)
            assert gap <= gap_envelope(canonical, 100.0, 6.0, n) * (1.0 + 1e-12)

    def test_gap_ratio_approaches_slow_decay(self, canonical):
        sol = equi_multidose(canonical, 100.0, 6.0)
        beta = math.exp(-canonical.ke * 6.0)
        ratios = [periodicity_gap(sol, n) / periodicity_gap(sol, n + 1)
                  for n in range(20, 25)]
        for r in ratios:
            assert r == pytest.approx(1.0 / beta, rel=1e-6)

    def test_rejects_cycle_zero(self, canonical):
        sol = equi_multidose(canonical, 100.0, 6.0)
        with pytest.raises(ValidationError):
            periodicity_gap(sol, 0)


class TestNEpsilon:
    def test_frozen_direct_scan_value(self, canonical):
        assert n_epsilon(canonical, 100.0, 6.0, 1e-6) == 32

    def test_minimality(self, canonical):
        sol = equi_multidose(canonical, 100.0, 6.0)
        gap2 = periodicity_gap(sol, 2)
        assert n_epsilon(canonical, 100.0, 6.0, gap2 * 1.01) == 2

    def test_nonincreasing_in_eps(self, canonical):
        values = [n_epsilon(canonical, 100.0, 6.0, eps)
                  for eps in (1e-2, 1e-4, 1e-6, 1e-8)]
        assert values == sorted(values)
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_rejects_nonpositive_eps(self, canonical):
        with pytest.raises(ValidationError):
            n_epsilon(canonical, 100.0, 6.0, 0.0)


class TestAucEquality:
    def test_identity_holds_analytically(self, canonical):
        total, limiting, rel = auc_equality_check(canonical, 100.0, 6.0)
        assert rel <= 1e-12
        assert total == pytest.approx(auc_single(canonical, 100.0), rel=1e-15)

    def test_quadrature_of_late_cycle(self, canonical):
        sol = equi_multidose(canonical, 100.0, 6.0)
        n = 300
        t = np.linspace((n - 1) * 6.0, n * 6.0, 100_001)
        quad = simpson(sol.x(t), x=t)
        assert quad == pytest.approx(auc_single(canonical, 100.0), rel=1e-8)

    def test_linear_in_dose(self, canonical):
        t1 = auc_equality_check(canonical, 100.0, 6.0)
        t2 = auc_equality_check(canonical, 200.0, 6.0)
        assert t2[0] == pytest.approx(2.0 * t1[0], rel=1e-14)
        assert t2[1] == pytest.approx(2.0 * t1[1], rel=1e-14)


class TestConvergenceRate:
    def test_remainder_gap_decays_at_slow_rate(self, canonical):
        sol = equi_multidose(canonical, 100.0, 6.0)
        limit = ss_lower(canonical, 100.0, 6.0)
        rate = max(math.exp(-canonical.ka * 6.0), math.exp(-canonical.ke * 6.0))
        ns = np.arange(5, 30)
        gaps = np.array([abs(sol.remainders(int(n))[0] - limit) for n in ns])
        slope = np.polyfit(ns, np.log(gaps), 1)[0]
        assert slope == pytest.approx(math.log(rate), rel=0.05)


def test_summarize_bundles_everything(canonical):
    s = summarize(canonical, 100.0, 6.0, eps=1e-6)
    assert s.ss_lower == pytest.approx(134.87603372266955, rel=1e-13)
    assert s.ss_upper == pytest.approx(187.41999262256405, rel=1e-13)
    assert s.width == pytest.approx(s.ss_upper - s.ss_lower, rel=1e-13)
    assert s.n_epsilon == 32
    assert s.auc_ss == pytest.approx(auc_single(canonical, 100.0), rel=1e-12)
