import math

import numpy as np
import pytest
from scipy.integrate import simpson

from multidose.core import Arbitrary, PkParams, ValidationError
from multidose.bateman import arbitrary_multidose, equi_multidose, single_dose
from multidose.pkmetrics import auc_cycle, auc_single, cycle_metrics, peak

PARAM_SETS = [
    PkParams(1.0, 0.1, 1.0, 1.0),
    PkParams(0.7480, 0.2031, 19.1933, 5000.0),
    PkParams(0.4, 1.6, 2.0, 250.0),  # flip-flop
]


class TestAucSingle:
    def test_algebraic_simplification(self, clarithromycin):
        p = clarithromycin
        assert auc_single(p, 250.0) == pytest.approx(
            250.0 * p.gamma / (p.volume * p.ke), rel=1e-14)

    def test_frozen_value_with_quadrature_and_tail(self, clarithromycin):
        value = auc_single(clarithromycin, 250.0)
        assert value == pytest.approx(4.725086164451009, rel=1e-13)
        curve = single_dose(clarithromycin, 250.0)
        t = np.linspace(0.0, 200.0, 400_001)
        p = clarithromycin
        gain = p.ka * p.gamma * 250.0 / (p.volume * (p.ka - p.ke))
        tail = gain * (math.exp(-p.ke * 200.0) / p.ke
                       - math.exp(-p.ka * 200.0) / p.ka)
        assert simpson(curve.x(t), x=t) + tail == pytest.approx(value, rel=1e-10)

    def test_linear_in_dose(self, canonical):
        assert auc_single(canonical, 200.0) == pytest.approx(
            2.0 * auc_single(canonical, 100.0), rel=1e-14)


class TestAucCycle:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_simpson_oracle(self, canonical, n):
        sol = equi_multidose(canonical, 100.0, 6.0)
        t = np.linspace((n - 1) * 6.0, n * 6.0, 100_001)
        quad = simpson(sol.x(t), x=t)
        assert auc_cycle(canonical, 100.0, 6.0, n) == pytest.approx(quad, rel=1e-8)

    def test_increasing_in_n_and_bounded_by_single(self, canonical):
        values = [auc_cycle(canonical, 100.0, 6.0, n) for n in range(1, 60)]
        assert all(b > a for a, b in zip(values, values[1:]))
        total = auc_single(canonical, 100.0)
        assert all(v < total for v in values)
        assert values[-1] == pytest.approx(total, rel=1e-4)

    def test_long_interval_approaches_single_from_below(self, canonical):
        total = auc_single(canonical, 100.0)
        one = auc_cycle(canonical, 100.0, 200.0, 1)
        assert one < total
        assert one == pytest.approx(total, rel=1e-6)

    def test_linear_in_dose(self, canonical):
        assert auc_cycle(canonical, 200.0, 6.0, 3) == pytest.approx(
            2.0 * auc_cycle(canonical, 100.0, 6.0, 3), rel=1e-14)


class TestPeak:
    def test_first_cycle_reduces_to_classic_formula(self, canonical):
        p = canonical
        m = peak(p, 100.0, 6.0, 1)
        t_classic = math.log(p.ka / p.ke) / (p.ka - p.ke)
        assert m.t_max == pytest.approx(t_classic, rel=1e-14)
        assert m.x_max == pytest.approx(single_dose(p, 100.0).x(t_classic), rel=1e-12)
        assert m.peak_in_cycle

    @pytest.mark.parametrize("n", [1, 2, 10])
    def test_grid_argmax_oracle(self, canonical, n):
        sol = equi_multidose(canonical, 100.0, 6.0)
        t = np.linspace((n - 1) * 6.0, n * 6.0, 1_000_001)
        x = sol.x(t)
        i = int(np.argmax(x))
        m = peak(canonical, 100.0, 6.0, n)
        assert m.t_max == pytest.approx(t[i], abs=2e-5)
        assert m.x_max == pytest.approx(x[i], rel=1e-6)
        assert m.x_max >= x[i]

    @pytest.mark.parametrize("p", PARAM_SETS, ids=["normal", "fitted", "flipflop"])
    def test_x_max_nondecreasing_in_n(self, p):
        values = [peak(p, 100.0, 5.0, n).x_max for n in range(1, 51)]
        assert all(b >= a * (1 - 1e-13) for a, b in zip(values, values[1:]))

    def test_peak_dominates_uniform_samples(self, canonical):
        n = 3
        m = peak(canonical, 100.0, 6.0, n)
        sol = equi_multidose(canonical, 100.0, 6.0)
        t = np.linspace((n - 1) * 6.0, n * 6.0, 1000)
        assert m.peak_in_cycle
        assert np.all(m.x_max >= sol.x(t) - 1e-12 * m.x_max)

    def test_short_interval_flags_boundary_peak(self):
        # ka close to ke keeps the curve rising past a short cycle.
        p = PkParams(ka=1.0, ke=0.9, gamma=1.0, volume=1.0)
        m = peak(p, 100.0, 0.5, 1)
        assert not m.peak_in_cycle
        assert m.t_max == pytest.approx(0.5)
        sol = equi_multidose(p, 100.0, 0.5)
        t = np.linspace(0.0, 0.5, 10_001)[:-1]
        assert np.all(sol.x(t) <= m.x_max)

    def test_linear_in_dose(self, canonical):
        a = peak(canonical, 100.0, 6.0, 4)
        b = peak(canonical, 200.0, 6.0, 4)
        assert b.x_max == pytest.approx(2.0 * a.x_max, rel=1e-13)
        assert b.t_max == pytest.approx(a.t_max, rel=1e-13)

    def test_rejects_bad_cycle(self, canonical):
        with pytest.raises(ValidationError):
            peak(canonical, 100.0, 6.0, 0)


class TestCycleMetricsForArbitrary:
    def test_matches_quadrature_per_cycle(self, canonical):
        reg = Arbitrary([(120.0, 3.0), (80.0, 5.0), (200.0, 2.0), (60.0, 7.0)])
        sol = arbitrary_multidose(canonical, reg)
        starts = [0.0, 3.0, 8.0, 10.0, 17.0]
        for n in range(1, 5):
            t = np.linspace(starts[n - 1], starts[n], 50_001)
            quad = simpson(sol.x(t), x=t)
            m = cycle_metrics(sol, n)
            assert m.auc == pytest.approx(quad, rel=1e-8)
            assert m.x_max >= np.max(sol.x(t)) - 1e-12 * m.x_max
