"""Physical-layer math and baseline equilibrium roots."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq, minimize_scalar

import mfgpower as mp
from mfgpower.model import REPEATED_OPERATING_POINT, STATIC_NASH

A = 0.9
PARAMS = mp.ModelParams()  # rate 1e6, noise 0.1, load 1, exponential shape 0.9


class TestSinr:
    def test_zero_power(self):
        assert mp.sinr(0.0, 1.0, 0.9, 0.1) == 0.0

    def test_direct_arithmetic(self):
        assert mp.sinr(0.9, 1.0, 0.9, 0.1) == pytest.approx(0.9, rel=1e-15)
        assert mp.sinr(1.0, 2.0, 0.0, 0.1) == pytest.approx(20.0, rel=1e-15)

    def test_zero_iff_zero_received_power(self):
        assert mp.sinr(1.0, 0.0, 0.5, 0.1) == 0.0
        assert mp.sinr(0.5, 0.3, 0.0, 0.2) > 0.0

    @pytest.mark.parametrize("bad", [(-1, 1, 0, 0.1), (1, -1, 0, 0.1), (1, 1, -1, 0.1)])
    def test_negative_inputs_rejected(self, bad):
        with pytest.raises(ValueError):
            mp.sinr(*bad)

    def test_noise_must_be_positive(self):
        with pytest.raises(ValueError):
            mp.sinr(1.0, 1.0, 0.0, 0.0)


class TestEnergyEfficiency:
    def test_zero_power_extension(self):
        assert mp.energy_efficiency(0.0, 5.0, PARAMS) == 0.0

    def test_closed_form(self):
        # rate * exp(-a/gamma) / p at gamma = 0.9, p = 0.9
        expected = 1e6 * math.exp(-1.0) / 0.9
        assert mp.energy_efficiency(0.9, 0.9, PARAMS) == pytest.approx(expected, rel=1e-12)

    def test_saturates_at_rate_per_watt(self):
        assert mp.energy_efficiency(1.0, 1e12, PARAMS) == pytest.approx(1e6, rel=1e-6)


class TestSuccessFunction:
    def test_contract_bounds(self):
        f = mp.SuccessFunction.exponential(A)
        assert f.eval(0.0) == 0.0
        assert f.eval(1e-12) == pytest.approx(0.0, abs=1e-15)
        assert f.eval(1e9) == pytest.approx(1.0, rel=1e-8)
        gammas = np.geomspace(1e-3, 1e3, 200)
        vals = f.eval(gammas)
        assert np.all(np.diff(vals) >= 0.0)
        assert np.all((vals >= 0.0) & (vals <= 1.0))

    def test_derivative_matches_finite_differences(self):
        f = mp.SuccessFunction.exponential(A)
        gammas = np.geomspace(0.1, 10.0, 64)
        h = 1e-6 * gammas
        fd = (f.eval(gammas + h) - f.eval(gammas - h)) / (2.0 * h)
        assert np.max(np.abs(fd - f.deriv(gammas)) / np.abs(fd)) < 1e-6

    def test_validate_rejects_decreasing(self):
        bad = mp.SuccessFunction(eval=lambda g: 1.0 / (1.0 + np.asarray(g)), deriv=lambda g: g)
        with pytest.raises(ValueError):
            bad.validate()


class TestSolveBeta:
    def test_static_analytic_root(self):
        # x f'(x) = f(x) with f = exp(-a/x) reduces to x = a
        eq = mp.solve_beta(STATIC_NASH, 1.0, mp.SuccessFunction.exponential(A))
        assert eq.beta == pytest.approx(A, abs=1e-10)
        assert eq.valid

    def test_static_matches_independent_bisection(self):
        f = mp.SuccessFunction.exponential(A)
        resid = lambda x: x * f.deriv(x) - f.eval(x)
        ref = brentq(resid, 0.5, 2.0, xtol=1e-14)
        eq = mp.solve_beta(STATIC_NASH, 1.0, f)
        assert eq.beta == pytest.approx(ref, abs=1e-10)

    def test_repeated_analytic_root(self):
        # x (1 - t x) f'(x) = f(x) reduces to x = a / (1 + a t)
        eq = mp.solve_beta(REPEATED_OPERATING_POINT, 1.0, mp.SuccessFunction.exponential(A))
        assert eq.beta == pytest.approx(A / (1.0 + A), abs=1e-10)

    def test_repeated_degenerates_to_static_at_small_load(self):
        f = mp.SuccessFunction.exponential(A)
        eq = mp.solve_beta(REPEATED_OPERATING_POINT, 1e-9, f)
        assert eq.beta == pytest.approx(A, rel=1e-6)

    def test_residuals_below_tolerance(self):
        f = mp.SuccessFunction.exponential(A)
        eq_s = mp.solve_beta(STATIC_NASH, 1.0, f)
        eq_r = mp.solve_beta(REPEATED_OPERATING_POINT, 1.0, f)
        x = eq_s.beta
        assert abs(x * f.deriv(x) - f.eval(x)) < 1e-12
        x = eq_r.beta
        assert abs(x * (1.0 - x) * f.deriv(x) - f.eval(x)) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(
        shape=st.floats(min_value=0.2, max_value=3.0),
        load=st.floats(min_value=0.05, max_value=2.0),
    )
    def test_analytic_roots_over_parameter_space(self, shape, load):
        f = mp.SuccessFunction.exponential(shape)
        eq_s = mp.solve_beta(STATIC_NASH, load, f, validate=False)
        eq_r = mp.solve_beta(REPEATED_OPERATING_POINT, load, f, validate=False)
        assert eq_s.beta == pytest.approx(shape, rel=1e-9)
        assert eq_r.beta == pytest.approx(shape / (1.0 + shape * load), rel=1e-9)

    def test_repeated_below_static_over_load_grid(self):
        f = mp.SuccessFunction.exponential(A)
        for load in np.linspace(0.05, 3.0, 12):
            eq_s = mp.solve_beta(STATIC_NASH, load, f, validate=False)
            eq_r = mp.solve_beta(REPEATED_OPERATING_POINT, load, f, validate=False)
            assert eq_r.beta < eq_s.beta

    def test_no_root_reported(self):
        # f with derivative always dominating: x f' - f > 0 on the scan range
        f = mp.SuccessFunction(
            eval=lambda g: np.minimum(np.asarray(g, dtype=float) * 0.0 + 1e-9, 1.0),
            deriv=lambda g: np.zeros_like(np.asarray(g, dtype=float)) + 1e-12,
        )
        with pytest.raises(mp.RootFindingError):
            mp.solve_beta(STATIC_NASH, 1.0, f, validate=False)

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            mp.solve_beta("other", 1.0, mp.SuccessFunction.exponential(A))


class TestEquilibriumPower:
    def test_static_power(self):
        eq = mp.solve_beta(STATIC_NASH, 1.0, PARAMS.success)
        p, clamped = mp.equilibrium_power(1.0, eq, PARAMS)
        assert p == pytest.approx(0.9, abs=1e-10)
        assert not clamped

    def test_repeated_power(self):
        eq = mp.solve_beta(REPEATED_OPERATING_POINT, 1.0, PARAMS.success)
        p, _ = mp.equilibrium_power(1.0, eq, PARAMS)
        # noise * beta / (1 - load * beta) with beta = a/(1+a) gives noise * a
        assert p == pytest.approx(0.09, abs=1e-10)

    def test_power_vanishes_at_large_gain(self):
        eq = mp.solve_beta(STATIC_NASH, 1.0, PARAMS.success)
        p, _ = mp.equilibrium_power(1e9, eq, PARAMS)
        assert p < 1e-8

    def test_clamped_at_p_max(self):
        eq = mp.solve_beta(STATIC_NASH, 1.0, PARAMS.success)
        p, clamped = mp.equilibrium_power(1e-3, eq, PARAMS)
        assert clamped and p == PARAMS.p_max

    def test_saturated_system_rejected(self):
        bad = mp.StaticEquilibrium(beta=2.0, mode=STATIC_NASH, valid=False)
        with pytest.raises(mp.SaturationError):
            mp.equilibrium_power(1.0, bad, PARAMS)

    def test_sinr_self_consistency(self):
        # at the symmetric point, interference = load * p * gain_mean and the
        # resulting SINR is the target again
        eq = mp.solve_beta(STATIC_NASH, 1.0, PARAMS.success)
        p, _ = mp.equilibrium_power(1.0, eq, PARAMS)
        interference = PARAMS.load * p * PARAMS.channel_gain_mean
        gamma = mp.sinr(p, 1.0, interference, PARAMS.noise_power)
        assert gamma == pytest.approx(eq.beta, abs=1e-9)

    def test_efficiency_maximizer_at_static_target(self):
        # golden-section on p -> efficiency at fixed interference peaks where
        # the SINR equals the static equilibrium target
        eq = mp.solve_beta(STATIC_NASH, 1.0, PARAMS.success)
        interference = 0.4
        g = 1.0

        def neg_u(p):
            gamma = mp.sinr(p, g, interference, PARAMS.noise_power)
            return -mp.energy_efficiency(p, gamma, PARAMS)

        res = minimize_scalar(neg_u, bracket=(1e-3, 0.5, 4.0), method="golden", tol=1e-12)
        analytic = eq.beta * (PARAMS.noise_power + interference) / g
        assert res.x == pytest.approx(analytic, rel=1e-6)


class TestModelParams:
    def test_rejects_nonpositive_fields(self):
        with pytest.raises(ValueError):
            mp.ModelParams(rate=0.0)
        with pytest.raises(ValueError):
            mp.ModelParams(t_end=0.0)

    def test_degenerate_p_max_allowed(self):
        assert mp.ModelParams(p_max=0.0).p_max == 0.0
        with pytest.raises(ValueError):
            mp.ModelParams(p_max=-1.0)
