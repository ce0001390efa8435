"""Backward value solve: maximizer, sweep, invariants, refinement."""
import math

import numpy as np
import pytest

import mfgpower as mp
from mfgpower.hjb import Grid, P_EPS, _solve_hjb_full

PARAMS = mp.ModelParams()
A = 0.9


def small_grid(n_energy=40, n_time=250, horizon=20.0, e_max=20.0):
    return Grid(e_max, 0.0, horizon, n_energy, n_time)


class TestGrid:
    def test_spacing(self):
        g = small_grid()
        assert g.de == pytest.approx(0.5)
        assert g.dt == pytest.approx(0.08)
        assert g.energy_nodes.shape == (41,)
        assert g.times[0] == 0.0 and g.times[-1] == 20.0

    def test_from_cfl_margin(self):
        g = Grid.from_cfl(PARAMS, n_energy=200, margin=0.8)
        assert g.dt <= 0.8 * g.de / PARAMS.p_max * (1.0 + 1e-12)

    def test_invalid_sizes(self):
        with pytest.raises(mp.ConfigurationError):
            Grid(20.0, 0.0, 20.0, 1, 50)
        with pytest.raises(mp.ConfigurationError):
            Grid(20.0, 5.0, 5.0, 40, 50)

    def test_cfl_violation_rejected_before_solve(self):
        g = Grid(20.0, 0.0, 20.0, 4, 2)  # dt = 10 >> de / p_max = 1
        with pytest.raises(mp.ConfigurationError):
            mp.solve_hjb_backward(np.zeros(3), g, lambda e: np.zeros_like(e), PARAMS)


class TestHamiltonianArgmax:
    def test_interior_maximizer_no_interference(self):
        # first-order condition at zero shadow price puts the SINR at the
        # static target: p = a * noise / gain
        h, p = mp.hamiltonian_argmax(0.0, 0.0, 1.0, PARAMS)
        assert p == pytest.approx(A * 0.1, abs=1e-7)
        assert h == pytest.approx(1e6 * math.exp(-1.0) / 0.09, rel=1e-9)

    def test_interior_maximizer_with_interference(self):
        h, p = mp.hamiltonian_argmax(0.0, 0.9, 1.0, PARAMS)
        assert p == pytest.approx(A * (0.1 + 0.9), abs=1e-6)

    def test_large_shadow_price_shuts_transmission(self):
        h, p = mp.hamiltonian_argmax(1e15, 0.0, 1.0, PARAMS)
        assert (h, p) == (0.0, 0.0)

    def test_negative_interference_rejected(self):
        with pytest.raises(ValueError):
            mp.hamiltonian_argmax(0.0, -0.1, 1.0, PARAMS)

    def test_degenerate_p_max(self):
        params = mp.ModelParams(p_max=0.0)
        assert mp.hamiltonian_argmax(0.0, 0.0, 1.0, params) == (0.0, 0.0)

    def test_matches_golden_section_oracle(self):
        # independent scalar golden-section over the same interval
        lam, interference, g = 2e5, 0.3, 1.0

        def phi(p):
            gamma = p * g / (0.1 + interference)
            return 1e6 * math.exp(-A / gamma) / p - lam * p

        a, b = P_EPS, PARAMS.p_max
        inv = (math.sqrt(5.0) - 1.0) / 2.0
        for _ in range(200):
            x1, x2 = b - inv * (b - a), a + inv * (b - a)
            if phi(x1) >= phi(x2):
                b = x2
            else:
                a = x1
        p_ref = 0.5 * (a + b)
        h, p = mp.hamiltonian_argmax(lam, interference, g, PARAMS)
        assert p == pytest.approx(p_ref, rel=1e-9)
        assert h == pytest.approx(phi(p_ref), rel=1e-12)

    def test_generic_path_agrees_with_fast_path(self):
        exp_f = mp.SuccessFunction.exponential(A)
        generic = mp.SuccessFunction(eval=exp_f.eval, deriv=exp_f.deriv, shape=None)
        p_generic = mp.ModelParams(success=generic)
        for lam in (0.0, 1e4, 5e5, -2e4):
            h1, p1 = mp.hamiltonian_argmax(lam, 0.3, 1.0, PARAMS)
            h2, p2 = mp.hamiltonian_argmax(lam, 0.3, 1.0, p_generic)
            assert h1 == pytest.approx(h2, rel=1e-9, abs=1e-12)
            assert p1 == pytest.approx(p2, rel=1e-9, abs=1e-12)


class TestBackwardSweep:
    def test_single_step_hand_computed(self):
        # one explicit step from a zero terminal reward, no interference:
        # v = dt * rate * f(a) / p at p = a * noise / gain
        grid = Grid(20.0, 0.0, 0.2, 40, 2)
        i_traj = np.zeros(grid.n_time + 1)
        v, pol = mp.solve_hjb_backward(i_traj, grid, lambda e: np.zeros_like(e), PARAMS)
        expected = grid.dt * 1e6 * math.exp(-1.0) / 0.09
        assert v[1, 10] == pytest.approx(expected, rel=1e-9)
        assert pol[1, 10] == pytest.approx(0.09, abs=1e-6)

    def test_empty_battery_row_is_zero(self):
        grid = small_grid()
        i_traj = np.full(grid.n_time + 1, 0.2)
        v, pol = mp.solve_hjb_backward(i_traj, grid, lambda e: np.zeros_like(e), PARAMS)
        assert np.all(v[:, 0] == 0.0)
        assert np.all(pol[:, 0] == 0.0)

    def test_constant_reward_transported_unchanged_when_p_max_zero(self):
        params = mp.ModelParams(p_max=0.0)
        grid = small_grid()
        i_traj = np.zeros(grid.n_time + 1)
        v, pol = mp.solve_hjb_backward(i_traj, grid, lambda e: np.full_like(e, 3.5), params)
        assert np.all(v == 3.5)
        assert np.all(pol == 0.0)

    def test_terminal_condition_exact(self):
        grid = small_grid()
        q = lambda e: 0.1 * np.asarray(e) ** 2
        i_traj = np.full(grid.n_time + 1, 0.1)
        v, _ = mp.solve_hjb_backward(i_traj, grid, q, PARAMS)
        assert np.max(np.abs(v[-1] - q(grid.energy_nodes))) == 0.0

    def test_monotone_in_energy_and_nonnegative(self):
        grid = small_grid(n_energy=60, n_time=250)
        i_traj = np.linspace(0.6, 0.0, grid.n_time + 1)
        v, _ = mp.solve_hjb_backward(i_traj, grid, lambda e: np.zeros_like(e), PARAMS)
        assert np.all(v >= 0.0)
        assert np.all(np.diff(v, axis=1) >= -1e-9)

    def test_interference_shape_validated(self):
        grid = small_grid()
        with pytest.raises(ValueError):
            mp.solve_hjb_backward(np.zeros(7), grid, lambda e: np.zeros_like(e), PARAMS)
        with pytest.raises(ValueError):
            mp.solve_hjb_backward(
                np.full(grid.n_time + 1, -0.1), grid, lambda e: np.zeros_like(e), PARAMS
            )

    def test_scalar_terminal_reward_accepted(self):
        grid = small_grid()
        i_traj = np.zeros(grid.n_time + 1)
        v, _ = mp.solve_hjb_backward(i_traj, grid, lambda e: float(e) * 0.5, PARAMS)
        assert v[-1, -1] == pytest.approx(10.0)

    def test_first_order_condition_at_interior_maximizers(self):
        # analytic phi' at the returned power, normalized by the rate
        grid = small_grid(n_energy=50, n_time=200)
        i_traj = np.linspace(0.5, 0.0, grid.n_time + 1)
        v, pol, margin, p_trans = _solve_hjb_full(
            i_traj, grid, lambda e: np.zeros_like(e), PARAMS
        )
        f = PARAMS.success
        checked = 0
        for k in range(0, grid.n_time, 17):
            lam = (v[k + 1, 1:] - v[k + 1, :-1]) / grid.de
            for i in range(1, grid.n_energy + 1):
                p = pol[k, i]
                if P_EPS * 10 < p < PARAMS.p_max * 0.999:
                    denom = PARAMS.noise_power + i_traj[k]
                    gamma = p / denom
                    # phi'(p) = rate*(f'(g)*g - f(g))/p^2 - lam with g = p/denom
                    dphi = PARAMS.rate * (f.deriv(gamma) * gamma - f.eval(gamma)) / p**2 - lam[i - 1]
                    assert abs(dphi) / PARAMS.rate < 1e-6
                    checked += 1
        assert checked > 100

    def test_grid_refinement_contracts(self):
        # first-order scheme: doubling resolution shrinks the change in the
        # initial-time value profile
        def solve(n_e, n_t):
            grid = Grid(20.0, 0.0, 20.0, n_e, n_t)
            tt = np.linspace(0.0, 1.0, grid.n_time + 1)
            i_traj = 0.6 * (1.0 - 0.8 * tt)
            v, _ = mp.solve_hjb_backward(i_traj, grid, lambda e: np.zeros_like(e), PARAMS)
            return grid, v

        g1, v1 = solve(25, 160)
        g2, v2 = solve(50, 320)
        g3, v3 = solve(100, 640)
        d12 = np.max(np.abs(v1[0] - v2[0, ::2]))
        d23 = np.max(np.abs(v2[0] - v3[0, ::2]))
        assert d12 / d23 >= 1.5
