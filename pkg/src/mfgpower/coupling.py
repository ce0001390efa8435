"""Damped fixed-point coupling of the backward value solve and the
forward density transport through the interference trajectory."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError
from .fpk import DensityTrajectory, fpk_forward
from .hjb import Grid, _solve_hjb_full
from .model import STATIC_NASH, ModelParams, solve_beta

INITIAL_ZERO = "zero"
INITIAL_STATIC_NASH = "static_nash_level"


@dataclass(frozen=True)
class FixedPointConfig:
    damping: float = 0.5
    tolerance: float = 1e-6          # relative sup-norm on the interference path
    max_iterations: int = 200
    initial_guess: str = INITIAL_STATIC_NASH
    # width of the wait/transmit mixing band, relative to the rate; see
    # _transport_policy for why a pure argmax cannot close the loop
    switch_band: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.initial_guess not in (INITIAL_ZERO, INITIAL_STATIC_NASH):
            raise ValueError(f"unknown initial guess mode {self.initial_guess!r}")
        if self.switch_band <= 0.0:
            raise ValueError("switch_band must be positive")


@dataclass
class EquilibriumSolution:
    """Converged (value, policy, density, interference) bundle.

    The interference is the one induced by the returned policy and
    density, so the bundle is self-consistent up to the residual.
    """

    value: np.ndarray
    policy: np.ndarray
    density: DensityTrajectory
    interference: np.ndarray
    iterations: int
    residual: float
    residual_history: list = field(default_factory=list)
    grid: Grid | None = None
    params: ModelParams | None = None


def _induced_interference(policy: np.ndarray, density: DensityTrajectory, params: ModelParams) -> np.ndarray:
    # row-wise interference_of over all time nodes
    return params.load * params.channel_gain_mean * np.einsum(
        "ti,ti->t", density.m, policy[:, 1:]
    )


def _transport_policy(
    margin: np.ndarray, p_trans: np.ndarray, band: float, params: ModelParams
) -> np.ndarray:
    """Population transmission intensity: the transmitting-branch power,
    faded linearly over a narrow band of the wait/transmit margin.

    The individual maximizer jumps between zero and the transmitting branch
    when the branch value crosses zero, so along the equilibrium waiting
    frontier whole grid cohorts are indifferent and a pure-argmax response
    makes the interference map discontinuous: the fixed-point iteration
    then limit-cycles at the cohort-mass scale no matter the damping.  The
    mixed response inside the band is value-neutral to first order (the
    margin is ~0 there) and restores the continuity the damped iteration
    needs; the band is relative to the rate, which sets the margin scale.
    """
    scale = band * params.rate
    frac = np.clip(margin / scale, 0.0, 1.0)
    return np.where(np.isfinite(margin), p_trans * frac, 0.0)


def _mfg_pass(
    interference: np.ndarray,
    params: ModelParams,
    m_init: np.ndarray,
    grid: Grid,
    q: Callable,
    band: float,
):
    """One backward/forward pass; returns (value, policy, density, induced)."""
    value, policy, margin, p_trans = _solve_hjb_full(interference, grid, q, params)
    transport = _transport_policy(margin, p_trans, band, params)
    density = fpk_forward(transport, m_init, grid)
    induced = _induced_interference(transport, density, params)
    return value, policy, density, induced


def _initial_interference(params: ModelParams, m_init: np.ndarray, grid: Grid, mode: str) -> np.ndarray:
    n = grid.n_time + 1
    if mode == INITIAL_ZERO:
        return np.zeros(n)
    eq = solve_beta(STATIC_NASH, params.load, params.success, validate=False)
    if not eq.valid:
        return np.zeros(n)
    active = float(np.sum(m_init))
    level = params.load * eq.beta * params.noise_power / (1.0 - params.load * eq.beta)
    return np.full(n, level * active)


def solve_mfg(
    params: ModelParams,
    m_init: np.ndarray,
    grid: Grid,
    config: FixedPointConfig = FixedPointConfig(),
    q: Callable | None = None,
) -> EquilibriumSolution:
    """Iterate backward solve / forward transport until the interference
    trajectory is self-consistent.

    Each pass solves the value equation under the current interference,
    transports the density under the resulting policy, recomputes the
    induced interference, and damps the update.  Raises ConvergenceError
    (with residual history and the last iterate attached) when the
    iteration cap is reached; retrying with smaller damping is the usual
    remedy.
    """
    if q is None:
        q = lambda e: np.zeros_like(np.asarray(e, dtype=float))
    m_init = np.asarray(m_init, dtype=float)
    current = _initial_interference(params, m_init, grid, config.initial_guess)
    history: list[float] = []
    last = None
    for it in range(1, config.max_iterations + 1):
        value, policy, density, induced = _mfg_pass(
            current, params, m_init, grid, q, config.switch_band
        )
        scale = max(1.0, float(np.max(current)))
        residual = float(np.max(np.abs(induced - current))) / scale
        history.append(residual)
        last = EquilibriumSolution(
            value=value,
            policy=policy,
            density=density,
            interference=induced,
            iterations=it,
            residual=residual,
            residual_history=list(history),
            grid=grid,
            params=params,
        )
        if residual <= config.tolerance:
            return last
        current = (1.0 - config.damping) * current + config.damping * induced
    raise ConvergenceError(
        f"no fixed point after {config.max_iterations} iterations "
        f"(last residual {history[-1]:.3e})",
        residual_history=history,
        partial=last,
    )


def average_utility_at_start(solution: EquilibriumSolution, e0: float) -> float:
    """Value at the initial time for starting energy e0, by linear
    interpolation between the bracketing grid nodes."""
    grid = solution.grid
    if e0 < 0.0 or e0 > grid.energy_max:
        raise ValueError(f"starting energy {e0:g} outside [0, {grid.energy_max:g}]")
    return float(np.interp(e0, grid.energy_nodes, solution.value[0]))


def stationary_policy_utility(
    power: float,
    e0: float,
    interference: np.ndarray,
    grid: Grid,
    params: ModelParams,
) -> float:
    """Total utility of transmitting at constant power from energy e0
    against a frozen interference trajectory.

    The battery drains deterministically at the given power, so the
    player is active until min(horizon, e0 / power); the efficiency
    integrand is integrated by the trapezoid rule on the time grid with
    an exact fractional last interval.  Serves as the independent
    comparison oracle for the solved value function.
    """
    if power < 0.0:
        raise ValueError("power must be non-negative")
    if e0 < 0.0 or e0 > grid.energy_max:
        raise ValueError(f"starting energy {e0:g} outside [0, {grid.energy_max:g}]")
    if power == 0.0 or e0 == 0.0:
        return 0.0
    interference = np.asarray(interference, dtype=float)
    if interference.shape != (grid.n_time + 1,):
        raise ValueError("interference must have one entry per time node")

    horizon = grid.t_end - grid.t_start
    active = min(horizon, e0 / power)
    times = grid.times - grid.t_start
    g = params.channel_gain_mean
    gamma = power * g / (params.noise_power + interference)
    u = params.rate * np.asarray(params.success.eval(gamma)) / power

    k_full = int(np.searchsorted(times, active, side="right")) - 1
    k_full = min(k_full, grid.n_time)
    total = float(np.trapz(u[: k_full + 1], times[: k_full + 1]))
    if k_full < grid.n_time and active > times[k_full]:
        i_end = float(np.interp(active, times, interference))
        gamma_end = power * g / (params.noise_power + i_end)
        u_end = params.rate * float(params.success.eval(gamma_end)) / power
        total += 0.5 * (u[k_full] + u_end) * (active - times[k_full])
    return total
