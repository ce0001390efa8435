"""Backward-in-time solve of the energy-state value equation.

The state is remaining battery energy on a uniform grid; each backward
step maximizes instantaneous efficiency minus the energy shadow price
over the admissible power interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .errors import ConfigurationError
from .model import ModelParams

P_EPS = _kernels.P_EPS
GOLDEN_ITERS = _kernels.GOLDEN_ITERS

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - np.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class Grid:
    """Uniform time x energy grid.

    n_energy cells span [0, energy_max]; value and policy live on the
    n_energy + 1 nodes, densities on the n_energy cells above zero.
    """

    energy_max: float
    t_start: float
    t_end: float
    n_energy: int
    n_time: int

    def __post_init__(self):
        if self.energy_max <= 0.0:
            raise ConfigurationError("energy_max must be positive")
        if not self.t_end > self.t_start:
            raise ConfigurationError("t_end must exceed t_start")
        if self.n_energy < 2 or self.n_time < 2:
            raise ConfigurationError("need at least 2 energy cells and 2 time steps")

    @property
    def de(self) -> float:
        return self.energy_max / self.n_energy

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_time

    @property
    def energy_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.energy_max, self.n_energy + 1)

    @property
    def cell_energies(self) -> np.ndarray:
        return self.energy_nodes[1:]

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_time + 1)

    def cfl_ok(self, p_max: float) -> bool:
        if p_max <= 0.0:
            return True
        return self.dt <= self.de / p_max * (1.0 + 1e-12)

    @classmethod
    def from_cfl(cls, params: ModelParams, n_energy: int = 200, margin: float = 0.8) -> "Grid":
        """Pick n_time from the transport stability bound with a safety margin."""
        if params.p_max <= 0.0:
            raise ConfigurationError("from_cfl needs p_max > 0; build the grid directly")
        if not 0.0 < margin <= 1.0:
            raise ConfigurationError("margin must be in (0, 1]")
        de = params.energy_max / n_energy
        dt_max = margin * de / params.p_max
        n_time = max(2, math.ceil(params.horizon / dt_max))
        return cls(params.energy_max, params.t_start, params.t_end, n_energy, n_time)


def _check_cfl(grid: Grid, params: ModelParams) -> None:
    if not grid.cfl_ok(params.p_max):
        raise ConfigurationError(
            f"time step {grid.dt:g} violates dt <= de/p_max = {grid.de / params.p_max:g}"
        )


def _transmit_branch_generic(lam: np.ndarray, interference: float, g: float, params: ModelParams):
    """Vectorized golden-section transmit-branch search for a custom
    success function; returns (branch value, branch power) per entry.

    Mirrors the compiled kernel's bookkeeping so both paths select the
    same candidates.
    """
    f = params.success.eval
    rate, noise, p_max = params.rate, params.noise_power, params.p_max
    lam = np.asarray(lam, dtype=float)

    def phi(p):
        u = rate * np.asarray(f(p * g / (noise + interference))) / p
        return u - lam * p

    if p_max <= 0.0:
        return np.full_like(lam, -np.inf), np.zeros_like(lam)
    best_h = phi(np.full_like(lam, p_max))
    best_p = np.full_like(lam, p_max)
    a = np.full_like(lam, P_EPS)
    b = np.full_like(lam, p_max)
    if p_max > P_EPS:
        x1 = a + _INV_PHI2 * (b - a)
        x2 = a + _INV_PHI * (b - a)
        f1 = phi(x1)
        f2 = phi(x2)
        for _ in range(GOLDEN_ITERS):
            left = f1 >= f2
            b = np.where(left, x2, b)
            a = np.where(left, a, x1)
            x1n = np.where(left, a + _INV_PHI2 * (b - a), x2)
            x2n = np.where(left, x1, a + _INV_PHI * (b - a))
            fresh = phi(np.where(left, x1n, x2n))
            f1n = np.where(left, fresh, f2)
            f2n = np.where(left, f1, fresh)
            x1, x2, f1, f2 = x1n, x2n, f1n, f2n
        xm = 0.5 * (a + b)
        fm = phi(xm)
        upd = fm > best_h
        best_h = np.where(upd, fm, best_h)
        best_p = np.where(upd, xm, best_p)
    return best_h, best_p


def hamiltonian_argmax(
    lam: float, interference: float, g: float, params: ModelParams
) -> tuple[float, float]:
    """Maximize rate*f(p*g/(noise+I))/p - p*lam over p in [0, p_max].

    Returns (achieved value, maximizing power).  Degenerate inputs resolve
    to zero power.
    """
    if interference < 0.0:
        raise ValueError("interference must be non-negative")
    if g <= 0.0:
        raise ValueError("channel gain must be strictly positive")
    shape = params.success.shape
    if shape is not None:
        c = shape * (params.noise_power + interference) / g
        h, p = _kernels.transmit_branch_exp(lam, c, params.rate, params.p_max)
    else:
        hv, pv = _transmit_branch_generic(np.array([lam]), interference, g, params)
        h, p = float(hv[0]), float(pv[0])
    if h > 0.0:
        return h, p
    return 0.0, 0.0


def _terminal_values(grid: Grid, q: Callable) -> np.ndarray:
    nodes = grid.energy_nodes
    try:
        v_term = np.asarray(q(nodes), dtype=float)
        if v_term.shape != nodes.shape:
            raise TypeError
    except TypeError:
        v_term = np.array([float(q(e)) for e in nodes])
    return v_term


def _solve_hjb_full(
    interference: np.ndarray,
    grid: Grid,
    q: Callable,
    params: ModelParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backward sweep that also returns the transmit-branch diagnostics
    (margin, branch power) used for sub-step switch placement."""
    interference = np.asarray(interference, dtype=float)
    if interference.shape != (grid.n_time + 1,):
        raise ValueError(
            f"interference must have {grid.n_time + 1} entries, got {interference.shape}"
        )
    if np.any(interference < 0.0):
        raise ValueError("interference must be non-negative")
    _check_cfl(grid, params)
    v_term = _terminal_values(grid, q)

    g = params.channel_gain_mean
    shape = params.success.shape
    if shape is not None:
        return _kernels.hjb_sweep_exp(
            v_term,
            interference,
            grid.de,
            grid.dt,
            params.p_max,
            params.rate,
            params.noise_power,
            g,
            shape,
        )

    n_nodes = grid.n_energy + 1
    n_t = grid.n_time
    v = np.empty((n_t + 1, n_nodes))
    pol = np.empty((n_t + 1, n_nodes))
    margin = np.empty((n_t + 1, n_nodes))
    p_trans = np.empty((n_t + 1, n_nodes))
    v[-1] = v_term
    pol[:, 0] = 0.0
    margin[:, 0] = -np.inf
    p_trans[:, 0] = 0.0
    lam = (v[-1, 1:] - v[-1, :-1]) / grid.de
    h, p = _transmit_branch_generic(lam, interference[-1], g, params)
    margin[-1, 1:] = h
    p_trans[-1, 1:] = p
    pol[-1, 1:] = np.where(h > 0.0, p, 0.0)
    for k in range(n_t - 1, -1, -1):
        lam = (v[k + 1, 1:] - v[k + 1, :-1]) / grid.de
        h, p = _transmit_branch_generic(lam, interference[k], g, params)
        margin[k, 1:] = h
        p_trans[k, 1:] = p
        v[k, 0] = v[k + 1, 0]
        v[k, 1:] = v[k + 1, 1:] + grid.dt * np.maximum(h, 0.0)
        pol[k, 1:] = np.where(h > 0.0, p, 0.0)
    return v, pol, margin, p_trans


def solve_hjb_backward(
    interference: np.ndarray,
    grid: Grid,
    q: Callable,
    params: ModelParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Backward sweep from the terminal reward under a given interference path.

    ``interference`` must hold one value per time node; ``q`` maps energy to
    the terminal reward.  Returns (value, policy) arrays of shape
    (n_time + 1, n_energy + 1).  Row k of the policy is the maximizer used
    on the step from time node k to k + 1; node 0 (empty battery) is
    absorbing with zero power.
    """
    v, pol, _, _ = _solve_hjb_full(interference, grid, q, params)
    return v, pol
