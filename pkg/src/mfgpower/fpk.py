"""Forward transport of the battery-energy distribution.

Conservative upwind finite-volume transport toward lower energy, with a
separate scalar account for the point mass absorbed at zero energy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MassConservationError
from .hjb import Grid
from .model import ModelParams

MASS_TOL = 1e-8


@dataclass
class DensityTrajectory:
    """Cell-integrated energy density over time plus the absorbed mass.

    m has shape (n_time + 1, n_energy); column j is the cell at energy
    node j + 1.  m0 is the probability mass sitting exactly at zero
    energy (empty batteries), kept out of the cell array so that energy
    moments stay honest.
    """

    m: np.ndarray
    m0: np.ndarray

    def total_mass(self) -> np.ndarray:
        return self.m.sum(axis=1) + self.m0


def uniform_density(grid: Grid) -> np.ndarray:
    """Uniform initial distribution over the energy cells."""
    return np.full(grid.n_energy, 1.0 / grid.n_energy)


def threshold_density(grid: Grid, e_low: float) -> np.ndarray:
    """Mass spread evenly over cells with energy strictly above e_low."""
    cells = grid.cell_energies
    mask = cells > e_low
    if not np.any(mask):
        raise ValueError(f"no cells above threshold {e_low:g}")
    m = np.where(mask, 1.0, 0.0)
    return m / m.sum()


def fpk_forward(
    policy: np.ndarray,
    m_init: np.ndarray,
    grid: Grid,
    m0_init: float = 0.0,
) -> DensityTrajectory:
    """Transport the initial density forward under the given policy field.

    Each step moves the limited fraction min(p * dt / de, 1) of a cell's
    mass to its left neighbor; outflow from the lowest cell feeds the
    absorbed account.  Total mass is conserved by construction and checked
    against MASS_TOL at every step.
    """
    policy = np.asarray(policy, dtype=float)
    if policy.shape != (grid.n_time + 1, grid.n_energy + 1):
        raise ValueError(
            f"policy must have shape {(grid.n_time + 1, grid.n_energy + 1)}, got {policy.shape}"
        )
    if np.any(policy < 0.0):
        raise ValueError("policy must be non-negative")
    m_init = np.asarray(m_init, dtype=float)
    if m_init.shape != (grid.n_energy,):
        raise ValueError(f"m_init must have {grid.n_energy} cells, got {m_init.shape}")
    if np.any(m_init < 0.0) or m0_init < 0.0:
        raise ValueError("densities must be non-negative")
    if abs(m_init.sum() + m0_init - 1.0) > MASS_TOL:
        raise ValueError("initial density must sum to 1 (cells plus absorbed mass)")

    n_t = grid.n_time
    ratio = grid.dt / grid.de
    m = np.empty((n_t + 1, grid.n_energy))
    m0 = np.empty(n_t + 1)
    m[0] = m_init
    m0[0] = m0_init
    for k in range(n_t):
        frac = np.minimum(policy[k, 1:] * ratio, 1.0)
        out = m[k] * frac
        nxt = m[k] - out
        nxt[:-1] += out[1:]
        m[k + 1] = nxt
        m0[k + 1] = m0[k] + out[0]
        defect = abs(nxt.sum() + m0[k + 1] - 1.0)
        if defect > MASS_TOL:
            raise MassConservationError(
                f"mass defect {defect:.3e} at step {k + 1} exceeds {MASS_TOL:g}"
            )
    return DensityTrajectory(m=m, m0=m0)


def interference_of(m_cells: np.ndarray, policy_cells: np.ndarray, params: ModelParams) -> float:
    """Mean-field interference load * gain_mean * sum(mass * power).

    Both arrays run over the energy cells; the absorbed mass transmits
    nothing and contributes nothing.
    """
    m_cells = np.asarray(m_cells, dtype=float)
    policy_cells = np.asarray(policy_cells, dtype=float)
    if m_cells.shape != policy_cells.shape:
        raise ValueError("density and policy rows must align cell-by-cell")
    return params.load * params.channel_gain_mean * float(np.dot(m_cells, policy_cells))


def mean_energy(traj: DensityTrajectory, grid: Grid) -> np.ndarray:
    """Population mean energy per time node (absorbed mass counts as zero)."""
    return traj.m @ grid.cell_energies
