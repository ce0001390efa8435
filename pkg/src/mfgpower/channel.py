"""Large-energy-budget regime: transport of the complex channel density
under mean-reverting dynamics, and the per-channel-state equilibrium power
with its closed-form interference level.

The drift-diffusion fluxes use exponential fitting (Scharfetter-Gummel
weights), which limits to plain upwinding for drift-dominated cells and to
centered differencing for diffusion-dominated ones, and whose discrete
stationary state matches the analytic Gaussian to second order.  Plain
first-order upwinding inflates the stationary variance by O(dh) and cannot
hold the total-variation drift below 1e-3 on any affordable grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ConfigurationError, SaturationError
from .model import STATIC_NASH, ModelParams, solve_beta

BOUNDARY_MASS_TOL = 1e-6


@dataclass(frozen=True)
class ChannelGrid:
    """Square cell grid over the complex channel plane [-L, L]^2."""

    half_width: float          # L
    n_cells: int               # cells per axis
    dt: float

    def __post_init__(self):
        if self.half_width <= 0.0:
            raise ConfigurationError("half_width must be positive")
        if self.n_cells < 4:
            raise ConfigurationError("need at least 4 cells per axis")
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive")

    @property
    def dh(self) -> float:
        return 2.0 * self.half_width / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    def diffusion_stable(self, eta: float) -> bool:
        if eta == 0.0:
            return True
        return self.dt <= self.dh**2 / (2.0 * eta**2) * (1.0 + 1e-12)


@dataclass
class ChannelDensity:
    """Stored density slices (n_slices, n, n); axis 0 of each slice is the
    real part, axis 1 the imaginary part."""

    m: np.ndarray
    times: np.ndarray


def stationary_channel_density(mu: complex, eta: float, grid: ChannelGrid) -> np.ndarray:
    """Cell-integrated Gaussian with per-component variance eta**2.

    The mean-reversion rate 1/2 against noise intensity eta per real
    component gives stationary variance eta**2 per component, hence mean
    squared magnitude 2 * eta**2.
    """
    if eta <= 0.0:
        raise ValueError("eta must be positive for a stationary density")
    edges = grid.edges
    wx = np.diff(ndtr((edges - mu.real) / eta))
    wy = np.diff(ndtr((edges - mu.imag) / eta))
    return np.outer(wx, wy)


def _bernoulli(x: np.ndarray) -> np.ndarray:
    # x / (exp(x) - 1), stable through x = 0
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-10
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - 0.5 * x, safe / np.expm1(safe))


def _face_coefficients(mu_comp: float, eta: float, grid: ChannelGrid):
    """Per-interior-face flux weights (c_left, c_right) along one axis.

    flux = c_left * m_left - c_right * m_right, exactly zero on the
    stationary profile exp(drift potential).
    """
    faces = grid.edges[1:-1]
    v = 0.5 * (mu_comp - faces)
    if eta == 0.0:
        return np.maximum(v, 0.0), np.maximum(-v, 0.0)
    d = 0.5 * eta**2
    pe = v * grid.dh / d
    c_left = (d / grid.dh) * _bernoulli(-pe)
    c_right = (d / grid.dh) * _bernoulli(pe)
    return c_left, c_right


def ou_fpk_forward(
    mu: complex,
    eta: float,
    m_init: np.ndarray,
    grid: ChannelGrid,
    duration: float,
    store_every: int = 1,
) -> ChannelDensity:
    """Run the channel density forward for the given duration.

    Explicit conservative update with zero-flux outer boundaries; raises
    ConfigurationError if the diffusion stability bound or the positivity
    bound fails, or if mass within one cell of the boundary ever exceeds
    BOUNDARY_MASS_TOL (the box is then too small).
    """
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    if store_every < 1:
        raise ValueError("store_every must be at least 1")
    m = np.array(m_init, dtype=float)
    if m.shape != (grid.n_cells, grid.n_cells):
        raise ValueError(f"m_init must be {(grid.n_cells, grid.n_cells)}, got {m.shape}")
    if not grid.diffusion_stable(eta):
        raise ConfigurationError(
            f"dt {grid.dt:g} violates dt <= dh^2/(2 eta^2) = {grid.dh**2 / (2 * eta**2):g}"
        )

    clx, crx = _face_coefficients(mu.real, eta, grid)
    cly, cry = _face_coefficients(mu.imag, eta, grid)
    # positivity: per-step outflow fraction of any cell must stay <= 1
    out_max = (
        np.max(np.concatenate([clx, [0.0]]) + np.concatenate([[0.0], crx]))
        + np.max(np.concatenate([cly, [0.0]]) + np.concatenate([[0.0], cry]))
    ) * grid.dt / grid.dh
    if out_max > 1.0 + 1e-12:
        raise ConfigurationError(
            f"dt {grid.dt:g} breaks positivity (max outflow fraction {out_max:.3f}); reduce dt"
        )

    n_steps = max(1, int(round(duration / grid.dt)))
    ratio = grid.dt / grid.dh
    slices = [m.copy()]
    times = [0.0]

    def check_boundary(step):
        ring = m[0, :].sum() + m[-1, :].sum() + m[1:-1, 0].sum() + m[1:-1, -1].sum()
        if ring > BOUNDARY_MASS_TOL:
            raise ConfigurationError(
                f"boundary mass {ring:.3e} exceeds {BOUNDARY_MASS_TOL:g} at step {step}; "
                "enlarge half_width"
            )

    check_boundary(0)
    for k in range(1, n_steps + 1):
        flux_x = clx[:, None] * m[:-1, :] - crx[:, None] * m[1:, :]
        flux_y = cly[None, :] * m[:, :-1] - cry[None, :] * m[:, 1:]
        m[:-1, :] -= ratio * flux_x
        m[1:, :] += ratio * flux_x
        m[:, :-1] -= ratio * flux_y
        m[:, 1:] += ratio * flux_y
        check_boundary(k)
        if k % store_every == 0 or k == n_steps:
            slices.append(m.copy())
            times.append(k * grid.dt)
    return ChannelDensity(m=np.array(slices), times=np.array(times))


def channel_regime_policy(
    m_slice: np.ndarray,
    grid: ChannelGrid,
    params: ModelParams,
) -> tuple[float, np.ndarray]:
    """Equilibrium interference level and per-state power map.

    The per-state optimizer holds SINR at the one-shot equilibrium target,
    so the interference fixed point collapses to the closed form
    load * beta * noise / (1 - load * beta), independent of the channel
    density.  The power map noise * beta / ((1 - load * beta) * |h|^2) is
    clamped to p_max.
    """
    m_slice = np.asarray(m_slice, dtype=float)
    if abs(m_slice.sum() - 1.0) > 1e-6:
        raise ValueError("channel density must be normalized")
    eq = solve_beta(STATIC_NASH, params.load, params.success, validate=False)
    if not eq.valid:
        raise SaturationError(
            f"load * beta = {params.load * eq.beta:g} >= 1: no finite equilibrium"
        )
    i_hat = params.load * eq.beta * params.noise_power / (1.0 - params.load * eq.beta)
    c = grid.centers
    gain2 = c[:, None] ** 2 + c[None, :] ** 2
    with np.errstate(divide="ignore"):
        power = params.noise_power * eq.beta / ((1.0 - params.load * eq.beta) * gain2)
    power = np.minimum(power, params.p_max)
    return i_hat, power
