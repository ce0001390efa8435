"""Physical-layer math and the symmetric baseline equilibria.

SINR, energy-efficiency, the outage-success function contract, and the
one-shot / repeated-game equilibrium SINR targets found by bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import RootFindingError, SaturationError

STATIC_NASH = "static_nash"
REPEATED_OPERATING_POINT = "repeated_operating_point"


@dataclass(frozen=True)
class SuccessFunction:
    """No-outage probability f(gamma) together with its derivative.

    ``eval`` maps SINR to [0, 1], is non-decreasing, vanishes at 0+ and
    tends to 1 at large SINR; ``deriv`` must match ``eval`` to
    finite-difference accuracy.  ``shape`` is set for the built-in
    exponential family exp(-shape/gamma) and unlocks the fast solver
    kernels; leave it ``None`` for custom functions.
    """

    eval: Callable
    deriv: Callable
    shape: float | None = None

    @classmethod
    def exponential(cls, shape: float = 0.9) -> "SuccessFunction":
        if shape <= 0.0:
            raise ValueError("shape must be positive")

        def _eval(gamma):
            g = np.asarray(gamma, dtype=float)
            safe = np.where(g > 0.0, g, np.inf)
            out = np.where(g > 0.0, np.exp(-shape / safe), 0.0)
            return float(out) if out.ndim == 0 else out

        def _deriv(gamma):
            g = np.asarray(gamma, dtype=float)
            safe = np.where(g > 0.0, g, np.inf)
            out = np.where(g > 0.0, shape / safe**2 * np.exp(-shape / safe), 0.0)
            return float(out) if out.ndim == 0 else out

        return cls(eval=_eval, deriv=_deriv, shape=shape)

    def validate(self, gamma_lo: float = 0.1, gamma_hi: float = 10.0, n: int = 64) -> None:
        """Check the contract; raises ValueError on the first violation."""
        gs = np.geomspace(1e-6, 1e8, 257)
        vals = np.asarray(self.eval(gs), dtype=float)
        if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
            raise ValueError("success function must take values in [0, 1]")
        if np.any(np.diff(vals) < -1e-12):
            raise ValueError("success function must be non-decreasing")
        if vals[0] > 1e-3:
            raise ValueError("success function must vanish as SINR -> 0")
        if vals[-1] < 1.0 - 1e-3:
            raise ValueError("success function must tend to 1 as SINR -> inf")
        # derivative consistency on the stated window, relative tolerance 1e-6
        gs = np.geomspace(gamma_lo, gamma_hi, n)
        h = 1e-6 * gs
        fd = (np.asarray(self.eval(gs + h)) - np.asarray(self.eval(gs - h))) / (2.0 * h)
        dv = np.asarray(self.deriv(gs), dtype=float)
        scale = np.maximum(np.abs(dv), 1e-12)
        if np.max(np.abs(fd - dv) / scale) > 1e-6:
            raise ValueError("derivative does not match finite differences")


@dataclass(frozen=True)
class ModelParams:
    """Physical and game constants.  Defaults are the reference setup."""

    rate: float = 1e6                 # bit/s
    noise_power: float = 0.1          # W
    load: float = 1.0                 # limit of (players / processing gain)
    energy_max: float = 20.0          # J
    t_start: float = 0.0              # s
    t_end: float = 20.0               # s
    p_max: float = 5.0                # W, action-set upper bound
    channel_gain_mean: float = 1.0    # E|h|^2
    success: SuccessFunction = field(default_factory=SuccessFunction.exponential)

    def __post_init__(self):
        for name in ("rate", "noise_power", "load", "energy_max", "channel_gain_mean"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        # p_max = 0 is allowed as the degenerate "cannot transmit" case
        if self.p_max < 0.0:
            raise ValueError("p_max must be non-negative")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def horizon(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class StaticEquilibrium:
    """A symmetric equilibrium SINR target and its feasibility flag."""

    beta: float
    mode: str
    valid: bool  # load * beta < 1; power formula is undefined otherwise


def sinr(p: float, g: float, interference: float, noise_power: float) -> float:
    """Signal-to-interference-plus-noise ratio p*g / (interference + noise)."""
    if p < 0.0 or g < 0.0 or interference < 0.0:
        raise ValueError("power, gain and interference must be non-negative")
    if noise_power <= 0.0:
        raise ValueError("noise_power must be strictly positive")
    return p * g / (interference + noise_power)


def energy_efficiency(p: float, gamma: float, params: ModelParams) -> float:
    """Successfully received bits per joule, rate * f(gamma) / p; 0 at p = 0."""
    if p < 0.0:
        raise ValueError("power must be non-negative")
    if p == 0.0:
        return 0.0
    return params.rate * params.success.eval(gamma) / p


def _scan_brackets(residual: Callable, lo: float, hi: float, n: int) -> list[tuple[float, float]]:
    xs = np.geomspace(lo, hi, n)
    vals = np.array([residual(x) for x in xs])
    # exact zeros (e.g. from underflow of f near 0) carry no sign information;
    # a bracket is a sign change between the nearest nonzero samples
    nz = np.nonzero(vals)[0]
    brackets = []
    for i, j in zip(nz[:-1], nz[1:]):
        if vals[i] * vals[j] < 0.0:
            brackets.append((float(xs[i]), float(xs[j])))
    return brackets


def _bisect(residual: Callable, lo: float, hi: float, tol: float) -> float:
    if lo == hi:
        return lo
    f_lo = residual(lo)
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid)
        if abs(f_mid) < tol:
            return mid
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
        if hi - lo <= 4.0 * np.finfo(float).eps * abs(mid):
            break
    mid = 0.5 * (lo + hi)
    if abs(residual(mid)) >= tol:
        raise RootFindingError("bisection stalled before reaching the residual target")
    return mid


def solve_beta(
    mode: str,
    load: float,
    success: SuccessFunction,
    *,
    gamma_hi: float = 1e3,
    scan_points: int = 4096,
    residual_tol: float = 1e-12,
    validate: bool = True,
) -> StaticEquilibrium:
    """Solve for the equilibrium SINR target of the requested baseline game.

    static_nash solves x f'(x) - f(x) = 0 on (0, gamma_hi); the repeated
    operating point solves x (1 - load x) f'(x) - f(x) = 0 on (0, 1/load).
    Bracketing scan followed by bisection to a 1e-12 residual.  Raises
    RootFindingError when the scan finds no interior root or more than one
    (root multiplicity is reported, never resolved by guessing).
    """
    if mode not in (STATIC_NASH, REPEATED_OPERATING_POINT):
        raise ValueError(f"unknown mode {mode!r}")
    if load <= 0.0:
        raise ValueError("load must be strictly positive")
    if validate:
        success.validate()

    f, fp = success.eval, success.deriv
    if mode == STATIC_NASH:
        residual = lambda x: x * fp(x) - f(x)
        lo, hi = 1e-8, gamma_hi
    else:
        residual = lambda x: x * (1.0 - load * x) * fp(x) - f(x)
        lo, hi = 1e-8, (1.0 / load) * (1.0 - 1e-12)

    brackets = _scan_brackets(residual, lo, hi, scan_points)
    if not brackets:
        raise RootFindingError(
            f"no interior root of the {mode} equation in ({lo:g}, {hi:g})", brackets
        )
    if len(brackets) > 1:
        raise RootFindingError(
            f"{len(brackets)} sign changes found for the {mode} equation; "
            f"root is not unique: {brackets}",
            brackets,
        )
    beta = _bisect(residual, brackets[0][0], brackets[0][1], residual_tol)
    return StaticEquilibrium(beta=beta, mode=mode, valid=load * beta < 1.0)


def equilibrium_power(g: float, equilibrium: StaticEquilibrium, params: ModelParams) -> tuple[float, bool]:
    """Symmetric per-player equilibrium power at channel gain g.

    Returns ``(power, clamped)`` where the power is
    noise * beta / ((1 - load * beta) * g), clamped to p_max.
    """
    if not equilibrium.valid:
        raise SaturationError(
            f"load * beta = {params.load * equilibrium.beta:g} >= 1: saturated system"
        )
    if g <= 0.0:
        raise ValueError("channel gain must be strictly positive")
    p = params.noise_power * equilibrium.beta / ((1.0 - params.load * equilibrium.beta) * g)
    if p > params.p_max:
        return params.p_max, True
    return p, False
