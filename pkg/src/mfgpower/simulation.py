"""Monte Carlo simulation of the finite-population power-control game.

Validates the large-population solution: players share one state-feedback
policy, channels follow the mean-reverting law by Euler-Maruyama, and
batteries deplete explicitly.  One counter-based random stream per
(replication, player) keeps the realized noise of shared player indices
fixed across population sizes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .hjb import Grid
from .model import ModelParams


@dataclass(frozen=True)
class SimConfig:
    n_players: int
    processing_gain: int
    dt: float
    seed: int = 0
    replications: int = 1
    mu: complex = 0.0 + 0.0j
    eta: float = 0.0                    # 0 freezes the channels (quasi-static)
    initial_channel: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.n_players < 1 or self.processing_gain < 1:
            raise ValueError("need at least one player and unit processing gain")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.eta < 0.0:
            raise ValueError("eta must be non-negative")


@dataclass
class SimResult:
    utilities: np.ndarray           # (replications, n_players) utility integrals
    interference_mean: np.ndarray   # (replications, n_steps) player-mean interference
    initial_energies: np.ndarray    # (replications, n_players)
    times: np.ndarray               # (n_steps,) left endpoints


class GridPolicy:
    """Bilinear (time, energy) lookup of a solved policy field."""

    def __init__(self, grid: Grid, policy: np.ndarray):
        policy = np.asarray(policy, dtype=float)
        if policy.shape != (grid.n_time + 1, grid.n_energy + 1):
            raise ValueError("policy shape does not match the grid")
        self.grid = grid
        self.policy = policy

    def __call__(self, t: float, energy: np.ndarray, gains: np.ndarray) -> np.ndarray:
        g = self.grid
        s = (t - g.t_start) / g.dt
        k = int(np.clip(np.floor(s), 0, g.n_time - 1))
        w = np.clip(s - k, 0.0, 1.0)
        row = (1.0 - w) * self.policy[k] + w * self.policy[k + 1]
        return np.interp(energy, g.energy_nodes, row)


class ConstantPolicy:
    """Fixed transmit power while the battery lasts."""

    def __init__(self, power: float):
        if power < 0.0:
            raise ValueError("power must be non-negative")
        self.power = power

    def __call__(self, t: float, energy: np.ndarray, gains: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(energy, dtype=float), self.power)


def empirical_interference(gains: np.ndarray, powers: np.ndarray, processing_gain: int) -> np.ndarray:
    """Per-player interference (1/N) * sum over the other players of p * g."""
    gains = np.asarray(gains, dtype=float)
    powers = np.asarray(powers, dtype=float)
    if gains.shape != powers.shape:
        raise ValueError("gains and powers must have the same length")
    received = powers * gains
    return (received.sum() - received) / processing_gain


def _player_stream(seed: int, replication: int, player: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication, player))
    return np.random.Generator(np.random.Philox(ss))


def simulate(
    config: SimConfig,
    params: ModelParams,
    policy: Callable,
    energy_sampler: Callable,
    tagged_energy: float | None = None,
) -> SimResult:
    """Run the finite-population game and integrate each player's utility.

    ``policy`` maps (t, energies, gains) to powers; ``energy_sampler``
    draws one initial energy from a Generator.  Each player's initial
    energy and channel noise come from its own (replication, player)
    stream, so outputs are reproducible from the seed alone.  Setting
    ``tagged_energy`` pins player 0's starting energy, which makes value
    comparisons at a chosen state possible without disturbing the rest of
    the population.
    """
    K, N = config.n_players, config.processing_gain
    n_steps = max(1, int(round(params.horizon / config.dt)))
    dt = config.dt
    times = params.t_start + dt * np.arange(n_steps)
    sq_dt = np.sqrt(dt)
    f = params.success.eval

    utilities = np.zeros((config.replications, K))
    interference_mean = np.zeros((config.replications, n_steps))
    initial_energies = np.zeros((config.replications, K))

    for rep in range(config.replications):
        e0 = np.empty(K)
        noise = None
        if config.eta > 0.0:
            noise = np.empty((K, n_steps, 2))
        for j in range(K):
            gen = _player_stream(config.seed, rep, j)
            e0[j] = energy_sampler(gen)
            if noise is not None:
                noise[j] = gen.standard_normal((n_steps, 2))
        if tagged_energy is not None:
            e0[0] = tagged_energy
        initial_energies[rep] = e0

        energy = e0.copy()
        h_re = np.full(K, config.initial_channel.real)
        h_im = np.full(K, config.initial_channel.imag)
        total = np.zeros(K)
        for k in range(n_steps):
            gains = h_re**2 + h_im**2
            p = np.asarray(policy(times[k], energy, gains), dtype=float)
            p = np.where(energy > 0.0, np.clip(p, 0.0, params.p_max), 0.0)
            received = p * gains
            interference = (received.sum() - received) / N
            gamma = received / (params.noise_power + interference)
            u = np.where(p > 0.0, params.rate * np.asarray(f(gamma)) / np.maximum(p, 1e-300), 0.0)
            total += u * dt
            interference_mean[rep, k] = interference.mean()
            energy = np.maximum(0.0, energy - p * dt)
            if noise is not None:
                h_re += 0.5 * (config.mu.real - h_re) * dt + config.eta * sq_dt * noise[:, k, 0]
                h_im += 0.5 * (config.mu.imag - h_im) * dt + config.eta * sq_dt * noise[:, k, 1]
        utilities[rep] = total
    return SimResult(
        utilities=utilities,
        interference_mean=interference_mean,
        initial_energies=initial_energies,
        times=times,
    )
