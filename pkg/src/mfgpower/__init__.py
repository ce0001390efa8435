"""Equilibrium power control for energy-constrained transmitters in large
shared-spectrum uplinks: coupled backward/forward grid solvers, baseline
game equilibria, a channel-state regime, and a finite-population
Monte Carlo validator."""

from .channel import (
    ChannelDensity,
    ChannelGrid,
    channel_regime_policy,
    ou_fpk_forward,
    stationary_channel_density,
)
from .coupling import (
    EquilibriumSolution,
    FixedPointConfig,
    average_utility_at_start,
    solve_mfg,
    stationary_policy_utility,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    MassConservationError,
    RootFindingError,
    SaturationError,
)
from .fpk import (
    DensityTrajectory,
    fpk_forward,
    interference_of,
    mean_energy,
    threshold_density,
    uniform_density,
)
from .hjb import Grid, hamiltonian_argmax, solve_hjb_backward
from .model import (
    REPEATED_OPERATING_POINT,
    STATIC_NASH,
    ModelParams,
    StaticEquilibrium,
    SuccessFunction,
    energy_efficiency,
    equilibrium_power,
    sinr,
    solve_beta,
)
from .scenarios import Scenario, list_scenarios, load_scenario
from .simulation import (
    ConstantPolicy,
    GridPolicy,
    SimConfig,
    SimResult,
    empirical_interference,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelDensity",
    "ChannelGrid",
    "ConfigurationError",
    "ConstantPolicy",
    "ConvergenceError",
    "DensityTrajectory",
    "EquilibriumSolution",
    "FixedPointConfig",
    "Grid",
    "GridPolicy",
    "MassConservationError",
    "ModelParams",
    "REPEATED_OPERATING_POINT",
    "RootFindingError",
    "STATIC_NASH",
    "SaturationError",
    "Scenario",
    "SimConfig",
    "SimResult",
    "StaticEquilibrium",
    "SuccessFunction",
    "average_utility_at_start",
    "channel_regime_policy",
    "empirical_interference",
    "energy_efficiency",
    "equilibrium_power",
    "fpk_forward",
    "hamiltonian_argmax",
    "interference_of",
    "list_scenarios",
    "load_scenario",
    "mean_energy",
    "ou_fpk_forward",
    "simulate",
    "sinr",
    "solve_beta",
    "solve_hjb_backward",
    "stationary_channel_density",
    "stationary_policy_utility",
    "threshold_density",
    "uniform_density",
]
