"""Scenario-driven command line front end.

`run <config>` executes one scenario and writes figure-ready CSV files
plus a summary.json; `list-scenarios` prints the built-in experiment
matrix.  Exit codes: 0 success, 1 configuration error, 2 solver
non-convergence (diagnostics still written).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import ChannelGrid, ou_fpk_forward, stationary_channel_density, channel_regime_policy
from .coupling import EquilibriumSolution, solve_mfg, stationary_policy_utility
from .errors import ConfigurationError, ConvergenceError, SaturationError
from .fpk import threshold_density, uniform_density
from .hjb import Grid
from .model import (
    REPEATED_OPERATING_POINT,
    STATIC_NASH,
    ModelParams,
    equilibrium_power,
    solve_beta,
)
from .scenarios import Scenario, list_scenarios, resolve_scenario
from .simulation import ConstantPolicy, GridPolicy, SimConfig, simulate

THREAD_CAP_ENV = "MFGPOWER_MAX_THREADS"


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _write_summary(path: Path, payload: dict) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def initial_density(scenario: Scenario, grid: Grid) -> np.ndarray:
    if scenario.density_kind == "threshold":
        return threshold_density(grid, scenario.e_low)
    return uniform_density(grid)


def _beta_summary(params: ModelParams) -> dict:
    out: dict = {}
    static = solve_beta(STATIC_NASH, params.load, params.success, validate=False)
    out["beta_static"] = static.beta
    out["beta_static_valid"] = static.valid
    repeated = solve_beta(REPEATED_OPERATING_POINT, params.load, params.success, validate=False)
    out["beta_repeated"] = repeated.beta
    out["beta_repeated_valid"] = repeated.valid
    g = params.channel_gain_mean
    if static.valid:
        out["power_static"] = equilibrium_power(g, static, params)[0]
    if repeated.valid:
        out["power_repeated"] = equilibrium_power(g, repeated, params)[0]
    return out


def _baseline_utility_columns(
    interference: np.ndarray, grid: Grid, params: ModelParams
) -> tuple[np.ndarray, np.ndarray]:
    """Total utilities of the constant baseline policies per starting node,
    evaluated against the given interference trajectory."""
    nodes = grid.energy_nodes
    cols = []
    for mode in (STATIC_NASH, REPEATED_OPERATING_POINT):
        eq = solve_beta(mode, params.load, params.success, validate=False)
        try:
            power, _ = equilibrium_power(params.channel_gain_mean, eq, params)
            col = np.array(
                [stationary_policy_utility(power, e0, interference, grid, params) for e0 in nodes]
            )
        except SaturationError:
            col = np.full(nodes.shape, np.nan)
        cols.append(col)
    return cols[0], cols[1]


def _symmetric_interference_level(mode: str, params: ModelParams) -> float:
    """Constant interference of a fully active symmetric population playing
    the baseline policy (at which the target SINR is met exactly)."""
    eq = solve_beta(mode, params.load, params.success, validate=False)
    if not eq.valid:
        raise SaturationError(f"load * beta >= 1 for {mode}")
    return params.load * eq.beta * params.noise_power / (1.0 - params.load * eq.beta)


def _write_quasi_static_files(
    out_dir: Path, scenario: Scenario, solution: EquilibriumSolution, converged: bool, runtime: float
) -> None:
    grid = solution.grid
    params = solution.params
    times = grid.times
    nodes = grid.energy_nodes
    cells = grid.cell_energies

    _write_csv(
        out_dir / "policy.csv",
        ["t", "E", "p_star"],
        (
            (times[k], nodes[i], solution.policy[k, i])
            for k in range(grid.n_time)
            for i in range(1, grid.n_energy + 1)
        ),
    )
    _write_csv(
        out_dir / "density.csv",
        ["t", "E", "m", "m0"],
        (
            (times[k], cells[j], solution.density.m[k, j], solution.density.m0[k])
            for k in range(grid.n_time + 1)
            for j in range(grid.n_energy)
        ),
    )
    _write_csv(
        out_dir / "interference.csv",
        ["t", "I_hat"],
        ((times[k], solution.interference[k]) for k in range(grid.n_time + 1)),
    )
    u_static, u_repeated = _baseline_utility_columns(solution.interference, grid, params)
    _write_csv(
        out_dir / "value_t0.csv",
        ["E", "v_mfg", "u_static", "u_repeated"],
        (
            (nodes[i], solution.value[0, i], u_static[i], u_repeated[i])
            for i in range(grid.n_energy + 1)
        ),
    )
    summary = {
        "scenario": scenario.name,
        "regime": scenario.regime,
        "converged": converged,
        "iterations": solution.iterations,
        "final_residual": solution.residual,
        "residual_history": solution.residual_history,
        "n_energy": grid.n_energy,
        "n_time": grid.n_time,
        "runtime_seconds": runtime,
    }
    summary.update(_beta_summary(params))
    _write_summary(out_dir / "summary.json", summary)


def run_quasi_static(scenario: Scenario, out_dir: Path, quiet: bool) -> int:
    grid = scenario.grid()
    m_init = initial_density(scenario, grid)
    start = time.perf_counter()
    try:
        solution = solve_mfg(scenario.params, m_init, grid, scenario.fixed_point)
        converged = True
    except ConvergenceError as exc:
        solution = exc.partial
        converged = False
    runtime = time.perf_counter() - start
    _write_quasi_static_files(out_dir, scenario, solution, converged, runtime)
    if not quiet:
        state = "converged" if converged else "did NOT converge"
        print(
            f"{scenario.name}: {state} after {solution.iterations} iterations "
            f"(residual {solution.residual:.3e}, {runtime:.1f} s)"
        )
    return 0 if converged else 2


def run_baselines(scenario: Scenario, out_dir: Path, quiet: bool) -> int:
    grid = scenario.grid()
    params = scenario.params
    nodes = grid.energy_nodes
    cols = {}
    for mode, key in ((STATIC_NASH, "u_static"), (REPEATED_OPERATING_POINT, "u_repeated")):
        try:
            level = _symmetric_interference_level(mode, params)
            eq = solve_beta(mode, params.load, params.success, validate=False)
            power, _ = equilibrium_power(params.channel_gain_mean, eq, params)
            traj = np.full(grid.n_time + 1, level)
            cols[key] = np.array(
                [stationary_policy_utility(power, e0, traj, grid, params) for e0 in nodes]
            )
        except SaturationError:
            cols[key] = np.full(nodes.shape, np.nan)
    _write_csv(
        out_dir / "value_t0.csv",
        ["E", "v_mfg", "u_static", "u_repeated"],
        (
            (nodes[i], np.nan, cols["u_static"][i], cols["u_repeated"][i])
            for i in range(grid.n_energy + 1)
        ),
    )
    summary = {"scenario": scenario.name, "regime": scenario.regime}
    summary.update(_beta_summary(params))
    _write_summary(out_dir / "summary.json", summary)
    if not quiet:
        print(f"{scenario.name}: baseline utilities written")
    return 0


def run_channel(scenario: Scenario, out_dir: Path, quiet: bool) -> int:
    params = scenario.params
    cs = scenario.channel
    if cs.eta <= 0.0:
        raise ConfigurationError("channel regime needs channel.eta > 0")
    dt = cs.dt
    cgrid = ChannelGrid(cs.half_width, cs.n_cells, dt if dt is not None else 1.0)
    if dt is None:
        dt = 0.5 * cgrid.dh**2 / (2.0 * cs.eta**2)
        cgrid = ChannelGrid(cs.half_width, cs.n_cells, dt)
    duration = cs.duration if cs.duration is not None else params.horizon
    m_init = stationary_channel_density(cs.mu, cs.eta, cgrid)
    start = time.perf_counter()
    traj = ou_fpk_forward(cs.mu, cs.eta, m_init, cgrid, duration, store_every=cs.store_every)
    i_hat, power_map = channel_regime_policy(traj.m[-1], cgrid, params)
    runtime = time.perf_counter() - start

    centers = cgrid.centers
    _write_csv(
        out_dir / "channel_density.csv",
        ["t", "re", "im", "m"],
        (
            (traj.times[s], centers[i], centers[j], traj.m[s, i, j])
            for s in range(traj.m.shape[0])
            for i in range(cgrid.n_cells)
            for j in range(cgrid.n_cells)
        ),
    )
    _write_csv(
        out_dir / "power_map.csv",
        ["re", "im", "p_star"],
        (
            (centers[i], centers[j], power_map[i, j])
            for i in range(cgrid.n_cells)
            for j in range(cgrid.n_cells)
        ),
    )
    _write_csv(
        out_dir / "interference.csv",
        ["t", "I_hat"],
        ((t, i_hat) for t in traj.times),
    )
    drift = 0.5 * np.abs(traj.m - m_init[None, :, :]).sum(axis=(1, 2))
    summary = {
        "scenario": scenario.name,
        "regime": scenario.regime,
        "i_hat": i_hat,
        "n_cells": cgrid.n_cells,
        "dt": cgrid.dt,
        "duration": duration,
        "max_tv_drift_from_start": float(drift.max()),
        "runtime_seconds": runtime,
    }
    summary.update(_beta_summary(params))
    _write_summary(out_dir / "summary.json", summary)
    if not quiet:
        print(f"{scenario.name}: channel run done ({runtime:.1f} s)")
    return 0


def run_finite_sim(scenario: Scenario, out_dir: Path, quiet: bool) -> int:
    params = scenario.params
    ss = scenario.sim
    grid = scenario.grid()
    mfg_summary: dict = {}
    if ss.policy_source == "mfg_solution":
        m_init = initial_density(scenario, grid)
        solution = solve_mfg(params, m_init, grid, scenario.fixed_point)
        policy = GridPolicy(grid, solution.policy)
        mfg_summary = {
            "mfg_iterations": solution.iterations,
            "mfg_residual": solution.residual,
        }
    elif ss.policy_source == "constant":
        policy = ConstantPolicy(ss.constant_power)
    else:
        mode = STATIC_NASH if ss.policy_source == "static_nash" else REPEATED_OPERATING_POINT
        eq = solve_beta(mode, params.load, params.success, validate=False)
        power, _ = equilibrium_power(params.channel_gain_mean, eq, params)
        policy = ConstantPolicy(power)

    config = SimConfig(
        n_players=ss.players,
        processing_gain=ss.processing_gain,
        dt=ss.dt if ss.dt is not None else grid.dt,
        seed=ss.seed,
        replications=ss.replications,
        eta=ss.eta,
    )
    e_max = params.energy_max
    if scenario.density_kind == "threshold":
        e_low = scenario.e_low
        sampler = lambda gen: gen.uniform(e_low, e_max)
    else:
        sampler = lambda gen: gen.uniform(0.0, e_max)
    start = time.perf_counter()
    result = simulate(config, params, policy, sampler)
    runtime = time.perf_counter() - start

    _write_csv(
        out_dir / "utilities.csv",
        ["replication", "player", "energy0", "utility"],
        (
            (rep, j, result.initial_energies[rep, j], result.utilities[rep, j])
            for rep in range(config.replications)
            for j in range(config.n_players)
        ),
    )
    mean_interference = result.interference_mean.mean(axis=0)
    _write_csv(
        out_dir / "sim_interference.csv",
        ["t", "I_mean"],
        ((result.times[k], mean_interference[k]) for k in range(result.times.size)),
    )
    summary = {
        "scenario": scenario.name,
        "regime": scenario.regime,
        "players": config.n_players,
        "processing_gain": config.processing_gain,
        "replications": config.replications,
        "seed": config.seed,
        "policy_source": ss.policy_source,
        "mean_utility": float(result.utilities.mean()),
        "runtime_seconds": runtime,
    }
    summary.update(mfg_summary)
    summary.update(_beta_summary(params))
    _write_summary(out_dir / "summary.json", summary)
    if not quiet:
        print(f"{scenario.name}: {config.replications} replications done ({runtime:.1f} s)")
    return 0


_RUNNERS = {
    "quasi_static": run_quasi_static,
    "baselines": run_baselines,
    "channel": run_channel,
    "finite_sim": run_finite_sim,
}


def run_command(args) -> int:
    try:
        scenario = resolve_scenario(args.config)
        if args.seed is not None:
            scenario = replace(scenario, sim=replace(scenario.sim, seed=args.seed))
        out_dir = Path(args.out_dir) if args.out_dir else Path("out") / scenario.name
        out_dir.mkdir(parents=True, exist_ok=True)
        return _RUNNERS[scenario.regime](scenario, out_dir, args.quiet)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def list_command(args) -> int:
    try:
        scenarios = list_scenarios(args.scenario_dir)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"# {'name':30s} {'regime':12s} {'horizon':>8s} {'initial density':18s} plotted quantity")
    for sc in scenarios:
        density = sc.density_kind
        if sc.density_kind == "threshold":
            density = f"threshold({sc.e_low:g})"
        print(
            f"{sc.name:32s} {sc.regime:12s} {sc.params.horizon:>7g}s {density:18s} {sc.description}"
        )
    return 0


def _apply_thread_cap() -> None:
    cap = os.environ.get(THREAD_CAP_ENV)
    if not cap:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "NUMBA_NUM_THREADS",
    ):
        os.environ[var] = cap


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = argparse.ArgumentParser(
        prog="mfgpower",
        description="Equilibrium power-control scenario runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write its output files")
    p_run.add_argument("config", help="scenario file path or built-in scenario name")
    p_run.add_argument("--out-dir", default=None, help="output directory (default out/<name>)")
    p_run.add_argument("--seed", type=int, default=None, help="override the simulation seed")
    p_run.add_argument("--quiet", action="store_true", help="suppress progress output")
    p_run.set_defaults(fn=run_command)

    p_list = sub.add_parser("list-scenarios", help="list the built-in scenarios")
    p_list.add_argument("--scenario-dir", default=None, help="also list scenario files from here")
    p_list.set_defaults(fn=list_command)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
