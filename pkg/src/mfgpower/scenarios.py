"""Declarative scenario configs: INI-style files with one section per
solver module, plus the built-in experiment matrix."""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .coupling import INITIAL_STATIC_NASH, FixedPointConfig
from .errors import ConfigurationError
from .hjb import Grid
from .model import ModelParams, SuccessFunction

REGIMES = ("quasi_static", "channel", "finite_sim", "baselines")
DENSITY_KINDS = ("uniform", "threshold")
POLICY_SOURCES = ("mfg_solution", "static_nash", "repeated_op", "constant")

DEFAULT_N_ENERGY = 200
DEFAULT_CFL_MARGIN = 0.8


@dataclass(frozen=True)
class ChannelSettings:
    mu: complex = 0.0 + 0.0j
    eta: float = 1.0 / math.sqrt(2.0)   # stationary mean squared gain of 1
    half_width: float = 4.0
    n_cells: int = 160
    dt: float | None = None             # default: half the diffusion bound
    duration: float | None = None       # default: the model horizon
    store_every: int = 200


@dataclass(frozen=True)
class SimSettings:
    players: int = 100
    processing_gain: int = 100
    dt: float | None = None             # default: the energy-grid step
    seed: int = 0
    replications: int = 5
    policy_source: str = "mfg_solution"
    constant_power: float = 0.5
    eta: float = 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    regime: str
    params: ModelParams = field(default_factory=ModelParams)
    n_energy: int = DEFAULT_N_ENERGY
    n_time: int | None = None
    cfl_margin: float = DEFAULT_CFL_MARGIN
    density_kind: str = "uniform"
    e_low: float = 18.0
    fixed_point: FixedPointConfig = field(default_factory=FixedPointConfig)
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    sim: SimSettings = field(default_factory=SimSettings)
    description: str = ""

    def grid(self) -> Grid:
        if self.n_time is not None:
            return Grid(
                self.params.energy_max,
                self.params.t_start,
                self.params.t_end,
                self.n_energy,
                self.n_time,
            )
        return Grid.from_cfl(self.params, self.n_energy, self.cfl_margin)


def _short(**kw) -> ModelParams:
    return ModelParams(t_start=0.0, t_end=20.0, **kw)


def _long(**kw) -> ModelParams:
    return ModelParams(t_start=0.0, t_end=120.0, **kw)


BUILTIN_SCENARIOS: tuple[Scenario, ...] = (
    Scenario(
        name="policy-surface-short",
        regime="quasi_static",
        params=_short(),
        description="equilibrium power vs (t, E), uniform start",
    ),
    Scenario(
        name="policy-cuts-short",
        regime="quasi_static",
        params=_short(),
        description="equilibrium power vs t at three starting energies",
    ),
    Scenario(
        name="density-evolution-uniform",
        regime="quasi_static",
        params=_short(),
        description="energy density vs (t, E), uniform start",
    ),
    Scenario(
        name="density-evolution-threshold",
        regime="quasi_static",
        params=_short(),
        density_kind="threshold",
        e_low=18.0,
        description="energy density vs (t, E), mass above 18 J only",
    ),
    Scenario(
        name="policy-cuts-long",
        regime="quasi_static",
        params=_long(),
        description="equilibrium power vs t at three starting energies, long horizon",
    ),
    Scenario(
        name="value-comparison-long",
        regime="quasi_static",
        params=_long(),
        description="starting value vs E against the one-shot and repeated-game policies",
    ),
)


def builtin_scenario(name: str) -> Scenario:
    for sc in BUILTIN_SCENARIOS:
        if sc.name == name:
            return sc
    raise ConfigurationError(f"unknown built-in scenario {name!r}")


class _Section:
    """Typed access to one config section with precise error messages."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else {}

    def _get(self, key, cast, default):
        raw = self.data.get(key, None)
        if raw is None or raw.strip() == "":
            return default
        try:
            return cast(raw)
        except (TypeError, ValueError):
            raise ConfigurationError(
                f"field {self.name}.{key} has invalid value {raw!r}"
            ) from None

    def get_float(self, key, default=None):
        return self._get(key, float, default)

    def get_int(self, key, default=None):
        return self._get(key, int, default)

    def get_str(self, key, default=None):
        return self._get(key, str.strip, default)

    def require(self, key):
        raw = self.data.get(key, None)
        if raw is None or raw.strip() == "":
            raise ConfigurationError(f"missing required field: {self.name}.{key}")
        return raw.strip()


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file; only name and regime are
    required, everything else falls back to the reference defaults."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"scenario file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from None

    scen = _Section(parser, "scenario")
    name = scen.require("name")
    regime = scen.require("regime")
    if regime not in REGIMES:
        raise ConfigurationError(
            f"field scenario.regime must be one of {REGIMES}, got {regime!r}"
        )

    model = _Section(parser, "model")
    defaults = ModelParams()
    params = ModelParams(
        rate=model.get_float("rate", defaults.rate),
        noise_power=model.get_float("noise_power", defaults.noise_power),
        load=model.get_float("load", defaults.load),
        energy_max=model.get_float("energy_max", defaults.energy_max),
        t_start=model.get_float("t_start", defaults.t_start),
        t_end=model.get_float("t_end", defaults.t_end),
        p_max=model.get_float("p_max", defaults.p_max),
        channel_gain_mean=model.get_float("channel_gain_mean", defaults.channel_gain_mean),
        success=SuccessFunction.exponential(model.get_float("success_shape", 0.9)),
    )

    gsec = _Section(parser, "grid")
    dsec = _Section(parser, "initial_density")
    density_kind = dsec.get_str("kind", "uniform")
    if density_kind not in DENSITY_KINDS:
        raise ConfigurationError(
            f"field initial_density.kind must be one of {DENSITY_KINDS}, got {density_kind!r}"
        )

    fsec = _Section(parser, "fixed_point")
    fp = FixedPointConfig(
        damping=fsec.get_float("damping", 0.5),
        tolerance=fsec.get_float("tolerance", 1e-6),
        max_iterations=fsec.get_int("max_iterations", 200),
        initial_guess=fsec.get_str("initial_guess", INITIAL_STATIC_NASH),
    )

    csec = _Section(parser, "channel")
    cdef = ChannelSettings()
    channel = ChannelSettings(
        mu=complex(csec.get_float("mu_real", 0.0), csec.get_float("mu_imag", 0.0)),
        eta=csec.get_float("eta", cdef.eta),
        half_width=csec.get_float("half_width", cdef.half_width),
        n_cells=csec.get_int("n_cells", cdef.n_cells),
        dt=csec.get_float("dt", None),
        duration=csec.get_float("duration", None),
        store_every=csec.get_int("store_every", cdef.store_every),
    )

    ssec = _Section(parser, "simulation")
    sdef = SimSettings()
    policy_source = ssec.get_str("policy", sdef.policy_source)
    if policy_source not in POLICY_SOURCES:
        raise ConfigurationError(
            f"field simulation.policy must be one of {POLICY_SOURCES}, got {policy_source!r}"
        )
    sim = SimSettings(
        players=ssec.get_int("players", sdef.players),
        processing_gain=ssec.get_int("processing_gain", sdef.processing_gain),
        dt=ssec.get_float("dt", None),
        seed=ssec.get_int("seed", sdef.seed),
        replications=ssec.get_int("replications", sdef.replications),
        policy_source=policy_source,
        constant_power=ssec.get_float("constant_power", sdef.constant_power),
        eta=ssec.get_float("eta", sdef.eta),
    )

    return Scenario(
        name=name,
        regime=regime,
        params=params,
        n_energy=gsec.get_int("n_energy", DEFAULT_N_ENERGY),
        n_time=gsec.get_int("n_time", None),
        cfl_margin=gsec.get_float("cfl_margin", DEFAULT_CFL_MARGIN),
        density_kind=density_kind,
        e_low=dsec.get_float("e_low", 18.0),
        fixed_point=fp,
        channel=channel,
        sim=sim,
        description=scen.get_str("description", ""),
    )


def list_scenarios(extra_dir: str | Path | None = None) -> list[Scenario]:
    """Built-in scenarios plus any *.ini / *.cfg files in extra_dir."""
    out = list(BUILTIN_SCENARIOS)
    if extra_dir is not None:
        extra = Path(extra_dir)
        if not extra.is_dir():
            raise ConfigurationError(f"scenario directory not found: {extra}")
        for p in sorted(extra.glob("*.ini")) + sorted(extra.glob("*.cfg")):
            out.append(load_scenario(p))
    return out


def resolve_scenario(ref: str | Path) -> Scenario:
    """A path loads as a file; a bare name looks up the built-ins."""
    p = Path(ref)
    if p.suffix or p.is_file():
        return load_scenario(p)
    return builtin_scenario(str(ref))
