"""Run configuration: flat sectioned key/value files (INI syntax).

Sections mirror the run structure: [grid], [physics], [forcing], [initial],
[time], [monitor], [output].  Every parse error names the offending
section/key.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import Forcing, PhysicsParams, SimState, SolverOptions
from .fields import Grid, ScalarField, VectorField
from .monitor import PairValidationError, ProdiSerrinPair, validate_pair
from . import synth


class ConfigError(ValueError):
    """Configuration problem; the message names the offending key."""


INITIAL_PRESETS = (
    "zero",
    "taylor_green",
    "single_mode",
    "random_velocity",
    "thermal_random",
    "mixed_random",
)
FORCING_PRESETS = ("none", "steady_mode")


@dataclass
class RunConfig:
    grid_dim: int = 2
    grid_n: int = 32
    grid_length: float = 2.0 * math.pi
    mu: float = 0.05
    kappa1: float = 0.05
    kappa2: float = 0.05
    alpha: float = 0.0
    gravity: tuple = ()
    forcing_preset: str = "none"
    forcing_amplitude: float = 0.0
    initial_preset: str = "zero"
    initial_seed: int = 0
    initial_amplitude: float = 1.0
    T: float = 1.0
    cfl: float = 0.4
    max_dt: float = 1e-2
    min_dt: float = 1e-10
    sample_every: int = 10
    pairs: tuple = ()
    eps_list: tuple = (0.1,)
    delta_list: tuple = (0.05, 0.1, 0.2, 0.3)
    calibration: tuple = ("fresh", 1, 50)  # ("fresh", seed, count) or ("file", path)
    output_dir: str = "out"
    raw_text: str = field(default="", repr=False)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.raw_text.encode("utf-8")).hexdigest()


def _get(parser, section: str, key: str, cast, default=None):
    if not parser.has_option(section, key):
        if default is not None:
            return default
        raise ConfigError(f"[{section}] {key}: required key is missing")
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} ({exc})") from exc


def _floats(raw: str) -> tuple:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _parse_pairs(raw: str) -> tuple:
    pairs = []
    for token in raw.replace(",", " ").split():
        if ":" not in token:
            raise ValueError(f"pair {token!r} must look like r:s")
        r_tok, s_tok = token.split(":", 1)
        r = math.inf if r_tok in ("inf", "Inf", "INF") else float(r_tok)
        pairs.append((r, float(s_tok)))
    return tuple(pairs)


def _parse_calibration(raw: str) -> tuple:
    kind, _, rest = raw.partition(":")
    if kind == "file":
        if not rest:
            raise ValueError("calibration file path is empty")
        return ("file", rest)
    if kind == "fresh":
        seed_tok, _, count_tok = rest.partition(":")
        return ("fresh", int(seed_tok), int(count_tok))
    raise ValueError(f"calibration must be 'fresh:SEED:COUNT' or 'file:PATH', got {raw!r}")


def load_config(path) -> RunConfig:
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    cfg = RunConfig(raw_text=text)
    cfg.grid_dim = _get(parser, "grid", "dim", int, cfg.grid_dim)
    cfg.grid_n = _get(parser, "grid", "n", int, cfg.grid_n)
    cfg.grid_length = _get(parser, "grid", "L", float, cfg.grid_length)

    cfg.mu = _get(parser, "physics", "mu", float, cfg.mu)
    cfg.kappa1 = _get(parser, "physics", "kappa1", float, cfg.kappa1)
    cfg.kappa2 = _get(parser, "physics", "kappa2", float, cfg.kappa2)
    cfg.alpha = _get(parser, "physics", "alpha", float, cfg.alpha)
    cfg.gravity = _get(parser, "physics", "g", _floats, tuple([0.0] * cfg.grid_dim))

    cfg.forcing_preset = _get(parser, "forcing", "preset", str, cfg.forcing_preset)
    cfg.forcing_amplitude = _get(parser, "forcing", "amplitude", float, cfg.forcing_amplitude)

    cfg.initial_preset = _get(parser, "initial", "preset", str, cfg.initial_preset)
    cfg.initial_seed = _get(parser, "initial", "seed", int, cfg.initial_seed)
    cfg.initial_amplitude = _get(parser, "initial", "amplitude", float, cfg.initial_amplitude)

    cfg.T = _get(parser, "time", "T", float, cfg.T)
    cfg.cfl = _get(parser, "time", "cfl", float, cfg.cfl)
    cfg.max_dt = _get(parser, "time", "max_dt", float, cfg.max_dt)
    cfg.min_dt = _get(parser, "time", "min_dt", float, cfg.min_dt)
    cfg.sample_every = _get(parser, "time", "sample_every", int, cfg.sample_every)

    cfg.pairs = _get(parser, "monitor", "pairs", _parse_pairs, ((math.inf, 2.0),))
    cfg.eps_list = _get(parser, "monitor", "eps", _floats, cfg.eps_list)
    cfg.delta_list = _get(parser, "monitor", "delta", _floats, cfg.delta_list)
    cfg.calibration = _get(parser, "monitor", "calibration", _parse_calibration, cfg.calibration)

    cfg.output_dir = _get(parser, "output", "dir", str, cfg.output_dir)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.T < 0:
        raise ConfigError(f"[time] T: must be nonnegative, got {cfg.T}")
    if cfg.sample_every < 1:
        raise ConfigError(f"[time] sample_every: must be >= 1, got {cfg.sample_every}")
    if cfg.initial_preset not in INITIAL_PRESETS:
        raise ConfigError(
            f"[initial] preset: unknown preset {cfg.initial_preset!r};"
            f" choose one of {INITIAL_PRESETS}"
        )
    if cfg.forcing_preset not in FORCING_PRESETS:
        raise ConfigError(
            f"[forcing] preset: unknown preset {cfg.forcing_preset!r};"
            f" choose one of {FORCING_PRESETS}"
        )
    try:
        Grid(cfg.grid_dim, cfg.grid_n, cfg.grid_length)
    except ValueError as exc:
        raise ConfigError(f"[grid]: {exc}") from exc
    if len(cfg.gravity) not in (0, cfg.grid_dim):
        raise ConfigError(
            f"[physics] g: expected {cfg.grid_dim} entries, got {len(cfg.gravity)}"
        )
    for r, s in cfg.pairs:
        try:
            validate_pair(r, s)
        except PairValidationError as exc:
            raise ConfigError(f"[monitor] pairs: {exc}") from exc
    for eps in cfg.eps_list:
        if not 0.0 < eps < 1.0:
            raise ConfigError(f"[monitor] eps: values must lie in (0, 1), got {eps}")
    for delta in cfg.delta_list:
        if not 0.0 < delta < 1.0 / 3.0:
            raise ConfigError(
                f"[monitor] delta: values must lie in (0, 1/3), got {delta}"
            )
    if cfg.calibration[0] == "fresh" and cfg.calibration[2] < 10:
        raise ConfigError(
            f"[monitor] calibration: family size must be >= 10, got {cfg.calibration[2]}"
        )


def build_grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.grid_dim, cfg.grid_n, cfg.grid_length)


def build_params(cfg: RunConfig) -> PhysicsParams:
    gravity = tuple(cfg.gravity) if cfg.gravity else None
    try:
        return PhysicsParams(
            mu=cfg.mu, kappa1=cfg.kappa1, kappa2=cfg.kappa2,
            alpha=cfg.alpha, gravity=gravity,
        )
    except ValueError as exc:
        raise ConfigError(f"[physics]: {exc}") from exc


def build_solver_options(cfg: RunConfig) -> SolverOptions:
    return SolverOptions(
        cfl=cfg.cfl, max_dt=cfg.max_dt, min_dt=cfg.min_dt,
        sample_every=cfg.sample_every,
    )


def build_pairs(cfg: RunConfig) -> list[ProdiSerrinPair]:
    return [validate_pair(r, s) for r, s in cfg.pairs]


def build_initial(cfg: RunConfig, grid: Grid) -> SimState:
    amp = cfg.initial_amplitude
    seed = cfg.initial_seed
    zero = SimState.zero(grid)
    preset = cfg.initial_preset
    if preset == "zero":
        return zero
    if preset == "taylor_green":
        return SimState.make(synth.taylor_green(grid, amp), zero.theta, zero.phi)
    if preset == "single_mode":
        mode = (0, 1) if grid.dim == 2 else (0, 0, 1)
        u = synth.single_mode_div_free(grid, mode, amp)
        return SimState.make(u, zero.theta, zero.phi)
    if preset == "random_velocity":
        u = synth.random_div_free(grid, synth.rng_stream(seed, 0), amplitude=amp)
        return SimState.make(u, zero.theta, zero.phi)
    if preset == "thermal_random":
        theta = synth.random_scalar(grid, synth.rng_stream(seed, 1), amplitude=amp)
        phi = synth.random_scalar(grid, synth.rng_stream(seed, 2), amplitude=amp)
        return SimState.make(zero.u, theta, phi)
    if preset == "mixed_random":
        u = synth.random_div_free(grid, synth.rng_stream(seed, 0), amplitude=amp)
        theta = synth.random_scalar(grid, synth.rng_stream(seed, 1), amplitude=amp)
        phi = synth.random_scalar(grid, synth.rng_stream(seed, 2), amplitude=amp)
        return SimState.make(u, theta, phi)
    raise ConfigError(f"[initial] preset: unknown preset {preset!r}")


def build_forcing(cfg: RunConfig, grid: Grid) -> Forcing:
    if cfg.forcing_preset == "none" or cfg.forcing_amplitude == 0.0:
        return Forcing.none()
    amp = cfg.forcing_amplitude
    mode_f = (1, 1) if grid.dim == 2 else (1, 1, 0)
    mode_l = (2, 1) if grid.dim == 2 else (0, 1, 1)
    mode_h = (1, 2) if grid.dim == 2 else (1, 0, 1)
    f_field = synth.single_mode_div_free(grid, mode_f, amp)
    l_field = synth.single_mode_scalar(grid, mode_l, amp)
    h_field = synth.single_mode_scalar(grid, mode_h, amp)
    return Forcing(
        velocity=lambda t, f=f_field: f,
        heat=lambda t, f=l_field: f,
        solute=lambda t, f=h_field: f,
    )
