"""INI run configuration: parsing, defaults and validation.

Every key is known in advance; unknown sections or keys, duplicate keys and
constraint violations raise :class:`ConfigError` naming the offending key.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field

from .initial_data import FAMILIES
from .spectral import MAX_POINTS, GridError, make_grid

EXPERIMENTS = ("evolve", "virial-identity", "decay-fit", "small-data", "profiles-sweep", "perturbation")


class ConfigError(ValueError):
    """Invalid configuration; the message names the key."""


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


@dataclass
class GridSpec:
    dim: int = 2
    n: int = 32
    length: float = 16.0
    max_points: int = MAX_POINTS


@dataclass
class DataSpec:
    family: str = "gaussian-bump"
    amplitude: float = 1.0
    sigma: float = 1.0
    center: list = field(default_factory=list)
    boost: list = field(default_factory=list)
    mode: list = field(default_factory=list)
    phase: float = 0.0
    separation: float = 4.0
    axis: int = 0
    envelope: float = 0.0
    u_path: str = ""
    ut_path: str = ""


@dataclass
class HartreeSpec:
    gamma: float = 1.0
    enabled: bool = True


@dataclass
class EvolveSpec:
    dt: float = 0.01
    t_end: float = 1.0
    record_every: int = 1
    scheme: str = "strang"
    max_dt: float = 0.5
    energy_guard: float = 0.10
    record_level: str = "full"
    snapshot_times: list = field(default_factory=list)


@dataclass
class CutoffSection:
    radius: float = 0.0
    center: list = field(default_factory=list)


@dataclass
class ExperimentSpec:
    name: str = "evolve"
    seed: int = 0
    output: str = "kgh-out"
    energy_tol: float = 1e-3
    bound_constant: float = 5.0
    dts: list = field(default_factory=lambda: [0.02, 0.01, 0.005, 0.0025])
    t_star: float = 0.5
    slope_tol: float = 0.2
    times: list = field(default_factory=lambda: [5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0])
    decay_tol: float = 0.25
    amplitudes: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    sample_times: list = field(default_factory=lambda: [0.0, 8.0, 16.0, 32.0])
    defect_tol: float = 1e-4
    separations: list = field(default_factory=lambda: [2.0, 4.0, 8.0, 16.0])
    decoupling_tol: float = 1e-6
    inner_tol: float = 1e-3
    eps: list = field(default_factory=lambda: [1e-3, 5e-4, 2.5e-4])
    ratio_range: list = field(default_factory=lambda: [1.6, 2.4])


@dataclass
class RunConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    data: DataSpec = field(default_factory=DataSpec)
    hartree: HartreeSpec = field(default_factory=HartreeSpec)
    evolve: EvolveSpec = field(default_factory=EvolveSpec)
    cutoff: CutoffSection = field(default_factory=CutoffSection)
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)

    def as_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "grid": GridSpec,
    "data": DataSpec,
    "hartree": HartreeSpec,
    "evolve": EvolveSpec,
    "cutoff": CutoffSection,
    "experiment": ExperimentSpec,
}


def _convert(key: str, default, text: str):
    try:
        if isinstance(default, bool):
            low = text.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, list):
            return _floats(text)
        return text.strip()
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(default).__name__}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate INI text (``[section]`` headers, ``key = value`` lines)."""
    cp = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{exc.section}.{exc.option}: duplicate key") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"[{exc.section}]: duplicate section") from None
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    cfg = RunConfig()
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"[{section}]: unknown section (expected one of {', '.join(_SECTIONS)})")
        target = getattr(cfg, section)
        for key, value in cp.items(section):
            if not hasattr(target, key):
                raise ConfigError(f"{section}.{key}: unknown key")
            setattr(target, key, _convert(f"{section}.{key}", getattr(target, key), value))
    validate(cfg)
    return cfg


def _require(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def validate(cfg: RunConfig) -> None:
    """Re-check every module precondition that is knowable before a run."""
    g = cfg.grid
    try:
        grid = make_grid(g.dim, g.n, g.length, max_points=g.max_points)
    except GridError as exc:
        key = "grid.dim" if "dim" in str(exc) else "grid.length" if "box_length" in str(exc) else "grid.n"
        raise ConfigError(f"{key}: {exc}") from None
    h = cfg.hartree
    _require(0 < h.gamma < grid.dim, "hartree.gamma", f"must satisfy 0 < gamma < d = {grid.dim}, got {h.gamma}")
    d = cfg.data
    _require(d.family in FAMILIES, "data.family", f"unknown family {d.family!r}; choose from {', '.join(FAMILIES)}")
    _require(d.sigma > 0, "data.sigma", "must be positive")
    for key in ("center", "boost", "mode"):
        v = getattr(d, key)
        _require(len(v) in (0, 1, grid.dim), f"data.{key}", f"needs 1 or {grid.dim} components")
    _require(0 <= d.axis < grid.dim, "data.axis", f"must lie in [0, {grid.dim})")
    if d.family == "file":
        _require(bool(d.u_path), "data.u_path", "required for family = file")
    e = cfg.evolve
    _require(e.dt > 0, "evolve.dt", "must be positive")
    _require(e.t_end > 0, "evolve.t_end", "must be positive")
    _require(e.dt <= e.t_end, "evolve.dt", "must not exceed evolve.t_end")
    _require(e.dt <= e.max_dt, "evolve.dt", f"exceeds evolve.max_dt = {e.max_dt}")
    n = round(e.t_end / e.dt)
    _require(abs(n * e.dt - e.t_end) <= 1e-9 * max(1.0, e.t_end), "evolve.t_end", "must be a multiple of evolve.dt")
    _require(e.record_every >= 1, "evolve.record_every", "must be a positive integer")
    _require(e.scheme in ("strang", "lie"), "evolve.scheme", "must be strang or lie")
    _require(e.record_level in ("full", "light", "none"), "evolve.record_level", "must be full, light or none")
    _require(e.energy_guard > 0, "evolve.energy_guard", "must be positive")
    for t in e.snapshot_times:
        _require(0 <= t <= e.t_end, "evolve.snapshot_times", f"{t} lies outside [0, t_end]")
    c = cfg.cutoff
    radius = c.radius if c.radius > 0 else grid.length / 8
    _require(2 * radius < 0.5 * grid.length, "cutoff.radius", f"2R = {2 * radius} must be below L/2 = {grid.length / 2}")
    _require(len(c.center) in (0, 1, grid.dim), "cutoff.center", f"needs 1 or {grid.dim} components")
    x = cfg.experiment
    _require(x.name in EXPERIMENTS, "experiment.name", f"unknown experiment {x.name!r}; choose from {', '.join(EXPERIMENTS)}")
    _require(x.seed >= 0, "experiment.seed", "must be nonnegative")
    _require(len(x.dts) >= 2 and all(v > 0 for v in x.dts), "experiment.dts", "need at least two positive values")
    _require(len(x.times) >= 2 and all(v > 0 for v in x.times), "experiment.times", "need at least two positive times")
    _require(len(x.amplitudes) >= 2 and all(v >= 0 for v in x.amplitudes), "experiment.amplitudes",
             "need at least two nonnegative values")
    _require(len(x.eps) >= 2 and all(v > 0 for v in x.eps), "experiment.eps", "need at least two positive values")
    _require(len(x.ratio_range) == 2, "experiment.ratio_range", "needs exactly two values")
    _require(len(x.separations) >= 2, "experiment.separations", "need at least two values")
    if x.name == "small-data":
        _require(e.t_end >= max(x.sample_times) - 1e-9, "evolve.t_end", "must cover experiment.sample_times")
    if x.name == "virial-identity":
        for dt in x.dts:
            k = round(x.t_star / dt)
            _require(k >= 2 and abs(k * dt - x.t_star) < 1e-9, "experiment.t_star",
                     f"must be a multiple (>= 2) of every dt, fails for {dt}")
    if x.name == "decay-fit":
        _require(math.isfinite(max(x.times)), "experiment.times", "must be finite")


def render_config(cfg: RunConfig) -> str:
    """Echo a config as INI text (defaults filled in)."""
    lines = []
    for name in _SECTIONS:
        lines.append(f"[{name}]")
        for key, value in asdict(getattr(cfg, name)).items():
            if isinstance(value, list):
                value = ", ".join(repr(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)
