"""Run configuration.

Config files are flat ``section.key = value`` lines; ``#`` starts a comment.
Every key maps onto a field of one of the dataclasses below, and anything
set in a file can be overridden from the command line.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .book import DEFAULT_K, DEFAULT_T
from .errors import ConfigError
from .fitkit.models import CUMULATIVE_MODELS, MODELS
from .graph import TOPOLOGIES


@dataclass
class SimulationConfig:
    n_vertices: int = 2000
    topology: str = "ring"
    n_steps: int = 10_000
    snapshot_every: int = 10
    tick_size: float = 1e-4
    size_rule: str = "unit"
    seed: int = 0
    solver: str = "auto"
    write_snapshots: bool = True


@dataclass
class GeometryConfig:
    K: int = DEFAULT_K
    T: int = DEFAULT_T
    tick_size: float = 0.01


@dataclass
class FitConfig:
    models: tuple = CUMULATIVE_MODELS
    tol: float = 1e-10
    gtol: float = 1e-8
    max_iter: int = 500
    grid_scale: float = 2.0


@dataclass
class IOConfig:
    inputs: tuple = ()
    output_dir: str = "out"
    asset: str = ""
    jobs: int = 1


@dataclass
class RunConfig:
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    io: IOConfig = field(default_factory=IOConfig)

    def set(self, key, raw):
        section, _, name = key.partition(".")
        block = getattr(self, section, None) if name else None
        if block is None or not dataclasses.is_dataclass(block):
            raise ConfigError(key, "unknown section")
        fields = {f.name: f for f in dataclasses.fields(block)}
        if name not in fields:
            raise ConfigError(key, "unknown key")
        default = getattr(type(block)(), name)
        setattr(block, name, _coerce(key, raw, default))

    def validate(self):
        s, g, f, o = self.simulation, self.geometry, self.fit, self.io
        checks = [
            ("simulation.n_vertices", s.n_vertices >= 3, "must be >= 3"),
            ("simulation.topology", s.topology in TOPOLOGIES, f"expected one of {TOPOLOGIES}"),
            ("simulation.n_steps", s.n_steps >= 0, "must be >= 0"),
            ("simulation.snapshot_every", s.snapshot_every >= 1, "must be >= 1"),
            ("simulation.tick_size", s.tick_size > 0, "must be > 0"),
            ("simulation.size_rule", s.size_rule in ("unit", "degree"), "expected unit or degree"),
            ("simulation.seed", 0 <= s.seed < 2**64, "must be an unsigned 64-bit integer"),
            ("simulation.solver", s.solver in ("auto", "dense", "iterative"),
             "expected auto, dense or iterative"),
            ("geometry.K", g.K >= 1, "must be >= 1"),
            ("geometry.T", g.T >= 1, "must be >= 1"),
            ("geometry.tick_size", g.tick_size > 0, "must be > 0"),
            ("fit.tol", f.tol > 0, "must be > 0"),
            ("fit.gtol", f.gtol > 0, "must be > 0"),
            ("fit.max_iter", f.max_iter >= 1, "must be >= 1"),
            ("fit.grid_scale", f.grid_scale > 1, "must be > 1"),
            ("io.jobs", o.jobs >= 1, "must be >= 1"),
        ]
        for key, ok, reason in checks:
            if not ok:
                raise ConfigError(key, reason)
        for m in f.models:
            if m not in MODELS:
                raise ConfigError("fit.models", f"unknown model {m!r}")
        if not f.models:
            raise ConfigError("fit.models", "at least one model is required")
        return self

    def to_text(self):
        # the output location is where this text lands, so it is left out;
        # otherwise two otherwise-identical runs would differ
        lines = []
        for section in ("simulation", "geometry", "fit", "io"):
            block = getattr(self, section)
            for f in dataclasses.fields(block):
                if (section, f.name) == ("io", "output_dir"):
                    continue
                lines.append(f"{section}.{f.name} = {_render(getattr(block, f.name))}")
        return "\n".join(lines) + "\n"


def _render(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(key, raw, default):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(v.strip() for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {type(default).__name__}") from None
    return raw


def parse_config_text(text, cfg=None):
    cfg = cfg or RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected 'section.key = value'")
        key, value = line.split("=", 1)
        cfg.set(key.strip(), value)
    return cfg


def load_config(path=None, overrides=()):
    """Defaults, then the file at ``path``, then ``key=value`` overrides."""
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
        parse_config_text(text, cfg)
    for item in overrides:
        if isinstance(item, tuple):
            key, value = item
        else:
            if "=" not in item:
                raise ConfigError(item, "override must look like section.key=value")
            key, value = item.split("=", 1)
        cfg.set(key.strip(), value)
    return cfg.validate()
