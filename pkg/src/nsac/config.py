"""Run configuration: dataclasses plus a line-oriented text format.

Grammar, one assignment per line::

    # comment
    section.key = value      # trailing comments allowed

Sections are ``grid``, ``physics``, ``time``, ``numerics``, ``output`` and
``experiment``.  Only ``grid.nx``, ``grid.ny`` and ``time.t_end`` are
required; everything else has a default.  Unknown keys are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .core import BC_ALIASES, GridSpec, MaterialLaws
from .errors import ConfigurationError

LIMITER_NAMES = ("minmod", "vanleer")
ORDERS = ("rho-chi-u", "u-rho-chi")
EXPERIMENTS = ("run", "galerkin", "decay", "twin", "check")
COUPLINGS = ("midpoint", "split")


@dataclass(frozen=True)
class GridSection:
    nx: int = 0
    ny: int = 0
    lx: float = 1.0
    ly: float = 1.0
    bc: str = "box"


@dataclass(frozen=True)
class PhysicsSection:
    eta_star: float = 1.0
    eta_upper: float = 1.0
    m_star: float = 1.0
    m_upper: float = 1.0
    rho_init: str = "const 1"
    chi_init: str = "const 1"
    u_init: str = "zero"
    seed: int = 0


@dataclass(frozen=True)
class TimeSection:
    t_end: float = -1.0
    cfl: float = 0.5
    dt_max: float = math.inf
    dt: float = 0.0          # > 0 forces a fixed step (still checked against the CFL limit)


@dataclass(frozen=True)
class Numerics:
    cg_tol: float = 1e-10
    cg_maxiter: int = 500
    pressure_tol: float = 1e-12
    stabilization: float = 2.0
    limiter: str = "minmod"
    order: str = "rho-chi-u"
    max_courant: float = 0.75


@dataclass(frozen=True)
class OutputSection:
    diag_every: int = 1
    snap_every: int = 0
    outdir: str = ""
    decay_functionals: bool = True


@dataclass(frozen=True)
class ExperimentSection:
    kind: str = "run"
    k_max: int = 4
    delta: float = 1e-3
    delta_small: float = 1e-4
    fit_lo: float = 1.0
    fit_hi: float = 6.0
    coupling: str = "midpoint"
    picard_tol: float = 1e-12
    picard_maxiter: int = 60


SECTIONS = {
    "grid": GridSection,
    "physics": PhysicsSection,
    "time": TimeSection,
    "numerics": Numerics,
    "output": OutputSection,
    "experiment": ExperimentSection,
}


@dataclass(frozen=True)
class Config:
    grid: GridSection = field(default_factory=GridSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    time: TimeSection = field(default_factory=TimeSection)
    numerics: Numerics = field(default_factory=Numerics)
    output: OutputSection = field(default_factory=OutputSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    @property
    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(g.nx, g.ny, g.lx, g.ly, g.bc)

    @property
    def law(self) -> MaterialLaws:
        p = self.physics
        return MaterialLaws(p.eta_star, p.eta_upper, p.m_star, p.m_upper)

    def with_values(self, **updates) -> "Config":
        """Copy with ``section__key=value`` overrides, re-validated."""
        per = {}
        for k, v in updates.items():
            sec, key = k.split("__", 1)
            per.setdefault(sec, {})[key] = v
        cfg = replace(self, **{s: replace(getattr(self, s), **kv) for s, kv in per.items()})
        validate(cfg)
        return cfg


def _convert(text: str, typ, key: str, lineno: int | None):
    where = f" (line {lineno})" if lineno is not None else ""
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {text!r} as {typ.__name__}{where}") from None


def _field_types(cls):
    return {f.name: type(f.default) for f in fields(cls)}


def _require(cond: bool, key: str, msg: str):
    if not cond:
        raise ConfigurationError(f"{key}: {msg}")


def validate(cfg: Config) -> None:
    g, p, t, n, o, e = cfg.grid, cfg.physics, cfg.time, cfg.numerics, cfg.output, cfg.experiment
    _require(g.nx >= 8, "grid.nx", "must be >= 8")
    _require(g.ny >= 8, "grid.ny", "must be >= 8")
    _require(g.lx > 0, "grid.lx", "must be positive")
    _require(g.ly > 0, "grid.ly", "must be positive")
    _require(str(g.bc).lower() in BC_ALIASES, "grid.bc", f"unknown boundary mode {g.bc!r}")
    for key in ("eta_star", "eta_upper", "m_star", "m_upper"):
        _require(getattr(p, key) > 0, f"physics.{key}", "must be positive")
    _require(p.eta_upper >= p.eta_star, "physics.eta_upper", "must be >= physics.eta_star")
    _require(p.m_upper >= p.m_star, "physics.m_upper", "must be >= physics.m_star")
    _require(t.t_end >= 0, "time.t_end", "must be given and non-negative")
    _require(0 < t.cfl <= 1, "time.cfl", "must lie in (0, 1]")
    _require(t.dt_max > 0, "time.dt_max", "must be positive")
    _require(t.dt >= 0, "time.dt", "must be non-negative")
    _require(n.cg_tol > 0, "numerics.cg_tol", "must be positive")
    _require(n.pressure_tol > 0, "numerics.pressure_tol", "must be positive")
    _require(n.cg_maxiter >= 1, "numerics.cg_maxiter", "must be >= 1")
    _require(n.stabilization >= 0, "numerics.stabilization", "must be non-negative")
    _require(n.limiter in LIMITER_NAMES, "numerics.limiter", f"must be one of {LIMITER_NAMES}")
    _require(n.order in ORDERS, "numerics.order", f"must be one of {ORDERS}")
    _require(0 < n.max_courant <= 1, "numerics.max_courant", "must lie in (0, 1]")
    _require(o.diag_every >= 1, "output.diag_every", "must be >= 1")
    _require(o.snap_every >= 0, "output.snap_every", "must be >= 0")
    _require(e.kind in EXPERIMENTS, "experiment.kind", f"must be one of {EXPERIMENTS}")
    _require(e.k_max >= 1, "experiment.k_max", "must be >= 1")
    _require(e.delta > 0, "experiment.delta", "must be positive")
    _require(e.delta_small > 0, "experiment.delta_small", "must be positive")
    _require(e.fit_hi > e.fit_lo >= 0, "experiment.fit_hi", "fit window must satisfy 0 <= fit_lo < fit_hi")
    _require(e.coupling in COUPLINGS, "experiment.coupling", f"must be one of {COUPLINGS}")
    _require(e.picard_tol > 0, "experiment.picard_tol", "must be positive")
    _require(e.picard_maxiter >= 1, "experiment.picard_maxiter", "must be >= 1")


def parse_config(text: str) -> Config:
    """Parse and validate configuration text."""
    values: dict[str, dict] = {s: {} for s in SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'section.key = value', got {raw.strip()!r}")
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        if "." not in lhs:
            raise ConfigurationError(f"line {lineno}: key {lhs!r} lacks a section prefix")
        sec, key = lhs.split(".", 1)
        if sec not in SECTIONS:
            raise ConfigurationError(f"line {lineno}: unknown section {sec!r}")
        types = _field_types(SECTIONS[sec])
        if key not in types:
            raise ConfigurationError(f"line {lineno}: unknown key {lhs!r}")
        if not rhs and types[key] is not str:
            raise ConfigurationError(f"line {lineno}: missing value for {lhs!r}")
        if key in values[sec]:
            raise ConfigurationError(f"line {lineno}: duplicate key {lhs!r}")
        values[sec][key] = _convert(rhs, types[key], lhs, lineno)
    for required in ("nx", "ny"):
        if required not in values["grid"]:
            raise ConfigurationError(f"grid.{required}: required key missing")
    if "t_end" not in values["time"]:
        raise ConfigurationError("time.t_end: required key missing")
    cfg = Config(**{s: SECTIONS[s](**kv) for s, kv in values.items()})
    validate(cfg)
    return cfg


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: Config) -> str:
    """Full text form of a configuration, defaults included."""
    lines = []
    for sec in SECTIONS:
        obj = getattr(cfg, sec)
        for f in fields(obj):
            lines.append(f"{sec}.{f.name} = {_format(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
