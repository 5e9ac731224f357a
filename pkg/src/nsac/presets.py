"""Built-in experiment configurations.

Each preset is config text in the line-oriented format, so it can be written
to disk, edited and fed back to the command line tool.
"""
from __future__ import annotations

from .config import Config, parse_config

_REFERENCE = """\
# variable-density interface in a no-slip box: heavy blob, tanh front at rest
grid.nx = {n}
grid.ny = {n}
grid.lx = 8
grid.ly = 8
grid.bc = box
physics.eta_star = 0.25
physics.eta_upper = 0.5
physics.m_star = 0.25
physics.m_upper = 0.5
physics.rho_init = blob 1 3
physics.chi_init = front {x0} 0.5
physics.u_init = zero
time.t_end = {t_end}
time.cfl = 1.0
experiment.kind = {kind}
"""

_DECAY = """\
# small perturbation of the pure phase in a no-slip box
grid.nx = 32
grid.ny = 32
grid.lx = 4
grid.ly = 4
grid.bc = box
physics.eta_star = 0.25
physics.eta_upper = 0.5
physics.m_star = 0.25
physics.m_upper = 0.5
physics.rho_init = blob 1 2
physics.chi_init = small 0.005
physics.u_init = vortex 0.002
time.t_end = 8
time.cfl = 1.0
time.dt_max = 0.02
experiment.kind = decay
experiment.fit_lo = 1
experiment.fit_hi = 6
"""

_GALERKIN = """\
# spectral Galerkin harness on the torus, bubble at equilibrium width
grid.nx = 64
grid.ny = 64
grid.lx = 6.283185307179586
grid.ly = 6.283185307179586
grid.bc = torus
physics.eta_star = 0.5
physics.eta_upper = 1
physics.m_star = 0.5
physics.m_upper = 1
physics.rho_init = sine 1 2
physics.chi_init = bubble 1.5 3.141592653589793 3.141592653589793 0
physics.u_init = taylor-green 0.5
time.t_end = {t_end}
time.dt = {dt}
experiment.kind = galerkin
experiment.k_max = 4
"""


def reference_text(n: int = 64, t_end: float = 2.0, kind: str = "run", x0: float = 4.0) -> str:
    return _REFERENCE.format(n=n, t_end=repr(float(t_end)), kind=kind, x0=repr(float(x0)))


def reference(n: int = 64, t_end: float = 2.0, kind: str = "run") -> Config:
    """Reference run: no-slip box, density blob in ``[1, 3]``, tanh front, fluid at rest."""
    return parse_config(reference_text(n, t_end, kind))


def twin(n: int = 64, t_end: float = 1.0) -> Config:
    """Twin-run experiment on the reference configuration."""
    return parse_config(reference_text(n, t_end, "twin"))


def decay_text() -> str:
    return _DECAY


def decay() -> Config:
    """Small-data run for the exponential decay experiment."""
    return parse_config(_DECAY)


def galerkin_text(dt: float = 1e-3, t_end: float = 1.0) -> str:
    return _GALERKIN.format(dt=repr(float(dt)), t_end=repr(float(t_end)))


def galerkin(dt: float = 1e-3, t_end: float = 1.0) -> Config:
    """Galerkin energy-identity run on the ``2 pi`` torus."""
    return parse_config(galerkin_text(dt, t_end))


PRESETS = {"reference": reference_text, "decay": decay_text, "galerkin": galerkin_text,
           "twin": lambda: reference_text(64, 1.0, "twin")}
