"""Initial fields built from short text specifications.

Density (``physics.rho_init``)
    ``const V`` | ``blob LO HI [X0 Y0 W]`` (Gaussian bump from LO up to HI)
    | ``sine LO HI`` (smooth periodic modulation between LO and HI)

Phase (``physics.chi_init``)
    ``const V`` | ``front X0 [A W]`` (tanh front at ``x = X0 + A cos(pi y/ly)``,
    width ``W``, default ``sqrt(2)``; ``W = 0`` selects the local equilibrium
    width ``sqrt(2 / rho)``) | ``bubble R [X0 Y0 W]`` (+1 inside, same widths)
    | ``small EPS`` (``1 - EPS * bump``, a small perturbation of the pure phase)

Velocity (``physics.u_init``)
    ``zero`` | ``vortex A`` (single cell stream function, no-slip compatible)
    | ``taylor-green A`` (torus) | ``uniform UX UY`` (torus)

Velocities are built from a node stream function, so they are discretely
divergence-free to rounding.  Lengths default to fractions of the domain.
"""
from __future__ import annotations

import numpy as np

from .core import GridSpec, MacField, State, check_periodic_compatible
from .errors import ConfigurationError
from .transport import curl_of_streamfunction

SQRT2 = float(np.sqrt(2.0))


def _parse(spec: str, key: str):
    parts = spec.split()
    if not parts:
        raise ConfigurationError(f"{key}: empty initial-condition spec")
    try:
        return parts[0].lower(), [float(x) for x in parts[1:]]
    except ValueError:
        raise ConfigurationError(f"{key}: non-numeric argument in {spec!r}") from None


def _nargs(args, lo, hi, key, kind):
    if not lo <= len(args) <= hi:
        raise ConfigurationError(f"{key}: '{kind}' takes {lo}..{hi} numbers, got {len(args)}")


def density_field(spec: str, grid: GridSpec, key: str = "physics.rho_init") -> np.ndarray:
    kind, a = _parse(spec, key)
    x, y = grid.centers()
    if kind == "const":
        _nargs(a, 1, 1, key, kind)
        rho = np.full(grid.shape, a[0])
    elif kind == "blob":
        _nargs(a, 2, 5, key, kind)
        lo, hi = a[0], a[1]
        x0 = a[2] if len(a) > 2 else 0.5 * grid.lx
        y0 = a[3] if len(a) > 3 else 0.5 * grid.ly
        w = a[4] if len(a) > 4 else 0.2 * min(grid.lx, grid.ly)
        rho = lo + (hi - lo) * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / w**2)
    elif kind == "sine":
        _nargs(a, 2, 2, key, kind)
        lo, hi = a
        s = np.sin(2 * np.pi * x / grid.lx) * np.sin(2 * np.pi * y / grid.ly)
        rho = lo + (hi - lo) * 0.5 * (1.0 + s)
    else:
        raise ConfigurationError(f"{key}: unknown density profile {kind!r}")
    if not np.all(rho > 0):
        raise ConfigurationError(f"{key}: initial density must be strictly positive")
    return rho


def _width(w, rho, key):
    if w > 0:
        return w
    if w < 0 or rho is None:
        raise ConfigurationError(f"{key}: width must be positive (0 needs the density)")
    return np.sqrt(2.0 / rho)


def phase_field(spec: str, grid: GridSpec, key: str = "physics.chi_init", rho=None) -> np.ndarray:
    kind, a = _parse(spec, key)
    x, y = grid.centers()
    if kind == "const":
        _nargs(a, 1, 1, key, kind)
        chi = np.full(grid.shape, a[0])
    elif kind == "front":
        _nargs(a, 1, 3, key, kind)
        amp = a[1] if len(a) > 1 else 0.0
        w = _width(a[2] if len(a) > 2 else SQRT2, rho, key)
        chi = np.tanh((x - a[0] - amp * np.cos(np.pi * y / grid.ly)) / w)
    elif kind == "bubble":
        _nargs(a, 1, 4, key, kind)
        x0 = a[1] if len(a) > 1 else 0.5 * grid.lx
        y0 = a[2] if len(a) > 2 else 0.5 * grid.ly
        w = _width(a[3] if len(a) > 3 else SQRT2, rho, key)
        r = np.hypot(x - x0, y - y0)
        chi = np.tanh((a[0] - r) / w)
    elif kind == "small":
        _nargs(a, 1, 1, key, kind)
        k = 2.0 if grid.periodic else 1.0
        bump = 0.25 * (1 + np.cos(k * np.pi * x / grid.lx)) * (1 + np.cos(k * np.pi * y / grid.ly))
        chi = 1.0 - a[0] * bump
    else:
        raise ConfigurationError(f"{key}: unknown phase profile {kind!r}")
    if np.max(np.abs(chi)) > 1.0:
        raise ConfigurationError(f"{key}: initial phase must satisfy |chi| <= 1")
    check_periodic_compatible(chi, grid)
    return chi


def streamfunction_nodes(spec: str, grid: GridSpec, key: str = "physics.u_init"):
    """Node stream function and the constant mean flow of a velocity spec."""
    kind, a = _parse(spec, key)
    xn, yn = grid.nodes()
    mean = (0.0, 0.0)
    if kind == "zero":
        _nargs(a, 0, 0, key, kind)
        psi = np.zeros_like(xn)
    elif kind == "vortex":
        _nargs(a, 1, 1, key, kind)
        if grid.periodic:
            psi = a[0] * np.sin(2 * np.pi * xn / grid.lx) * np.sin(2 * np.pi * yn / grid.ly)
        else:
            psi = a[0] * np.sin(np.pi * xn / grid.lx) ** 2 * np.sin(np.pi * yn / grid.ly) ** 2
    elif kind in ("taylor-green", "taylorgreen", "tg"):
        _nargs(a, 1, 1, key, kind)
        if not grid.periodic:
            raise ConfigurationError(f"{key}: taylor-green needs the torus")
        kx, ky = 2 * np.pi / grid.lx, 2 * np.pi / grid.ly
        # ux = A sin(kx x) cos(ky y), uy = -A (kx/ky) cos(kx x) sin(ky y)
        psi = a[0] / ky * np.sin(kx * xn) * np.sin(ky * yn)
    elif kind == "uniform":
        _nargs(a, 2, 2, key, kind)
        if not grid.periodic and (a[0] != 0 or a[1] != 0):
            raise ConfigurationError(f"{key}: uniform flow is incompatible with no-slip walls")
        psi = np.zeros_like(xn)
        mean = (a[0], a[1])
    else:
        raise ConfigurationError(f"{key}: unknown velocity profile {kind!r}")
    if not grid.periodic:
        psi = psi.copy()
        psi[0] = psi[-1] = 0.0
        psi[:, 0] = psi[:, -1] = 0.0
    return psi, mean


def velocity_field(spec: str, grid: GridSpec, key: str = "physics.u_init") -> MacField:
    psi, (ux0, uy0) = streamfunction_nodes(spec, grid, key)
    u = curl_of_streamfunction(psi, grid)
    u.ux += ux0
    u.uy += uy0
    return u.enforce_bc(grid)


def initial_state(cfg) -> State:
    """Initial state of a :class:`~nsac.config.Config`."""
    grid = cfg.grid_spec
    p = cfg.physics
    rho = density_field(p.rho_init, grid)
    chi = phase_field(p.chi_init, grid, rho=rho)
    u = velocity_field(p.u_init, grid)
    return State(0.0, rho, u, np.zeros(grid.shape), chi)


def perturb_phase(chi, delta: float) -> np.ndarray:
    """``chi + delta (1 - chi^2)``: an interface-localised perturbation of size ``delta``.

    For ``|chi| <= 1`` and ``0 <= delta <= 1/2`` the result stays in ``[-1, 1]``;
    near a tanh profile it amounts to a front displacement of about ``delta``
    interface widths.
    """
    if not 0 <= delta <= 0.5:
        raise ConfigurationError(f"perturbation amplitude must lie in [0, 1/2], got {delta}")
    chi = np.asarray(chi, dtype=float)
    return chi + delta * (1.0 - chi * chi)
