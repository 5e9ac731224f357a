"""Grids, staggered fields, discrete operators and material laws.

Layout
------
Scalars live at cell centres in arrays of shape ``(nx, ny)`` indexed
``[i, j]`` with ``i`` along x.  Velocities use the MAC layout: ``ux`` has
shape ``(nx + 1, ny)`` (vertical faces at ``x = i*dx``) and ``uy`` has shape
``(nx, ny + 1)`` (horizontal faces at ``y = j*dy``).  On the torus the last
face layer duplicates the first one.

Two boundary modes are supported:

``"box"``
    no-slip walls (``u = 0``) and homogeneous Neumann data for scalars.
``"torus"``
    doubly periodic.

``laplacian`` is defined as ``div(grad(.))`` so the discrete div-grad
duality holds to rounding in both modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, DomainError

BC_ALIASES = {
    "box": "box",
    "no-slip-box": "box",
    "noslip": "box",
    "torus": "torus",
    "periodic": "torus",
    "periodic-torus": "torus",
}


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid on ``[0, lx] x [0, ly]``."""

    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0
    bc: str = "box"

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ConfigurationError("nx and ny must be integers")
        if self.nx < 8 or self.ny < 8:
            raise ConfigurationError(f"grid needs nx, ny >= 8, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ConfigurationError("domain lengths must be positive")
        bc = BC_ALIASES.get(str(self.bc).lower())
        if bc is None:
            raise ConfigurationError(f"unknown boundary mode {self.bc!r}")
        object.__setattr__(self, "bc", bc)
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "lx", float(self.lx))
        object.__setattr__(self, "ly", float(self.ly))

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @property
    def periodic(self) -> bool:
        return self.bc == "torus"

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def refined(self, factor: int = 2) -> "GridSpec":
        return replace(self, nx=self.nx * factor, ny=self.ny * factor)

    def centers(self):
        """Cell-centre coordinates as two ``(nx, ny)`` arrays."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def xfaces(self):
        x = np.arange(self.nx + 1) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def yfaces(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y, indexing="ij")

    def nodes(self):
        x = np.arange(self.nx + 1) * self.dx
        y = np.arange(self.ny + 1) * self.dy
        return np.meshgrid(x, y, indexing="ij")


@dataclass
class MacField:
    """Staggered velocity field (``VectorFieldMAC``)."""

    ux: np.ndarray
    uy: np.ndarray

    @classmethod
    def zeros(cls, grid: GridSpec) -> "MacField":
        return cls(np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    def copy(self) -> "MacField":
        return MacField(self.ux.copy(), self.uy.copy())

    def check(self, grid: GridSpec) -> None:
        if self.ux.shape != (grid.nx + 1, grid.ny) or self.uy.shape != (grid.nx, grid.ny + 1):
            raise ConfigurationError(
                f"MAC field shapes {self.ux.shape}, {self.uy.shape} do not match grid {grid.shape}"
            )

    def __add__(self, other: "MacField") -> "MacField":
        return MacField(self.ux + other.ux, self.uy + other.uy)

    def __sub__(self, other: "MacField") -> "MacField":
        return MacField(self.ux - other.ux, self.uy - other.uy)

    def scaled(self, a: float) -> "MacField":
        return MacField(a * self.ux, a * self.uy)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.ux)), np.max(np.abs(self.uy))))

    def centered(self):
        """Velocity components averaged to cell centres."""
        return 0.5 * (self.ux[1:] + self.ux[:-1]), 0.5 * (self.uy[:, 1:] + self.uy[:, :-1])

    def enforce_bc(self, grid: GridSpec) -> "MacField":
        """Zero wall-normal faces (box) or re-sync the duplicate layer (torus)."""
        ux, uy = self.ux.copy(), self.uy.copy()
        if grid.periodic:
            ux[-1] = ux[0]
            uy[:, -1] = uy[:, 0]
        else:
            ux[0] = ux[-1] = 0.0
            uy[:, 0] = uy[:, -1] = 0.0
        return MacField(ux, uy)


def smooth_unit_step(s):
    """C1 cubic Hermite step: 0 for s <= -1, 1 for s >= 1."""
    t = (np.clip(s, -1.0, 1.0) + 1.0) * 0.5
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class MaterialLaws:
    """Viscosity and mobility profiles of the phase variable, plus the Landau potential.

    ``eta(s) = eta_star + (eta_upper - eta_star) * h(s)`` with ``h`` a C1
    cubic blend of ``clip(s, -1, 1)``; same for the mobility.  The bounds
    hold for every real ``s`` by construction.
    """

    eta_star: float = 1.0
    eta_upper: float = 1.0
    m_star: float = 1.0
    m_upper: float = 1.0

    def __post_init__(self):
        for name in ("eta_star", "eta_upper", "m_star", "m_upper"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.eta_upper < self.eta_star or self.m_upper < self.m_star:
            raise ConfigurationError("upper bounds must not be below lower bounds")

    def eta(self, s):
        return self.eta_star + (self.eta_upper - self.eta_star) * smooth_unit_step(s)

    def m(self, s):
        return self.m_star + (self.m_upper - self.m_star) * smooth_unit_step(s)

    @staticmethod
    def F(s):
        return 0.25 * (s * s - 1.0) ** 2

    @staticmethod
    def dF(s):
        return s * s * s - s

    @staticmethod
    def ddF(s):
        return 3.0 * s * s - 1.0


@dataclass
class State:
    """Solution fields at one time level."""

    t: float
    rho: np.ndarray
    u: MacField
    p: np.ndarray
    chi: np.ndarray
    mu: np.ndarray = field(default=None)

    def copy(self) -> "State":
        return State(
            self.t,
            self.rho.copy(),
            self.u.copy(),
            self.p.copy(),
            self.chi.copy(),
            None if self.mu is None else self.mu.copy(),
        )


def check_scalar(f, grid: GridSpec) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ConfigurationError(f"scalar field shape {f.shape} does not match grid {grid.shape}")
    return f


def check_periodic_compatible(f, grid: GridSpec, factor: float = 4.0) -> None:
    """Reject torus data with a jump across the periodic seam.

    The seam jump is compared with the largest interior jump in the same
    direction.
    """
    if not grid.periodic:
        return
    scale = float(np.max(np.abs(f))) if f.size else 0.0
    for axis in (0, 1):
        interior = np.max(np.abs(np.diff(f, axis=axis)))
        first = np.take(f, 0, axis=axis)
        last = np.take(f, -1, axis=axis)
        seam = np.max(np.abs(first - last))
        if seam > factor * interior + 1e-12 * scale:
            raise ConfigurationError(
                f"field is not periodic-compatible along axis {axis} "
                f"(seam jump {seam:.3g} vs interior {interior:.3g})"
            )


def _grad(f, grid: GridSpec) -> MacField:
    nx, ny = grid.shape
    gx = np.empty((nx + 1, ny))
    gy = np.empty((nx, ny + 1))
    gx[1:nx] = (f[1:] - f[:-1]) / grid.dx
    gy[:, 1:ny] = (f[:, 1:] - f[:, :-1]) / grid.dy
    if grid.periodic:
        gx[0] = gx[nx] = (f[0] - f[-1]) / grid.dx
        gy[:, 0] = gy[:, ny] = (f[:, 0] - f[:, -1]) / grid.dy
    else:
        gx[0] = gx[nx] = 0.0
        gy[:, 0] = gy[:, ny] = 0.0
    return MacField(gx, gy)


def grad(f, grid: GridSpec, check: bool = True) -> MacField:
    """Face-centred gradient of a cell-centred scalar.

    Wall faces of the box carry a zero normal derivative (Neumann data).
    """
    f = check_scalar(f, grid)
    if check:
        check_periodic_compatible(f, grid)
    return _grad(f, grid)


def div(v: MacField, grid: GridSpec) -> np.ndarray:
    """Cell-centred conservative divergence of a MAC field."""
    v.check(grid)
    return (v.ux[1:] - v.ux[:-1]) / grid.dx + (v.uy[:, 1:] - v.uy[:, :-1]) / grid.dy


def laplacian(f, grid: GridSpec) -> np.ndarray:
    """Five-point Laplacian, identical to ``div(grad(f))``."""
    f = check_scalar(f, grid)
    return div(_grad(f, grid), grid)


def weighted_laplacian(f, beta: MacField, grid: GridSpec) -> np.ndarray:
    """``div(beta * grad f)`` with ``beta`` given on faces."""
    g = _grad(f, grid)
    return div(MacField(beta.ux * g.ux, beta.uy * g.uy), grid)


def to_xfaces(f, grid: GridSpec) -> np.ndarray:
    """Arithmetic mean of the two cells adjacent to each vertical face."""
    nx, ny = grid.shape
    out = np.empty((nx + 1, ny))
    out[1:nx] = 0.5 * (f[1:] + f[:-1])
    if grid.periodic:
        out[0] = out[nx] = 0.5 * (f[0] + f[-1])
    else:
        out[0] = f[0]
        out[nx] = f[-1]
    return out


def to_yfaces(f, grid: GridSpec) -> np.ndarray:
    nx, ny = grid.shape
    out = np.empty((nx, ny + 1))
    out[:, 1:ny] = 0.5 * (f[:, 1:] + f[:, :-1])
    if grid.periodic:
        out[:, 0] = out[:, ny] = 0.5 * (f[:, 0] + f[:, -1])
    else:
        out[:, 0] = f[:, 0]
        out[:, ny] = f[:, -1]
    return out


def to_faces(f, grid: GridSpec) -> MacField:
    return MacField(to_xfaces(f, grid), to_yfaces(f, grid))


def to_nodes(f, grid: GridSpec) -> np.ndarray:
    """Average of the (up to four) cells touching each node."""
    if grid.periodic:
        fp = np.pad(f, 1, mode="wrap")
    else:
        fp = np.pad(f, 1, mode="edge")
    return 0.25 * (fp[:-1, :-1] + fp[1:, :-1] + fp[:-1, 1:] + fp[1:, 1:])


def node_shear(u: MacField, grid: GridSpec):
    """``(d ux/dy, d uy/dx)`` at the ``(nx+1, ny+1)`` grid nodes.

    On box walls the no-slip ghost value is the negated interior value.
    """
    nx, ny = grid.shape
    dux = np.empty((nx + 1, ny + 1))
    duy = np.empty((nx + 1, ny + 1))
    dux[:, 1:ny] = (u.ux[:, 1:] - u.ux[:, :-1]) / grid.dy
    duy[1:nx, :] = (u.uy[1:] - u.uy[:-1]) / grid.dx
    if grid.periodic:
        dux[:, 0] = dux[:, ny] = (u.ux[:, 0] - u.ux[:, -1]) / grid.dy
        duy[0, :] = duy[nx, :] = (u.uy[0] - u.uy[-1]) / grid.dx
    else:
        dux[:, 0] = 2.0 * u.ux[:, 0] / grid.dy
        dux[:, ny] = -2.0 * u.ux[:, -1] / grid.dy
        duy[0, :] = 2.0 * u.uy[0] / grid.dx
        duy[nx, :] = -2.0 * u.uy[-1] / grid.dx
    return dux, duy


def strain_rate(u: MacField, grid: GridSpec):
    """Components of ``D u = (grad u + grad u^T) / 2`` at cell centres."""
    d11 = (u.ux[1:] - u.ux[:-1]) / grid.dx
    d22 = (u.uy[:, 1:] - u.uy[:, :-1]) / grid.dy
    dux, duy = node_shear(u, grid)
    d12n = 0.5 * (dux + duy)
    d12 = 0.25 * (d12n[:-1, :-1] + d12n[1:, :-1] + d12n[:-1, 1:] + d12n[1:, 1:])
    return d11, d22, d12


def sym_grad_normsq(u: MacField, law: MaterialLaws, chi, grid: GridSpec) -> np.ndarray:
    """Cell-centred ``eta(chi) |D u|^2``."""
    u.check(grid)
    chi = check_scalar(chi, grid)
    d11, d22, d12 = strain_rate(u, grid)
    return law.eta(chi) * (d11 * d11 + d22 * d22 + 2.0 * d12 * d12)


def integrate(f, grid: GridSpec) -> float:
    """Midpoint-rule integral over the domain (pairwise summation).

    Evaluated as mean times area, which keeps ``integrate(1) == lx * ly``
    free of the rounding in ``dx * dy``.
    """
    return float(np.sum(np.asarray(f, dtype=float)) / (grid.nx * grid.ny) * grid.area)


def face_integral(v: MacField, grid: GridSpec) -> float:
    """Integral of a face quantity, with the duplicate torus layer and box walls weighted consistently.

    Each face carries the control area ``dx*dy``; box wall faces carry half of it.
    """
    if grid.periodic:
        s = np.sum(v.ux[:-1]) + np.sum(v.uy[:, :-1])
    else:
        s = (
            np.sum(v.ux[1:-1]) + 0.5 * (np.sum(v.ux[0]) + np.sum(v.ux[-1]))
            + np.sum(v.uy[:, 1:-1]) + 0.5 * (np.sum(v.uy[:, 0]) + np.sum(v.uy[:, -1]))
        )
    return float(s * grid.cell_area)


def grad_l2sq(f, grid: GridSpec) -> float:
    """``||grad_h f||^2`` summed over faces."""
    g = _grad(f, grid)
    return face_integral(MacField(g.ux * g.ux, g.uy * g.uy), grid)


def pad_scalar(f, grid: GridSpec, n: int = 2) -> np.ndarray:
    """Ghost layers: periodic wrap or even (Neumann) reflection."""
    return np.pad(f, n, mode="wrap" if grid.periodic else "symmetric")


def require_positive(rho, what: str = "density") -> None:
    if not np.all(rho > 0):
        raise DomainError(f"{what} must be strictly positive (min {np.min(rho):.3g})")
