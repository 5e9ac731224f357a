"""Variable-density momentum predictor and incremental pressure projection.

The predictor solves, per velocity component on its faces,

    rho_f (u* - u)/dt + rho_f N(u) = L_imp(u*) + E(u) + f_cap - grad p

with ``N`` the flux-form second-order upwind advection, ``L_imp`` the
``div(eta grad u)/2`` half of the viscous term (implicit, SPD) and ``E`` the
remaining ``div(eta (div-part + transpose))/2`` half (explicit).  Together
they equal ``div(eta D u)`` with ``D u = (grad u + grad u^T) / 2``.

The capillary force is ``-Lap_h chi grad chi``; the gradient of
``|grad chi|^2 / 2`` is absorbed into the stored (augmented) pressure.

Each component is handled in a *frame*: arrays are arranged so that the
component is normal to faces along axis 0.  The y-component reuses the same
code on transposed arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (GridSpec, MacField, MaterialLaws, State, _grad, check_scalar, div,
                   laplacian, require_positive, to_faces, to_nodes)
from .errors import ConfigurationError
from .linalg import CellPoissonSolver, pcg


@dataclass(frozen=True)
class _Frame:
    n: int          # number of cells along the normal axis
    m: int          # number of cells along the tangential axis
    dn: float
    dt: float
    periodic: bool

    @classmethod
    def of(cls, grid: GridSpec, component: int) -> "_Frame":
        if component == 0:
            return cls(grid.nx, grid.ny, grid.dx, grid.dy, grid.periodic)
        return cls(grid.ny, grid.nx, grid.dy, grid.dx, grid.periodic)


def _frame_arrays(u: MacField, component: int):
    """``(normal, tangential)`` components seen from the given frame."""
    if component == 0:
        return u.ux, u.uy
    return u.uy.T, u.ux.T


def _from_frame(arr, component: int):
    return arr if component == 0 else arr.T


def _pad_normal(un, fr: _Frame):
    """One ghost face on each side along the normal axis."""
    n = fr.n
    if fr.periodic:
        lo, hi = un[n - 1], un[1]
    else:
        lo, hi = -un[1], -un[n - 1]
    return np.concatenate([lo[None], un, hi[None]], axis=0)


def _pad_tangential(un, fr: _Frame):
    """Two ghost rows on each side along the tangential axis."""
    if fr.periodic:
        return np.pad(un, ((0, 0), (2, 2)), mode="wrap")
    return np.concatenate([-un[:, 1::-1], un, -un[:, :-3:-1]], axis=1)


def _diff_normal_to_faces(s, fr: _Frame):
    """Centre values -> normal difference on faces (zero on box walls)."""
    out = np.zeros((fr.n + 1, fr.m))
    out[1:fr.n] = (s[1:] - s[:-1]) / fr.dn
    if fr.periodic:
        out[0] = out[fr.n] = (s[0] - s[-1]) / fr.dn
    return out


def _dt_at_nodes(un, fr: _Frame):
    """Tangential derivative of the normal component at nodes."""
    n, m = fr.n, fr.m
    out = np.empty((n + 1, m + 1))
    out[:, 1:m] = (un[:, 1:] - un[:, :-1]) / fr.dt
    if fr.periodic:
        out[:, 0] = out[:, m] = (un[:, 0] - un[:, -1]) / fr.dt
    else:
        out[:, 0] = 2.0 * un[:, 0] / fr.dt
        out[:, m] = -2.0 * un[:, -1] / fr.dt
    return out


def _dn_at_nodes(ut, fr: _Frame):
    """Normal derivative of the tangential component at nodes."""
    n, m = fr.n, fr.m
    out = np.empty((n + 1, m + 1))
    out[1:n] = (ut[1:] - ut[:-1]) / fr.dn
    if fr.periodic:
        out[0] = out[n] = (ut[0] - ut[-1]) / fr.dn
    else:
        out[0] = 2.0 * ut[0] / fr.dn
        out[n] = -2.0 * ut[-1] / fr.dn
    return out


def _advect_component(un, ut, fr: _Frame):
    n, m = fr.n, fr.m
    ue = _pad_normal(un, fr)
    a = 0.5 * (un[:-1] + un[1:])
    q = np.where(a > 0.0, 1.5 * ue[1:n + 1] - 0.5 * ue[0:n],
                 1.5 * ue[2:n + 2] - 0.5 * ue[3:n + 3])
    out = _diff_normal_to_faces(a * q, fr)
    b = np.zeros((n + 1, m + 1))
    b[1:n] = 0.5 * (ut[:-1] + ut[1:])
    if fr.periodic:
        b[0] = b[n] = 0.5 * (ut[-1] + ut[0])
    ut_pad = _pad_tangential(un, fr)
    q = np.where(b > 0.0, 1.5 * ut_pad[:, 1:m + 2] - 0.5 * ut_pad[:, 0:m + 1],
                 1.5 * ut_pad[:, 2:m + 3] - 0.5 * ut_pad[:, 3:m + 4])
    g = b * q
    out += (g[:, 1:] - g[:, :-1]) / fr.dt
    if not fr.periodic:
        out[0] = out[n] = 0.0
    return out


def advection(u: MacField, grid: GridSpec) -> MacField:
    """Flux-form ``div(u (x) u)`` on faces with second-order upwind face values."""
    u.check(grid)
    comps = []
    for c in (0, 1):
        un, ut = _frame_arrays(u, c)
        comps.append(_from_frame(_advect_component(un, ut, _Frame.of(grid, c)), c))
    return MacField(*comps)


def _eta_frame(eta_c, eta_n, component):
    if component == 0:
        return eta_c, eta_n
    return eta_c.T, eta_n.T


def _implicit_part(un, eta_c, eta_n, fr: _Frame):
    s = eta_c * (un[1:] - un[:-1]) / fr.dn
    t = eta_n * _dt_at_nodes(un, fr)
    out = 0.5 * (_diff_normal_to_faces(s, fr) + (t[:, 1:] - t[:, :-1]) / fr.dt)
    if not fr.periodic:
        out[0] = out[fr.n] = 0.0
    return out


def _explicit_part(un, ut, eta_c, eta_n, fr: _Frame):
    s = eta_c * (un[1:] - un[:-1]) / fr.dn
    t = eta_n * _dn_at_nodes(ut, fr)
    out = 0.5 * (_diff_normal_to_faces(s, fr) + (t[:, 1:] - t[:, :-1]) / fr.dt)
    if not fr.periodic:
        out[0] = out[fr.n] = 0.0
    return out


def viscous_split(u: MacField, eta_c, grid: GridSpec):
    """``(implicit, explicit)`` halves of ``div(eta D u)`` on faces.

    ``eta_c`` is the cell-centred viscosity; nodes use the four-cell mean.
    """
    eta_n = to_nodes(eta_c, grid)
    imp, exp = [], []
    for c in (0, 1):
        fr = _Frame.of(grid, c)
        un, ut = _frame_arrays(u, c)
        ec, en = _eta_frame(eta_c, eta_n, c)
        imp.append(_from_frame(_implicit_part(un, ec, en, fr), c))
        exp.append(_from_frame(_explicit_part(un, ut, ec, en, fr), c))
    return MacField(*imp), MacField(*exp)


def capillary_force(chi, grid: GridSpec) -> MacField:
    """``-Lap_h chi * grad_h chi`` on faces (zero on box walls)."""
    chi = check_scalar(chi, grid)
    lap = to_faces(laplacian(chi, grid), grid)
    g = _grad(chi, grid)
    return MacField(-lap.ux * g.ux, -lap.uy * g.uy)


def _unknowns(full, fr: _Frame):
    return full[:fr.n] if fr.periodic else full[1:fr.n]


def _embed(x, fr: _Frame):
    full = np.zeros((fr.n + 1, fr.m))
    if fr.periodic:
        full[:fr.n] = x
        full[fr.n] = x[0]
    else:
        full[1:fr.n] = x
    return full


def predict_velocity(state: State, law: MaterialLaws, dt: float, grid: GridSpec,
                     tol: float = 1e-10, maxiter: int = 500,
                     stats: dict | None = None, force: MacField | None = None,
                     advect: bool = True) -> MacField:
    """Intermediate velocity ``u*`` before projection.

    ``state.rho`` and ``state.chi`` should already be at the new time level;
    ``state.u`` and ``state.p`` at the old one.  ``force`` overrides the
    capillary force; pass ``MacField.zeros(grid)`` to switch it off.
    ``advect=False`` drops the advection term.  ``stats`` receives
    ``"cg_iters_u"`` as a pair of counts.
    """
    if not dt > 0:
        raise ConfigurationError(f"time step must be positive, got {dt}")
    rho = check_scalar(state.rho, grid)
    require_positive(rho)
    u = state.u
    u.check(grid)
    rho_f = to_faces(rho, grid)
    eta_c = law.eta(state.chi)
    eta_n = to_nodes(eta_c, grid)
    adv = advection(u, grid) if advect else MacField.zeros(grid)
    f = capillary_force(state.chi, grid) if force is None else force
    gp = _grad(state.p, grid)
    out, iters = [], []
    for c in (0, 1):
        fr = _Frame.of(grid, c)
        un, ut = _frame_arrays(u, c)
        ec, en = _eta_frame(eta_c, eta_n, c)
        rf = _from_frame((rho_f.ux, rho_f.uy)[c], c)
        rhs_full = (rf / dt * un - rf * _from_frame((adv.ux, adv.uy)[c], c)
                    + _explicit_part(un, ut, ec, en, fr)
                    + _from_frame((f.ux, f.uy)[c], c)
                    - _from_frame((gp.ux, gp.uy)[c], c))
        diag_full = rf / dt
        diag = _unknowns(diag_full, fr)
        emax = float(np.max(ec))
        jac = 1.0 / (diag + emax * (1.0 / fr.dn**2 + 1.0 / fr.dt**2))

        def apply(x, fr=fr, ec=ec, en=en, diag=diag):
            full = _embed(x, fr)
            return diag * x - _unknowns(_implicit_part(full, ec, en, fr), fr)

        x, k = pcg(apply, _unknowns(rhs_full, fr), x0=_unknowns(un, fr),
                   precond=lambda r, jac=jac: jac * r, tol=tol, maxiter=maxiter,
                   name=f"momentum[{'xy'[c]}]")
        out.append(_from_frame(_embed(x, fr), c))
        iters.append(k)
    if stats is not None:
        stats["cg_iters_u"] = tuple(iters)
    return MacField(np.ascontiguousarray(out[0]), np.ascontiguousarray(out[1]))


def pressure_project(rho, u_star: MacField, dt: float, grid: GridSpec, p_old=None,
                     tol: float = 1e-12, maxiter: int = 500,
                     stats: dict | None = None):
    """Project ``u_star`` onto discretely divergence-free fields.

    Solves ``div((1/rho_f) grad phi) = div(u_star)/dt`` and returns
    ``(u, p_old + phi)`` with ``u = u_star - dt grad(phi) / rho_f``.  The
    pressure is normalised to zero mean.
    """
    rho = check_scalar(rho, grid)
    require_positive(rho)
    u_star.check(grid)
    if not dt > 0:
        raise ConfigurationError(f"time step must be positive, got {dt}")
    rho_f = to_faces(rho, grid)
    beta = MacField(1.0 / rho_f.ux, 1.0 / rho_f.uy)
    b = -div(u_star, grid) / dt
    b = b - np.mean(b)
    poisson = CellPoissonSolver(grid)
    scale = float(np.mean(1.0 / rho))

    def apply(x):
        g = _grad(x, grid)
        return -div(MacField(beta.ux * g.ux, beta.uy * g.uy), grid)

    phi, k = pcg(apply, b, precond=lambda r: poisson.solve(r, scale=scale),
                 tol=tol, maxiter=maxiter, name="pressure")
    phi -= np.mean(phi)
    g = _grad(phi, grid)
    u = MacField(u_star.ux - dt * beta.ux * g.ux, u_star.uy - dt * beta.uy * g.uy).enforce_bc(grid)
    if stats is not None:
        stats["cg_iters_p"] = k
    p = phi if p_old is None else p_old + phi
    return u, p - np.mean(p)
