"""Energy, dissipation, budgets, decay functionals and twin-run distances.

Time derivatives inside the decay functionals are backward differences of
consecutive states.  When no previous state exists (the initial record) the
phase rate is evaluated from the evolution law itself,
``d chi/dt = -u . grad chi - m(chi) mu / rho``, and ``d u/dt`` is taken as 0.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import (GridSpec, MacField, MaterialLaws, State, _grad, div, face_integral,
                   grad_l2sq, integrate, laplacian, node_shear, sym_grad_normsq)
from .errors import ConfigurationError, DomainError
from .phase import compute_mu, upwind_gradient_dot


@dataclass
class DiagRecord:
    t: float
    E0: float
    visc_diss: float
    chem_diss: float
    mass_rho: float
    mass_rhochi: float
    int_m_mu: float
    rho_min: float
    rho_max: float
    chi_min: float
    chi_max: float
    div_inf: float
    u_l2sq: float
    gradchi_l2sq: float
    chi2m1_l2sq: float
    Ecal: float = float("nan")
    Dcal: float = float("nan")
    Acal: float = float("nan")
    H_higher: float = float("nan")

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[float]:
        return [float(v) for v in asdict(self).values()]

    @property
    def decay_quantity(self) -> float:
        """``||u||^2 + ||chi^2 - 1||^2 + ||grad chi||^2``."""
        return self.u_l2sq + self.chi2m1_l2sq + self.gradchi_l2sq


@dataclass
class DecayFunctionals:
    Ecal: float
    Dcal: float
    Acal: float


@dataclass
class DecayFit:
    sigma: float
    r_squared: float
    window: tuple[float, float]
    log_amplitude: float = 0.0
    degenerate: bool = False


@dataclass
class TwinDistance:
    value: float


def _mu(state: State, law: MaterialLaws, grid: GridSpec):
    return state.mu if state.mu is not None else compute_mu(state.rho, state.chi, law, grid)


def node_integral(f, grid: GridSpec) -> float:
    """Trapezoidal integral of a node array of shape ``(nx+1, ny+1)``."""
    if grid.periodic:
        s = np.sum(f[:-1, :-1])
    else:
        w = np.ones_like(f)
        w[0] *= 0.5
        w[-1] *= 0.5
        w[:, 0] *= 0.5
        w[:, -1] *= 0.5
        s = np.sum(w * f)
    return float(s * grid.cell_area)


def velocity_l2sq(u: MacField, grid: GridSpec) -> float:
    return face_integral(MacField(u.ux * u.ux, u.uy * u.uy), grid)


def velocity_h1sq(u: MacField, grid: GridSpec) -> float:
    """``||u||^2 + ||grad u||^2`` with the four velocity derivatives on their natural locations."""
    d11 = (u.ux[1:] - u.ux[:-1]) / grid.dx
    d22 = (u.uy[:, 1:] - u.uy[:, :-1]) / grid.dy
    dux, duy = node_shear(u, grid)
    grad_sq = integrate(d11 * d11 + d22 * d22, grid) + node_integral(dux * dux + duy * duy, grid)
    return velocity_l2sq(u, grid) + grad_sq


def gradient_h1sq(chi, grid: GridSpec) -> float:
    """``||grad chi||^2 + ||Lap chi||^2``; for Neumann or periodic data the Hessian norm equals the Laplacian norm."""
    lap = laplacian(chi, grid)
    return grad_l2sq(chi, grid) + integrate(lap * lap, grid)


def energy_E0(state: State, law: MaterialLaws, grid: GridSpec) -> float:
    """Total energy: kinetic + gradient + potential."""
    uc, vc = state.u.centered()
    kin = integrate(0.5 * state.rho * (uc * uc + vc * vc), grid)
    return kin + 0.5 * grad_l2sq(state.chi, grid) + integrate(state.rho * law.F(state.chi), grid)


def dissipation(state: State, law: MaterialLaws, grid: GridSpec):
    """``(int eta |D u|^2, int m |mu|^2)``."""
    mu = _mu(state, law, grid)
    visc = integrate(sym_grad_normsq(state.u, law, state.chi, grid), grid)
    chem = integrate(law.m(state.chi) * mu * mu, grid)
    return visc, chem


def phase_rate(state: State, law: MaterialLaws, grid: GridSpec):
    """``d chi/dt`` from the phase evolution law at a single time level."""
    mu = _mu(state, law, grid)
    return -upwind_gradient_dot(state.u, state.chi, grid) - law.m(state.chi) * mu / state.rho


def _rates(state: State, state_prev: State | None, dt, law, grid):
    if state_prev is None:
        return phase_rate(state, law, grid), MacField.zeros(grid)
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    chi_t = (state.chi - state_prev.chi) / dt
    u_t = (state.u - state_prev.u).scaled(1.0 / dt)
    return chi_t, u_t


def decay_functionals(state: State, state_prev: State | None, dt: float | None,
                      law: MaterialLaws, grid: GridSpec) -> DecayFunctionals:
    chi = state.chi
    chi_t, u_t = _rates(state, state_prev, dt, law, grid)
    mu = _mu(state, law, grid)
    w = chi * chi - 1.0
    u_h1 = velocity_h1sq(state.u, grid)
    w_sq = integrate(w * w, grid)
    g_h1 = gradient_h1sq(chi, grid)
    chi_t_sq = integrate(chi_t * chi_t, grid)
    ecal = u_h1 + w_sq + g_h1 + chi_t_sq
    dcal = (velocity_l2sq(u_t, grid) + u_h1 + chi_t_sq + grad_l2sq(chi_t, grid)
            + w_sq + g_h1 + integrate(mu * mu, grid))
    uc, vc = state.u.centered()
    rho = state.rho
    acal = integrate(rho * (uc * uc + vc * vc) + rho * w * w + rho * rho * w * w, grid) \
        + grad_l2sq(chi, grid)
    return DecayFunctionals(ecal, dcal, acal)


def initial_data_size(state: State, grid: GridSpec) -> float:
    """``||u||_H1 + ||chi^2 - 1|| + ||grad chi||_H1``, the smallness measure of decay data."""
    w = state.chi * state.chi - 1.0
    return float(np.sqrt(velocity_h1sq(state.u, grid)) + np.sqrt(integrate(w * w, grid))
                 + np.sqrt(gradient_h1sq(state.chi, grid)))


def higher_energy(state: State, state_prev: State | None, dt: float | None,
                  law: MaterialLaws, grid: GridSpec) -> float:
    """``int rho^2 |d chi/dt|^2 / 2 + int eta |D u|^2 / 2``."""
    chi_t, _ = _rates(state, state_prev, dt, law, grid)
    visc = integrate(sym_grad_normsq(state.u, law, state.chi, grid), grid)
    return integrate(0.5 * state.rho**2 * chi_t * chi_t, grid) + 0.5 * visc


def diag_record(state: State, law: MaterialLaws, grid: GridSpec,
                state_prev: State | None = None, dt: float | None = None,
                decay: bool = True) -> DiagRecord:
    """All monitored scalars of one state."""
    mu = _mu(state, law, grid)
    st = state if state.mu is not None else State(state.t, state.rho, state.u, state.p, state.chi, mu)
    visc, chem = dissipation(st, law, grid)
    chi, rho = st.chi, st.rho
    w = chi * chi - 1.0
    rec = DiagRecord(
        t=float(st.t),
        E0=energy_E0(st, law, grid),
        visc_diss=visc,
        chem_diss=chem,
        mass_rho=integrate(rho, grid),
        mass_rhochi=integrate(rho * chi, grid),
        int_m_mu=integrate(law.m(chi) * mu, grid),
        rho_min=float(np.min(rho)),
        rho_max=float(np.max(rho)),
        chi_min=float(np.min(chi)),
        chi_max=float(np.max(chi)),
        div_inf=float(np.max(np.abs(div(st.u, grid)))),
        u_l2sq=velocity_l2sq(st.u, grid),
        gradchi_l2sq=grad_l2sq(chi, grid),
        chi2m1_l2sq=integrate(w * w, grid),
    )
    if decay:
        d = decay_functionals(st, state_prev, dt, law, grid)
        rec.Ecal, rec.Dcal, rec.Acal = d.Ecal, d.Dcal, d.Acal
        rec.H_higher = higher_energy(st, state_prev, dt, law, grid)
    return rec


def _trapz_cumulative(t, f):
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(t)
    out[1:] = np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))
    return out


def _check_series(series):
    if len(series) < 2:
        raise ConfigurationError("a budget needs at least two records")


def energy_budget(series) -> np.ndarray:
    """``r_n = E0_n + int_0^{t_n} (visc + chem) dt - E0_0`` (trapezoid rule)."""
    _check_series(series)
    t = [r.t for r in series]
    e = np.array([r.E0 for r in series])
    d = [r.visc_diss + r.chem_diss for r in series]
    return e + _trapz_cumulative(t, d) - e[0]


def budget_rho_chi(series) -> np.ndarray:
    """Residual of ``d/dt int rho chi + int m(chi) mu = 0`` integrated from the first record."""
    _check_series(series)
    t = [r.t for r in series]
    mass = np.array([r.mass_rhochi for r in series])
    return mass - mass[0] + _trapz_cumulative(t, [r.int_m_mu for r in series])


def decay_fit(times, values, window=None) -> DecayFit:
    """Least-squares fit of ``ln(values) = a - sigma t`` on the window."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, v = t[sel], v[sel]
    if t.size < 10:
        raise ConfigurationError(f"decay fit needs at least 10 samples, got {t.size}")
    if np.any(v <= 0):
        raise DomainError("decay fit needs strictly positive values")
    y = np.log(v)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (intercept + slope * t)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid * resid))
    degenerate = ss_tot <= 1e-28 * max(1.0, float(np.sum(y * y)))
    if degenerate:
        r2, slope = 0.0, 0.0
    else:
        r2 = float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))
    return DecayFit(float(-slope), r2, (float(t[0]), float(t[-1])), float(intercept), degenerate)


def ws_distance(a: State, b: State, grid: GridSpec) -> TwinDistance:
    """Relative-energy distance between two states on the same grid."""
    for x, y in ((a.rho, b.rho), (a.chi, b.chi), (a.u.ux, b.u.ux), (a.u.uy, b.u.uy)):
        if np.shape(x) != np.shape(y):
            raise ConfigurationError("states live on different grids")
    a.u.check(grid)
    du = a.u - b.u
    ux2 = 0.5 * (du.ux[1:] ** 2 + du.ux[:-1] ** 2)
    uy2 = 0.5 * (du.uy[:, 1:] ** 2 + du.uy[:, :-1] ** 2)
    dchi = a.chi - b.chi
    drho = a.rho - b.rho
    g = _grad(dchi, grid)
    val = 0.5 * (integrate(a.rho * (ux2 + uy2) + dchi * dchi + drho * drho, grid)
                 + face_integral(MacField(g.ux * g.ux, g.uy * g.uy), grid))
    return TwinDistance(val)
