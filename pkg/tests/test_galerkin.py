import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from nsac.core import GridSpec, MaterialLaws
from nsac.diagnostics import DiagRecord, energy_budget
from nsac.errors import ConfigurationError, DomainError
from nsac.galerkin import (ModeBasis, VelocitySeries, assemble_A, assemble_B, assemble_C,
                           build_modes, capillary_rhs, energy_identity_residual, galerkin_step,
                           galerkin_system, run_galerkin, trace_characteristic,
                           write_mode_manifest)
from nsac.transport import advect_density, solenoidal_part

LAW = MaterialLaws(0.5, 1.0, 0.5, 1.0)
L = 2 * np.pi


def torus(n=64):
    return GridSpec(n, n, L, L, "torus")


def fine_points(n=128):
    h = L / n
    c = (np.arange(n) + 0.5) * h
    x, y = np.meshgrid(c, c, indexing="ij")
    return x, y, h * h


# --- modes ---------------------------------------------------------------------

def test_k_max_one_has_four_modes():
    modes = build_modes(1)
    assert len(modes) == 4
    assert {m.k for m in modes} == {(1, 0), (0, 1)}


def test_default_mode_count():
    assert len(build_modes(4)) == 48


def test_k_max_must_be_positive():
    with pytest.raises(ConfigurationError):
        build_modes(0)


def test_modes_are_divergence_free():
    x, y, _ = fine_points(37)
    for m in build_modes(3, 2.0, 3.0):
        assert np.max(np.abs(m.divergence(x, y))) <= 1e-13 * max(1.0, m.eigenvalue)
        assert m.eigenvalue == pytest.approx(m.wavenumber[0] ** 2 + m.wavenumber[1] ** 2)


def test_gram_is_identity():
    basis = ModeBasis(build_modes(4), torus())
    assert np.max(np.abs(basis.gram(direct=True) - np.eye(basis.size))) <= 1e-10
    assert np.max(np.abs(basis.gram() - np.eye(basis.size))) <= 1e-10


def test_fast_gram_matches_direct_sum(rng):
    g = torus(32)
    basis = ModeBasis(build_modes(4), g)
    w = 1 + rng.random(g.shape)
    ref = basis.gram(w, direct=True)
    assert np.max(np.abs(basis.gram(w) - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_mode_manifest(tmp_path):
    modes = build_modes(2)
    lines = write_mode_manifest(modes, tmp_path / "m.txt").read_text().splitlines()
    assert lines[0].startswith("#") and len(lines) == 1 + len(modes)
    kx, ky, parity, lam = lines[1].split()
    assert (int(kx), int(ky), parity, float(lam)) == (*modes[0].k, modes[0].parity, modes[0].eigenvalue)


# --- A -------------------------------------------------------------------------

def test_A_of_constant_density():
    basis = ModeBasis(build_modes(3), torus())
    assert np.max(np.abs(assemble_A(np.ones(basis.grid.shape), basis) - np.eye(basis.size))) <= 1e-10
    assert np.max(np.abs(assemble_A(np.full(basis.grid.shape, 2.0), basis) - 2 * np.eye(basis.size))) <= 1e-10


def _oracle_A(modes, rho_fn):
    x, y, w = fine_points()
    vals = [m.value(x, y) for m in modes]
    r = rho_fn(x, y)
    return np.array([[np.sum(r * (a[0] * b[0] + a[1] * b[1])) * w for b in vals] for a in vals])


def test_A_variable_density_matches_refined_quadrature():
    g = torus()
    modes = build_modes(3)
    basis = ModeBasis(modes, g)
    rho_fn = lambda x, y: 1 + 0.5 * np.sin(x)   # 1 + sin(2 pi x / lx) / 2
    A = assemble_A(rho_fn(*g.centers()), basis)
    assert np.max(np.abs(A - _oracle_A(modes, rho_fn))) <= 1e-6
    assert np.allclose(A, A.T, atol=1e-14)


def test_A_rejects_nonpositive_density():
    basis = ModeBasis(build_modes(1), torus(16))
    with pytest.raises(DomainError):
        assemble_A(np.zeros((16, 16)), basis)


@settings(max_examples=15)
@given(seed=st.integers(0, 2**32 - 1), lo=st.floats(0.05, 2.0), span=st.floats(0.0, 5.0))
def test_A_positive_definite(seed, lo, span):
    rng = np.random.default_rng(seed)
    g = torus(16)
    basis = ModeBasis(build_modes(3), g)
    rho = lo + span * rng.random(g.shape)
    ev = np.linalg.eigvalsh(assemble_A(rho, basis))
    assert ev[0] >= rho.min() * (1 - 1e-10)
    assert ev[-1] <= rho.max() * (1 + 1e-10)


# --- B -------------------------------------------------------------------------

def test_B_is_energy_neutral_for_constant_density(rng):
    basis = ModeBasis(build_modes(2), torus(32))
    B = assemble_B(np.ones(basis.grid.shape), basis)
    for _ in range(5):
        gv = rng.standard_normal(basis.size)
        assert abs(np.einsum("jkl,j,k,l->", B, gv, gv, gv)) <= 1e-10 * np.sum(gv**2) ** 1.5
    assert np.max(np.abs(B + np.transpose(B, (2, 1, 0)))) <= 1e-10


def test_B_self_advection_vanishes():
    basis = ModeBasis(build_modes(2), torus(32))
    B = assemble_B(np.ones(basis.grid.shape), basis)
    assert np.max(np.abs([B[k, k, k] for k in range(basis.size)])) <= 1e-10


def test_B_variable_density_matches_refined_quadrature():
    g = torus(32)
    modes = build_modes(2)
    basis = ModeBasis(modes, g)
    rho_fn = lambda x, y: 1.5 + 0.5 * np.sin(x) * np.cos(y)
    B = assemble_B(rho_fn(*g.centers()), basis)
    x, y, w = fine_points()
    r = rho_fn(x, y)
    vals = [np.array(m.value(x, y)) for m in modes]
    grads = [np.array(m.gradient(x, y)) for m in modes]
    ref = np.empty_like(B)
    for k, wk in enumerate(vals):
        for l, gl in enumerate(grads):
            conv = np.einsum("i...,ji...->j...", wk, gl)         # (w_k . grad) w_l
            for j, wj in enumerate(vals):
                ref[j, k, l] = np.sum(r * (conv[0] * wj[0] + conv[1] * wj[1])) * w
    assert np.max(np.abs(B - ref)) <= 1e-6


# --- C -------------------------------------------------------------------------

def _strain_sq(basis, gv):
    du = basis.velocity_grad(gv)
    d = 0.5 * (du + np.swapaxes(du, 0, 1))
    return np.sum(d * d, axis=(0, 1))


def test_C_quadratic_form_for_pure_phase(rng):
    basis = ModeBasis(build_modes(3), torus(32))
    C = assemble_C(np.ones(basis.grid.shape), basis, LAW)
    gv = rng.standard_normal(basis.size)
    direct = LAW.eta(1.0) * np.sum(_strain_sq(basis, gv)) * basis.dA
    assert gv @ C @ gv == pytest.approx(direct, rel=1e-8)
    assert np.all(C @ np.zeros(basis.size) == 0)


def test_C_front_matches_refined_quadrature():
    g = torus()
    modes = build_modes(2)
    basis = ModeBasis(modes, g)
    chi_fn = lambda x, y: np.tanh(1.5 * np.sin(x))
    C = assemble_C(chi_fn(*g.centers()), basis, LAW)
    x, y, w = fine_points(256)
    eta = LAW.eta(chi_fn(x, y))
    D = []
    for m in modes:
        gm = np.array(m.gradient(x, y))
        D.append(0.5 * (gm + np.swapaxes(gm, 0, 1)))
    ref = np.array([[np.sum(eta * np.sum(a * b, axis=(0, 1))) * w for b in D] for a in D])
    assert np.max(np.abs(C - ref)) <= 1e-6
    assert np.linalg.eigvalsh(C)[0] >= 0


# --- capillary forcing ---------------------------------------------------------------

def test_capillary_constant_phase():
    basis = ModeBasis(build_modes(2), torus(32))
    assert np.all(capillary_rhs(np.full(basis.grid.shape, 0.3), basis) == 0)


def test_capillary_one_dimensional_front_and_y_mode():
    g = torus(32)
    basis = ModeBasis(build_modes(2), g)
    f = capillary_rhs(np.tanh(np.sin(g.centers()[0])), basis)
    for j, m in enumerate(basis.modes):
        if m.k[0] == 0:
            assert f[j] == 0


def test_capillary_matches_refined_quadrature():
    g = torus()
    modes = build_modes(3)
    basis = ModeBasis(modes, g)
    chi_fn = lambda x, y: 0.5 * np.sin(x) * np.cos(2 * y) + 0.3 * np.cos(x + y)
    f = capillary_rhs(chi_fn(*g.centers()), basis)
    x, y, w = fine_points()
    cx = 0.5 * np.cos(x) * np.cos(2 * y) - 0.3 * np.sin(x + y)
    cy = -np.sin(x) * np.sin(2 * y) - 0.3 * np.sin(x + y)
    s = np.array([[cx * cx, cx * cy], [cy * cx, cy * cy]])
    ref = np.array([np.sum(s * np.array(m.gradient(x, y))) * w for m in modes])
    assert np.max(np.abs(f - ref)) <= 1e-6


# --- time stepping ---------------------------------------------------------------

def test_step_fixed_point():
    g = torus(16)
    sys = galerkin_system(build_modes(2), g, np.full(g.shape, 1.3), np.ones(g.shape))
    new = galerkin_step(sys, LAW, 1e-2)
    assert np.all(new.g == 0) and np.all(new.chi == 1) and np.all(new.rho == 1.3)


def test_step_rejects_bad_dt():
    g = torus(16)
    sys = galerkin_system(build_modes(1), g, np.ones(g.shape), np.ones(g.shape))
    with pytest.raises(ConfigurationError):
        galerkin_step(sys, LAW, 0.0)


@pytest.mark.parametrize("k", [(1, 0), (1, 1)])
def test_single_mode_decay_matches_scalar_ode(k):
    g = torus(32)
    modes = [m for m in build_modes(2) if m.k == k and m.parity == "cos"]
    g0 = np.array([0.3])
    sys = galerkin_system(modes, g, np.ones(g.shape), np.ones(g.shape), g=g0)
    eta = float(LAW.eta(1.0))
    # div(eta D u) = (eta / 2) Lap u for solenoidal u: rate eta |k|^2 / 2
    rate = 0.5 * eta * modes[0].eigenvalue
    dt = 1e-3
    t_end = round(1.0 / rate / dt) * dt
    run = run_galerkin(sys, LAW, dt, t_end)
    gs = np.array(run.coefficients)[:, 0]
    exact = g0[0] * np.exp(-rate * np.array(run.times))
    assert np.max(np.abs(gs - exact)) <= 1e-4 * g0[0]


def test_split_coupling_runs_and_conserves_mass():
    g = torus(32)
    x, y = g.centers()
    rho = 1.5 + 0.5 * np.sin(x) * np.sin(y)
    chi = np.tanh(np.sin(x))
    sys = galerkin_system(build_modes(2), g, rho, chi, g=0.1 * np.ones(12))
    run = run_galerkin(sys, LAW, 1e-2, 0.1, coupling="split")
    assert abs(run.records[-1].mass_rho / run.records[0].mass_rho - 1) <= 1e-12
    assert run.records[-1].rho_min >= run.records[0].rho_min - 1e-12


# --- energy identity -------------------------------------------------------------

def _rec(t, e0, d):
    return DiagRecord(t, e0, d, 0.0, 1, 0, 0, 1, 1, 1, 1, 0, 0, 0, 0)


def test_identity_residual_mirrors_budget():
    recs = [_rec(0.1 * k, 1.0, 0.0) for k in range(5)]
    assert np.all(energy_identity_residual(recs) == 0)
    with pytest.raises(ConfigurationError):
        energy_identity_residual(recs[:1])
    t = np.linspace(0, 1, 21)
    recs = [_rec(s, np.exp(-s), np.exp(-s)) for s in t]
    assert np.array_equal(energy_identity_residual(recs), energy_budget(recs))


def _identity_rate(dt):
    g = torus(32)
    x, y = g.centers()
    rho = 1.5 + 0.5 * np.sin(x) * np.sin(y)
    chi = np.tanh(2 * np.sin(x) * np.cos(y))
    sys = galerkin_system(build_modes(2), g, rho, chi, g=0.5 * np.ones(12))
    run = run_galerkin(sys, LAW, dt, 0.1)
    r = energy_identity_residual(run)
    t = np.array([rec.t for rec in run.records])
    return np.max(np.abs(r[1:]) / t[1:]), run.records[0].E0


def test_identity_residual_is_second_order():
    r1, e0 = _identity_rate(4e-3)
    r2, _ = _identity_rate(2e-3)
    assert r1 <= 1e-3 * e0
    assert 3.2 <= r1 / r2 <= 4.8


# --- characteristics ---------------------------------------------------------------

def test_characteristic_zero_velocity():
    x0 = np.array([0.3, 1.7])
    x = trace_characteristic(lambda p, t: np.zeros(2), x0, 0.0, 1.0)
    assert np.array_equal(x, x0)


def test_characteristic_constant_velocity():
    v = np.array([0.7, -0.2])
    x = trace_characteristic(lambda p, t: v, [0.3, 1.7], 0.5, 2.0)
    assert np.max(np.abs(x - (np.array([0.3, 1.7]) + 1.5 * v))) <= 1e-12


def test_characteristic_single_mode_against_dense_integration():
    modes = [m for m in build_modes(1) if m.k == (1, 0) and m.parity == "sin"]
    modes += [m for m in build_modes(1) if m.k == (0, 1) and m.parity == "cos"]
    series = VelocitySeries(modes, [0.0, 2.0], [[1.0, 0.5], [1.0, 0.5]])
    x0 = np.array([0.4, 2.1])
    x = trace_characteristic(series, x0, 0.0, 2.0, dt=1e-3)
    ref = solve_ivp(lambda t, p: series(p, t), (0.0, 2.0), x0, method="DOP853",
                    rtol=1e-13, atol=1e-13).y[:, -1]
    assert np.max(np.abs(x - ref)) <= 1e-8


def test_characteristic_outside_coverage():
    modes = build_modes(1)
    series = VelocitySeries(modes, [0.0, 1.0], np.zeros((2, 4)))
    with pytest.raises(DomainError):
        trace_characteristic(series, [1.0, 1.0], 0.0, 1.5)


def test_series_rejects_unsorted_times():
    with pytest.raises(ConfigurationError):
        VelocitySeries(build_modes(1), [1.0, 0.0], np.zeros((2, 4)))


def _characteristic_error(n):
    """Grid transport against rho_0 carried along traced characteristics."""
    g = torus(n)
    modes = [m for m in build_modes(1) if m.k == (1, 0) and m.parity == "sin"]
    modes += [m for m in build_modes(1) if m.k == (0, 1) and m.parity == "sin"]
    coef = np.array([1.0, 0.6])
    series = VelocitySeries(modes, [0.0, 1.0], [coef, coef])
    basis = ModeBasis(modes, g)
    u = solenoidal_part(basis.mac_velocity(coef), g)
    rho0 = lambda x, y: 2 + np.sin(x) * np.cos(y)
    rho = rho0(*g.centers())
    steps = n // 4
    for _ in range(steps):
        rho = advect_density(rho, u, 1.0 / steps, g)
    xc, yc = g.centers()
    err = 0.0
    for i in range(0, n, n // 8):
        for j in range(0, n, n // 8):
            x0 = trace_characteristic(series, [xc[i, j], yc[i, j]], 1.0, 0.0, dt=1e-2)
            err = max(err, abs(rho[i, j] - rho0(*x0)))
    return err


def test_density_constant_along_characteristics():
    e32, e64 = _characteristic_error(32), _characteristic_error(64)
    assert e64 < e32
    assert e64 <= 0.05
