import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import fft

from nsac.core import (GridSpec, MacField, MaterialLaws, div, grad, integrate, laplacian,
                       sym_grad_normsq, strain_rate)
from nsac.errors import ConfigurationError
from nsac.transport import curl_of_streamfunction

from conftest import smooth_random


def torus(n, l=1.0):
    return GridSpec(n, n, l, l, "torus")


# --- grid ---------------------------------------------------------------

def test_grid_spacings():
    g = GridSpec(16, 8, 2.0, 0.5, "box")
    assert g.dx == 2.0 / 16 and g.dy == 0.5 / 8


@pytest.mark.parametrize("args", [(4, 16), (16, 7), (16, 16, -1.0), (16, 16, 1.0, 1.0, "moebius")])
def test_grid_rejects_invalid(args):
    with pytest.raises(ConfigurationError):
        GridSpec(*args)


# --- grad ---------------------------------------------------------------

@pytest.mark.parametrize("bc", ["box", "torus"])
def test_grad_of_constant_is_zero(bc):
    g = GridSpec(16, 12, 1.0, 1.0, bc)
    v = grad(np.full(g.shape, 3.7), g)
    assert np.all(v.ux == 0) and np.all(v.uy == 0)


def test_grad_rejects_nonperiodic_data_on_torus():
    g = torus(32)
    x, _ = g.centers()
    with pytest.raises(ConfigurationError):
        grad(x, g)


def test_grad_rejects_mismatched_grid():
    with pytest.raises(ConfigurationError):
        grad(np.zeros((10, 10)), torus(16))


def _face_derivative_error(n):
    g = torus(n, 2.0)
    x, _ = g.centers()
    f = np.sin(2 * np.pi * x / g.lx)
    # spectral oracle: derivative of the trigonometric interpolant at the faces
    k = fft.fftfreq(n, d=g.dx) * 2 * np.pi
    fh = fft.fft(f, axis=0)
    xf = np.arange(n + 1) * g.dx
    shift = np.exp(1j * np.outer(xf - 0.5 * g.dx, k))
    oracle = np.real(shift @ (1j * k[:, None] * fh) / n)
    return np.max(np.abs(grad(f, g).ux - oracle))


def test_grad_matches_spectral_oracle_second_order():
    e64, e128 = _face_derivative_error(64), _face_derivative_error(128)
    assert e64 <= 1e-2
    assert 3.6 <= e64 / e128 <= 4.4


# --- div ----------------------------------------------------------------

@pytest.mark.parametrize("bc", ["box", "torus"])
def test_div_of_zero(bc):
    g = GridSpec(12, 10, 1.0, 1.0, bc)
    assert np.all(div(MacField.zeros(g), g) == 0)


@pytest.mark.parametrize("bc", ["box", "torus"])
def test_div_grad_is_laplacian(bc, rng):
    g = GridSpec(24, 20, 1.0, 1.5, bc)
    f = smooth_random(g, rng)
    assert np.max(np.abs(div(grad(f, g), g) - laplacian(f, g))) <= 1e-13 * np.max(np.abs(laplacian(f, g)))


@pytest.mark.parametrize("bc", ["box", "torus"])
def test_div_of_streamfunction_curl(bc, rng):
    g = GridSpec(32, 24, 1.0, 0.75, bc)
    psi = rng.standard_normal((33, 25))
    if g.periodic:
        psi[-1] = psi[0]
        psi[:, -1] = psi[:, 0]
    v = curl_of_streamfunction(psi, g)
    assert np.max(np.abs(div(v, g))) <= 1e-13 * v.max_abs() / g.dx


# --- laplacian ----------------------------------------------------------

@pytest.mark.parametrize("bc", ["box", "torus"])
def test_laplacian_of_constant(bc):
    g = GridSpec(16, 16, 1.0, 1.0, bc)
    assert np.all(laplacian(np.full(g.shape, -2.0), g) == 0)


def _laplacian_error(n):
    g = torus(n, 3.0)
    x, _ = g.centers()
    k = 2 * np.pi / g.lx
    f = np.cos(k * x)
    return np.max(np.abs(laplacian(f, g) + k * k * f)) / (k * k)


def test_laplacian_matches_spectral_oracle():
    e64, e128 = _laplacian_error(64), _laplacian_error(128)
    assert e64 <= 4e-3
    assert 3.6 <= e64 / e128 <= 4.4


def test_laplacian_neumann_telescopes():
    g = GridSpec(40, 24, 2.0, 1.0, "box")
    x, _ = g.centers()
    f = np.cos(np.pi * x / g.lx)
    assert abs(integrate(laplacian(f, g), g)) <= 1e-12


@pytest.mark.parametrize("bc", ["box", "torus"])
@given(seed=st.integers(0, 2**32 - 1))
def test_laplacian_summation_by_parts(bc, seed):
    rng = np.random.default_rng(seed)
    g = GridSpec(16, 20, 1.0, 1.3, bc)
    f, h = smooth_random(g, rng), smooth_random(g, rng)
    a = integrate(f * laplacian(h, g), g)
    b = integrate(h * laplacian(f, g), g)
    assert abs(a - b) <= 1e-10 * max(abs(a), abs(b), 1e-300)


@pytest.mark.parametrize("bc", ["box", "torus"])
@given(seed=st.integers(0, 2**32 - 1))
def test_operators_commute_with_mirror(bc, seed):
    rng = np.random.default_rng(seed)
    g = GridSpec(16, 16, 1.0, 1.0, bc)
    f = smooth_random(g, rng)
    assert np.max(np.abs(laplacian(f[::-1], g) - laplacian(f, g)[::-1])) <= 1e-13 * np.max(np.abs(laplacian(f, g)))
    v, vm = grad(f, g), grad(f[::-1], g)
    assert np.max(np.abs(vm.ux + v.ux[::-1])) <= 1e-13 * v.max_abs()
    assert np.max(np.abs(vm.uy - v.uy[::-1])) <= 1e-13 * v.max_abs()


# --- strain rate ----------------------------------------------------------

def test_sym_grad_normsq_zero_velocity():
    g = GridSpec(16, 16)
    law = MaterialLaws(1.0, 2.0, 1.0, 1.0)
    assert np.all(sym_grad_normsq(MacField.zeros(g), law, np.zeros(g.shape), g) == 0)


def test_sym_grad_normsq_rigid_translation():
    g = torus(16)
    u = MacField(np.full((17, 16), 0.3), np.full((16, 17), -1.2))
    law = MaterialLaws(1.0, 2.0, 1.0, 1.0)
    assert np.all(sym_grad_normsq(u, law, np.zeros(g.shape), g) == 0)


def test_sym_grad_normsq_simple_shear():
    g = GridSpec(32, 32, 1.0, 1.0, "box")
    gamma, eta = 0.8, 0.7
    _, yf = g.xfaces()
    u = MacField(gamma * (yf - 0.5), np.zeros((32, 33))).enforce_bc(g)
    law = MaterialLaws(eta, eta, 1.0, 1.0)
    val = sym_grad_normsq(u, law, np.zeros(g.shape), g)
    interior = val[2:-2, 2:-2]
    expected = eta * gamma**2 / 2
    assert np.max(np.abs(interior - expected)) <= 0.05 * expected


def test_strain_rate_symmetric_components():
    g = torus(16)
    rng = np.random.default_rng(0)
    u = MacField(rng.standard_normal((17, 16)), rng.standard_normal((16, 17))).enforce_bc(g)
    d11, d22, d12 = strain_rate(u, g)
    assert d11.shape == d22.shape == d12.shape == g.shape


# --- integrate ------------------------------------------------------------

def test_integrate_unit():
    g = GridSpec(10, 10, 1.0, 1.0)
    assert integrate(np.ones(g.shape), g) == 1.0


def test_integrate_constant():
    g = GridSpec(12, 9, 2.5, 0.4)
    assert integrate(np.full(g.shape, 3.0), g) == pytest.approx(3.0 * 2.5 * 0.4, rel=1e-15)


def test_integrate_matches_naive_sum(rng):
    g = GridSpec(37, 23, 1.3, 0.7)
    f = rng.standard_normal(g.shape)
    naive = 0.0
    for v in f.ravel():
        naive += v
    assert integrate(f, g) == pytest.approx(naive * g.dx * g.dy, rel=1e-13, abs=1e-13)


# --- material laws ----------------------------------------------------------

@given(lo=st.floats(0.01, 5), span=st.floats(0, 5), mlo=st.floats(0.01, 5), mspan=st.floats(0, 5))
def test_material_bounds_hold_everywhere(lo, span, mlo, mspan):
    law = MaterialLaws(lo, lo + span, mlo, mlo + mspan)
    s = np.linspace(-10, 10, 4001)
    eta, m = law.eta(s), law.m(s)
    assert np.all(eta >= law.eta_star) and np.all(eta <= law.eta_upper)
    assert np.all(m >= law.m_star) and np.all(m <= law.m_upper)


def test_potential_derivatives_by_finite_differences():
    s = np.linspace(-2, 2, 801)
    h = 1e-5
    F, dF, ddF = MaterialLaws.F, MaterialLaws.dF, MaterialLaws.ddF
    assert np.max(np.abs((F(s + h) - F(s - h)) / (2 * h) - dF(s))) <= 1e-8
    assert np.max(np.abs((dF(s + h) - dF(s - h)) / (2 * h) - ddF(s))) <= 1e-8
    assert np.all(F(s) >= 0)


def test_potential_values():
    assert MaterialLaws.F(0.0) == 0.25
    assert MaterialLaws.dF(0.5) == -0.375
    assert MaterialLaws.F(1.0) == MaterialLaws.F(-1.0) == 0.0


def test_material_laws_reject_bad_bounds():
    with pytest.raises(ConfigurationError):
        MaterialLaws(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        MaterialLaws(2.0, 1.0, 1.0, 1.0)
