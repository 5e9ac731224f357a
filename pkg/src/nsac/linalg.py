"""Preconditioned conjugate gradients and transform-based Poisson solvers.

All inner products go through ``numpy.sum`` (pairwise summation, fixed
order) so results are bitwise reproducible regardless of BLAS threading.
"""
from __future__ import annotations

import numpy as np
from scipy import fft

from .core import GridSpec
from .errors import SolverError


def _dot(a, b) -> float:
    return float(np.sum(a * b))


def pcg(apply_a, b, x0=None, precond=None, tol=1e-10, maxiter=500, name="cg"):
    """Solve ``A x = b`` for symmetric positive (semi-)definite ``A``.

    Stops when ``||b - A x|| <= tol * ||b||``.  Returns ``(x, iterations)``.
    Raises :class:`SolverError` carrying the final relative residual when
    ``maxiter`` is exhausted.
    """
    bnorm = np.sqrt(_dot(b, b))
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float, copy=True)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    r = b - apply_a(x)
    rnorm = np.sqrt(_dot(r, r))
    if rnorm <= tol * bnorm:
        return x, 0
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = _dot(r, z)
    for k in range(1, maxiter + 1):
        ap = apply_a(p)
        pap = _dot(p, ap)
        if pap <= 0.0:
            raise SolverError(f"{name}: operator not positive definite (p.Ap={pap:.3g})",
                              residual=rnorm / bnorm, iterations=k)
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rnorm = np.sqrt(_dot(r, r))
        if rnorm <= tol * bnorm:
            return x, k
        z = precond(r) if precond is not None else r
        rz_new = _dot(r, z)
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise SolverError(f"{name}: no convergence in {maxiter} iterations "
                      f"(relative residual {rnorm / bnorm:.3e})",
                      residual=rnorm / bnorm, iterations=maxiter)


def _eig_1d(n: int, h: float, periodic: bool) -> np.ndarray:
    k = np.arange(n)
    if periodic:
        return (2.0 - 2.0 * np.cos(2.0 * np.pi * k / n)) / h**2
    return (2.0 - 2.0 * np.cos(np.pi * k / n)) / h**2


class CellPoissonSolver:
    """Direct solver for ``(shift - scale * Lap_h) x = rhs`` at cell centres.

    DCT-II diagonalises the Neumann five-point Laplacian, the FFT the periodic
    one.  With ``shift == 0`` the constant mode is set to zero.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        lx = _eig_1d(grid.nx, grid.dx, grid.periodic)
        ly = _eig_1d(grid.ny, grid.dy, grid.periodic)
        if grid.periodic:
            ly = ly[: grid.ny // 2 + 1]
        self.eig = lx[:, None] + ly[None, :]

    def _forward(self, f):
        if self.grid.periodic:
            return fft.rfft2(f)
        return fft.dctn(f, type=2, norm="ortho")

    def _inverse(self, fh):
        if self.grid.periodic:
            return fft.irfft2(fh, self.grid.shape)
        return fft.idctn(fh, type=2, norm="ortho")

    def solve(self, rhs, shift: float = 0.0, scale: float = 1.0):
        denom = shift + scale * self.eig
        fh = self._forward(rhs)
        if shift == 0.0:
            denom = denom.copy()
            denom[0, 0] = 1.0
            fh[0, 0] = 0.0
        return self._inverse(fh / denom)


class NodePoissonSolver:
    """Direct solver for ``-Lap_h psi = w`` on grid nodes.

    Box: homogeneous Dirichlet data on the boundary nodes (DST-I on the
    interior).  Torus: periodic nodes, mean-zero solution.
    Arrays in and out have the full node shape ``(nx+1, ny+1)``.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        nx, ny = grid.shape
        if grid.periodic:
            lx = _eig_1d(nx, grid.dx, True)
            ly = _eig_1d(ny, grid.dy, True)
        else:
            kx = np.arange(1, nx)
            ky = np.arange(1, ny)
            lx = (2.0 - 2.0 * np.cos(np.pi * kx / nx)) / grid.dx**2
            ly = (2.0 - 2.0 * np.cos(np.pi * ky / ny)) / grid.dy**2
        self.eig = lx[:, None] + ly[None, :]

    def solve(self, w):
        nx, ny = self.grid.shape
        out = np.zeros((nx + 1, ny + 1))
        if self.grid.periodic:
            wh = fft.fft2(w[:nx, :ny])
            denom = self.eig.copy()
            denom[0, 0] = 1.0
            wh[0, 0] = 0.0
            psi = fft.ifft2(wh / denom).real
            out[:nx, :ny] = psi
            out[nx, :ny] = psi[0]
            out[:, ny] = out[:, 0]
        else:
            wh = fft.dstn(w[1:nx, 1:ny], type=1, norm="ortho")
            out[1:nx, 1:ny] = fft.idstn(wh / self.eig, type=1, norm="ortho")
        return out
