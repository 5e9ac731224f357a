"""Fast built-in invariant suite behind ``nsac check``.

Every check is a small deterministic computation finishing in well under a
second; the full suite runs in a few seconds.
"""
from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from .config import parse_config, serialize
from .core import GridSpec, MacField, MaterialLaws, State, div, laplacian
from .diagnostics import diag_record
from .galerkin import ModeBasis, assemble_A, build_modes
from .initial import density_field, phase_field, velocity_field
from .io import read_csv, read_snapshot, write_csv, write_snapshot
from .momentum import pressure_project
from .phase import compute_mu
from .stepper import step
from .transport import advect_density, solenoidal_part

LAW = MaterialLaws(0.25, 0.5, 0.25, 0.5)


def _chemical_identity():
    g = GridSpec(32, 32, 4.0, 4.0, "box")
    rho = density_field("blob 1 3", g)
    chi = phase_field("front 2 0.5 0.5", g)
    mu = compute_mu(rho, chi, LAW, g)
    res = np.max(np.abs(rho * mu + laplacian(chi, g) - rho * LAW.dF(chi)))
    scale = np.max(np.abs(laplacian(chi, g))) + np.max(np.abs(rho * LAW.dF(chi)))
    return res <= 1e-12 * scale, f"residual / scale = {res / scale:.2e}"


def _projection():
    worst = 0.0
    for bc in ("box", "torus"):
        g = GridSpec(32, 24, 2.0, 1.5, bc)
        rng = np.random.default_rng(3)
        u = MacField(rng.standard_normal((33, 24)), rng.standard_normal((32, 25))).enforce_bc(g)
        rho = density_field("blob 1 3", g) if bc == "box" else density_field("sine 1 3", g)
        v, _ = pressure_project(rho, u, 0.01, g)
        worst = max(worst, float(np.max(np.abs(div(v, g)))) * g.dx / max(u.max_abs(), 1.0))
    return worst <= 1e-8, f"scaled |div u| = {worst:.2e}"


def _potential_derivatives():
    s = np.linspace(-1.5, 1.5, 61)
    h = 1e-5
    e1 = np.max(np.abs((LAW.F(s + h) - LAW.F(s - h)) / (2 * h) - LAW.dF(s)))
    e2 = np.max(np.abs((LAW.dF(s + h) - LAW.dF(s - h)) / (2 * h) - LAW.ddF(s)))
    return max(e1, e2) <= 1e-8, f"finite-difference error = {max(e1, e2):.2e}"


def _transport_bounds():
    g = GridSpec(32, 32, 1.0, 1.0, "torus")
    rho = density_field("blob 1 3 0.5 0.5 0.15", g)
    u = velocity_field("vortex 0.1", g)
    r = rho
    for _ in range(20):
        r = advect_density(r, solenoidal_part(u, g), 0.02, g)
    drift = max(rho.min() - r.min(), r.max() - rho.max(), 0.0)
    mass = abs(r.sum() / rho.sum() - 1.0)
    return drift <= 1e-12 and mass <= 1e-12, f"extrema drift {drift:.1e}, mass drift {mass:.1e}"


def _equilibrium():
    g = GridSpec(16, 16, 1.0, 1.0, "box")
    s = State(0.0, np.full(g.shape, 2.0), MacField.zeros(g), np.zeros(g.shape), np.ones(g.shape))
    new, _ = step(s, LAW, 1e-3, g)
    change = max(np.max(np.abs(new.rho - s.rho)), np.max(np.abs(new.chi - s.chi)),
                 new.u.max_abs(), np.max(np.abs(new.p)))
    return change <= 1e-10, f"largest change = {change:.1e}"


def _gram():
    g = GridSpec(64, 64, 2 * np.pi, 2 * np.pi, "torus")
    basis = ModeBasis(build_modes(4), g)
    err = np.max(np.abs(assemble_A(np.ones(g.shape), basis) - np.eye(basis.size)))
    return err <= 1e-10, f"|A(1) - I| = {err:.1e}"


def _formats():
    rng = np.random.default_rng(0)
    g = GridSpec(8, 10, 1.0, 1.0, "box")
    s = State(0.0, np.ones(g.shape), MacField.zeros(g), np.zeros(g.shape), rng.uniform(-1, 1, g.shape))
    recs = [diag_record(s, LAW, g)]
    with tempfile.TemporaryDirectory() as d:
        back = read_csv(write_csv(recs, Path(d) / "d.csv"))
        snap = read_snapshot(write_snapshot(s.chi, Path(d) / "s.txt", "chi", 1.0, 1.0))
    ok_csv = all(np.array_equal(a.values(), b.values(), equal_nan=True) for a, b in zip(recs, back))
    ok_snap = np.array_equal(snap.values, s.chi)
    cfg = parse_config("grid.nx = 8\ngrid.ny = 8\ntime.t_end = 1\n")
    ok_cfg = parse_config(serialize(cfg)) == cfg
    return ok_csv and ok_snap and ok_cfg, f"csv {ok_csv}, snapshot {ok_snap}, config {ok_cfg}"


CHECKS = (
    ("chemical potential identity", _chemical_identity),
    ("projection divergence", _projection),
    ("potential derivatives", _potential_derivatives),
    ("transport bounds and mass", _transport_bounds),
    ("equilibrium fixed point", _equilibrium),
    ("Galerkin mass matrix", _gram),
    ("file round trips", _formats),
)


def run_checks():
    """Run every check; returns ``(name, passed, detail)`` triples."""
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
