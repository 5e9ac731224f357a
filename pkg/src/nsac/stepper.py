"""Time stepping: step-size control, one coupled step, and full runs.

A step with the default ordering performs

1. density transport by the (stream-function filtered) old velocity,
2. the phase update with the old velocity and the new density,
3. the chemical potential,
4. the momentum predictor with the new density and phase,
5. the pressure projection.

Steps are transactional: inputs are never modified, so a failed step leaves
the caller's state intact.
"""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .config import Config, Numerics, serialize
from .core import GridSpec, MaterialLaws, State, div
from .diagnostics import DiagRecord, budget_rho_chi, diag_record, energy_budget
from .errors import NSACError, StepSizeError
from .initial import initial_state
from .io import write_csv, write_snapshot
from .momentum import predict_velocity, pressure_project
from .phase import compute_mu, phase_step
from .transport import advect_density, inflow_courant, solenoidal_part

VISCOUS_EXPLICIT_FACTOR = 1.0


@dataclass
class StepReport:
    dt_used: float
    cg_iters: dict
    rho_min: float
    rho_max: float
    chi_min: float
    chi_max: float
    div_inf: float


def cfl_dt(state: State, law: MaterialLaws, cfl: float, grid: GridSpec,
           dt_max: float = math.inf, rho_star: float | None = None,
           max_courant: float = 0.75) -> float:
    """Largest stable step.

    ``min(cfl * min(advective, phase, viscous limits), dt_max)``.  The
    advective limit is ``1 / (max|ux|/dx + max|uy|/dy)``; the phase and
    viscous limits use the worst-case coefficients ``rho_star`` (default:
    current minimum density), ``m_upper`` and ``eta_upper``.  The result is
    additionally capped so the density transport's inflow Courant bound
    ``max_courant`` holds.
    """
    if not 0 < cfl <= 1:
        raise StepSizeError(f"cfl must lie in (0, 1], got {cfl}")
    rho_star = float(np.min(state.rho)) if rho_star is None else rho_star
    h2 = min(grid.dx, grid.dy) ** 2
    rate = float(np.max(np.abs(state.u.ux))) / grid.dx + float(np.max(np.abs(state.u.uy))) / grid.dy
    adv = 1.0 / rate if rate > 0 else math.inf
    phase = h2 * rho_star**2 / (4.0 * law.m_upper)
    visc = rho_star * h2 / (4.0 * law.eta_upper) * VISCOUS_EXPLICIT_FACTOR
    dt = min(cfl * min(adv, phase, visc), dt_max)
    inflow = float(np.max(inflow_courant(state.u, 1.0, grid)))
    if inflow > 0:
        dt = min(dt, 0.999 * max_courant / inflow)
    return dt


def _report(state: State, dt: float, iters: dict, grid: GridSpec) -> StepReport:
    return StepReport(dt, iters, float(np.min(state.rho)), float(np.max(state.rho)),
                      float(np.min(state.chi)), float(np.max(state.chi)),
                      float(np.max(np.abs(div(state.u, grid)))))


def step(state: State, law: MaterialLaws, dt: float, grid: GridSpec,
         numerics: Numerics | None = None) -> tuple[State, StepReport]:
    """Advance ``state`` by ``dt``; returns the new state and a report."""
    num = numerics or Numerics()
    if not dt > 0:
        raise StepSizeError(f"time step must be positive, got {dt}", dt=dt)
    iters: dict = {}
    tol, maxit = num.cg_tol, num.cg_maxiter

    def transport(rho, u):
        return advect_density(rho, solenoidal_part(u, grid), dt, grid,
                              limiter=num.limiter, max_courant=num.max_courant)

    def phase(rho, u, chi):
        st: dict = {}
        out = phase_step(rho, u, chi, law, dt, grid, stabilization=num.stabilization,
                         tol=tol, maxiter=maxit, stats=st)
        iters["phase"] = st["cg_iters"]
        return out

    def momentum(rho, chi):
        st: dict = {}
        pre = State(state.t, rho, state.u, state.p, chi)
        ustar = predict_velocity(pre, law, dt, grid, tol=tol, maxiter=maxit, stats=st)
        u, p = pressure_project(rho, ustar, dt, grid, p_old=state.p, tol=num.pressure_tol,
                                maxiter=maxit, stats=st)
        iters["momentum"] = st["cg_iters_u"]
        iters["pressure"] = st["cg_iters_p"]
        return u, p

    if num.order == "rho-chi-u":
        rho = transport(state.rho, state.u)
        chi = phase(rho, state.u, state.chi)
        u, p = momentum(rho, chi)
    else:
        u, p = momentum(state.rho, state.chi)
        rho = transport(state.rho, u)
        chi = phase(rho, u, state.chi)
    mu = compute_mu(rho, chi, law, grid)
    new = State(state.t + dt, rho, u, p, chi, mu)
    return new, _report(new, dt, iters, grid)


@dataclass
class RunOutput:
    records: list
    state: State
    csv_path: Path | None = None
    snapshot_paths: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    steps: int = 0


SNAPSHOT_FIELDS = ("rho", "chi", "p", "mu", "ux_c", "uy_c")


def write_state_snapshots(state: State, grid: GridSpec, outdir: Path, step_no: int) -> list:
    uc, vc = state.u.centered()
    data = {"rho": state.rho, "chi": state.chi, "p": state.p, "mu": state.mu,
            "ux_c": uc, "uy_c": vc}
    paths = []
    for name in SNAPSHOT_FIELDS:
        if data[name] is None:
            continue
        path = outdir / f"snap_{step_no:06d}_{name}.txt"
        write_snapshot(data[name], path, name, grid.lx, grid.ly, state.t)
        paths.append(path)
    return paths


def _thread_cap():
    n = os.environ.get("NSAC_THREADS")
    return int(n) if n and n.strip().isdigit() and int(n) > 0 else None


def _summarize(out: RunOutput, cfg: Config):
    recs = out.records
    s = out.summary
    s["steps"] = out.steps
    s["t_final"] = out.state.t
    if recs:
        s["final"] = asdict(recs[-1])
    if len(recs) >= 2:
        r = energy_budget(recs)
        s["energy_residual_max"] = float(np.max(r))
        s["energy_residual_absmax"] = float(np.max(np.abs(r)))
        s["rhochi_residual_absmax"] = float(np.max(np.abs(budget_rho_chi(recs))))
    s["metadata"] = serialize(cfg)


def _finish(out: RunOutput, cfg: Config, outdir: Path | None):
    _summarize(out, cfg)
    if outdir is not None:
        out.csv_path = write_csv(out.records, outdir / "diagnostics.csv")
        meta = [serialize(cfg).rstrip("\n"),
                "# time derivatives in Ecal/Dcal/H_higher: backward differences of consecutive steps",
                "# pressure column p: augmented pressure (includes |grad chi|^2/2), zero mean"]
        if "failure" in out.summary:
            meta.append(f"# failure: {out.summary['failure']}")
        (outdir / "metadata.txt").write_text("\n".join(meta) + "\n", encoding="ascii")


def run(config: Config, state0: State | None = None, keep_states: bool = False,
        on_step=None) -> RunOutput:
    """Integrate from ``t = 0`` to ``time.t_end``.

    A diagnostics record is produced at step 0 and every ``diag_every``
    steps; snapshots at step 0 and every ``snap_every`` steps when
    ``snap_every > 0``.  Files are written only when ``output.outdir`` is
    set.  ``on_step(state, report)`` is called after every accepted step.
    On failure the partial output is flushed, ``summary["failure"]`` is set
    and the error is re-raised with the output attached as ``partial_output``.
    """
    grid = config.grid_spec
    law = config.law
    num = config.numerics
    out_cfg = config.output
    outdir = Path(out_cfg.outdir) if out_cfg.outdir else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    with threadpool_limits(limits=_thread_cap()):
        state = state0.copy() if state0 is not None else initial_state(config)
        if state.mu is None:
            state.mu = compute_mu(state.rho, state.chi, law, grid)
        rho_star = float(np.min(state.rho))
        out = RunOutput([diag_record(state, law, grid, decay=out_cfg.decay_functionals)], state)
        if keep_states:
            out.summary["states"] = [state]
        if outdir is not None and out_cfg.snap_every > 0:
            out.snapshot_paths += write_state_snapshots(state, grid, outdir, 0)
        t_end = config.time.t_end
        n = 0
        try:
            while state.t < t_end * (1.0 - 1e-12):
                if config.time.dt > 0:
                    dt = config.time.dt
                else:
                    dt = cfl_dt(state, law, config.time.cfl, grid, config.time.dt_max,
                                rho_star=rho_star, max_courant=num.max_courant)
                remaining = t_end - state.t
                if dt >= remaining * (1.0 - 1e-9):
                    dt = remaining
                prev = state
                state, rep = step(prev, law, dt, grid, num)
                n += 1
                out.reports.append(rep)
                if on_step is not None:
                    on_step(state, rep)
                if n % out_cfg.diag_every == 0:
                    out.records.append(diag_record(state, law, grid, prev, dt,
                                                   decay=out_cfg.decay_functionals))
                    if keep_states:
                        out.summary["states"].append(state)
                if outdir is not None and out_cfg.snap_every > 0 and n % out_cfg.snap_every == 0:
                    out.snapshot_paths += write_state_snapshots(state, grid, outdir, n)
        except NSACError as exc:
            out.state, out.steps = state, n
            out.summary["failure"] = f"{type(exc).__name__}: {exc}"
            _finish(out, config, outdir)
            exc.partial_output = out
            raise
        out.state, out.steps = state, n
        _finish(out, config, outdir)
    return out

