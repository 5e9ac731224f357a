"""ASCII output formats: diagnostics CSV, field snapshots, gnuplot scripts.

All floating point values are written with 17 significant digits, which is
enough for every double to survive a write/read round trip unchanged.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import DiagRecord, budget_rho_chi, energy_budget
from .errors import ConfigurationError

CSV_HEADER = ",".join(DiagRecord.columns())
SNAPSHOT_MAGIC = "NSACSNAP"
SNAPSHOT_VERSION = 1


def fmt17(x: float) -> str:
    return "%.17g" % x


class FormatError(ConfigurationError):
    """Malformed or truncated input file."""


def write_csv(records, path) -> Path:
    path = Path(path)
    lines = [CSV_HEADER]
    lines += [",".join(fmt17(v) for v in r.values()) for r in records]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def read_csv(path) -> list[DiagRecord]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="ascii").splitlines()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != CSV_HEADER:
        raise FormatError(f"{path}: unexpected CSV header")
    ncol = len(DiagRecord.columns())
    out = []
    for k, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        toks = line.split(",")
        if len(toks) != ncol:
            raise FormatError(f"{path}:{k}: expected {ncol} columns, got {len(toks)}")
        out.append(DiagRecord(*(float(t) for t in toks)))
    return out


@dataclass
class Snapshot:
    name: str
    values: np.ndarray
    lx: float
    ly: float
    t: float

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]


def write_snapshot(values, path, name: str, lx: float, ly: float, t: float = 0.0) -> Path:
    """Write a cell-centred ``(nx, ny)`` field; values in C order (``j`` fastest)."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ConfigurationError("snapshot field must be two-dimensional")
    if not name or any(c.isspace() for c in name):
        raise ConfigurationError("snapshot field name must be a non-empty token")
    nx, ny = values.shape
    path = Path(path)
    with path.open("w", encoding="ascii") as fh:
        fh.write(f"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION} {name}\n")
        fh.write(f"{nx} {ny} {fmt17(lx)} {fmt17(ly)} {fmt17(t)}\n")
        for row in values:
            fh.write(" ".join(fmt17(v) for v in row))
            fh.write("\n")
    return path


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    lines = text.split("\n", 2)
    if len(lines) < 2:
        raise FormatError(f"{path}: truncated header")
    head = lines[0].split()
    if len(head) != 3 or head[0] != SNAPSHOT_MAGIC:
        raise FormatError(f"{path}: not a snapshot file")
    if head[1] != str(SNAPSHOT_VERSION):
        raise FormatError(f"{path}: unsupported snapshot version {head[1]}")
    dims = lines[1].split()
    if len(dims) != 5:
        raise FormatError(f"{path}: malformed dimension line")
    try:
        nx, ny = int(dims[0]), int(dims[1])
        lx, ly, t = (float(x) for x in dims[2:])
        toks = lines[2].split() if len(lines) > 2 else []
        vals = np.array([float(x) for x in toks])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if vals.size != nx * ny:
        raise FormatError(f"{path}: expected {nx * ny} values, found {vals.size}")
    return Snapshot(head[2], vals.reshape(nx, ny), lx, ly, t)


def write_budget_csv(records, path) -> Path:
    """Sidecar with the energy and rho-chi budget residuals per record."""
    path = Path(path)
    lines = ["t,energy_residual,rhochi_residual,decay_quantity"]
    if len(records) >= 2:
        re_, rc = energy_budget(records), budget_rho_chi(records)
    else:
        re_ = rc = [0.0] * len(records)
    for r, a, b in zip(records, re_, rc):
        lines.append(",".join(fmt17(v) for v in (r.t, a, b, r.decay_quantity)))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def emit_gnuplot(run_output) -> Path:
    """Write ``plot.gp`` next to the run CSV; returns the script path.

    Panels: energy and dissipation, budget residuals, semilog decay
    quantity (with the fit window when the summary holds a decay fit).
    """
    csv_path = Path(run_output.csv_path) if run_output.csv_path else None
    if csv_path is None or not csv_path.exists():
        raise FormatError("emit_gnuplot needs an existing diagnostics CSV")
    outdir = csv_path.parent
    budget = write_budget_csv(run_output.records, outdir / "budget.csv")
    csv_name = os.path.relpath(csv_path, outdir)
    budget_name = os.path.relpath(budget, outdir)
    fit = run_output.summary.get("decay_fit")
    lines = [
        "# diagnostics plot; run with: gnuplot plot.gp",
        "set datafile separator ','",
        "set terminal pngcairo size 1500,450",
        "set output 'diagnostics.png'",
        "set multiplot layout 1,3",
        "set key top right",
        "set xlabel 't'",
        "set title 'energy and dissipation'",
        f"plot '{csv_name}' using 1:2 with lines title 'E0', \\",
        f"     '' using 1:3 with lines title 'viscous', \\",
        f"     '' using 1:4 with lines title 'chemical'",
        "set title 'budget residuals'",
        f"plot '{budget_name}' using 1:2 with lines title 'energy', \\",
        f"     '' using 1:3 with lines title 'rho chi'",
        "set title 'decay quantity'",
        "set logscale y",
    ]
    if fit is not None:
        lo, hi = fit["window"]
        sigma = fit["sigma"]
        lines.append(f"set object 1 rect from {fmt17(lo)}, graph 0 to {fmt17(hi)}, graph 1 "
                     "fillstyle transparent solid 0.15 noborder")
        lines.append(f"set label 1 'fit window [{lo:g}, {hi:g}], sigma = {sigma:.6g}' "
                     "at graph 0.05, graph 0.05")
        lines.append(f"fit_a = {fmt17(fit['log_amplitude'])}")
        lines.append(f"fit_s = {fmt17(sigma)}")
        lines.append(f"plot '{budget_name}' using 1:4 with lines title 'decay quantity', \\")
        lines.append("     exp(fit_a - fit_s * x) with lines dashtype 2 title 'fit'")
    else:
        lines.append(f"plot '{budget_name}' using 1:4 with lines title 'decay quantity'")
    lines += ["unset logscale y", "unset multiplot", ""]
    script = outdir / "plot.gp"
    script.write_text("\n".join(lines), encoding="ascii")
    return script

