import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nsac import presets
from nsac.cli import EXIT_CHECK, EXIT_INVALID, EXIT_OK, main
from nsac.config import Config, load_config, parse_config, serialize
from nsac.core import GridSpec, MacField, MaterialLaws, State
from nsac.diagnostics import DiagRecord, diag_record
from nsac.errors import ConfigurationError
from nsac.experiments import decay_experiment, run_experiment
from nsac.io import (CSV_HEADER, FormatError, emit_gnuplot, read_csv, read_snapshot, write_csv,
                     write_snapshot)
from nsac.stepper import RunOutput, run

MINIMAL = "grid.nx = 16\ngrid.ny = 16\ntime.t_end = 0.1\n"


# --- config ------------------------------------------------------------------

def test_minimal_config_gets_defaults_and_echoes_them(tmp_path):
    cfg = parse_config(MINIMAL)
    assert cfg.physics == Config().physics and cfg.numerics.cg_tol == 1e-10
    assert cfg.numerics.stabilization == 2.0
    text = serialize(cfg)
    assert "numerics.cg_tol = 1e-10" in text and "physics.rho_init = const 1" in text
    out = run(cfg.with_values(output__outdir=str(tmp_path), time__t_end=0.0))
    meta = (tmp_path / "metadata.txt").read_text()
    assert "numerics.stabilization = 2.0" in meta
    assert out.summary["metadata"] == text.replace("time.t_end = 0.1", "time.t_end = 0.0").replace(
        f"output.outdir = \n", f"output.outdir = {tmp_path}\n")


def test_negative_mobility_names_the_key():
    with pytest.raises(ConfigurationError, match=r"physics\.m_star"):
        parse_config(MINIMAL + "physics.m_star = -1\n")


@pytest.mark.parametrize("text, fragment", [
    ("grid.nx = 16\ntime.t_end = 1\n", "grid.ny"),
    (MINIMAL + "grid.nz = 3\n", "line 4"),
    (MINIMAL + "physics eta_star 1\n", "line 4"),
    (MINIMAL + "time.cfl = fast\n", "time.cfl"),
    (MINIMAL + "numerics.limiter = superbee\n", "numerics.limiter"),
    (MINIMAL + "grid.nx = 32\n", "duplicate"),
])
def test_config_errors(text, fragment):
    with pytest.raises(ConfigurationError, match=fragment):
        parse_config(text)


def test_comments_are_ignored():
    cfg = parse_config("# header\n" + MINIMAL.replace("= 16\n", "= 16   # cells\n", 1))
    assert cfg.grid.nx == 16


@given(nx=st.integers(8, 300), lx=st.floats(1e-3, 1e3), eta=st.floats(1e-3, 10.0),
       t_end=st.floats(0, 1e3), bc=st.sampled_from(["box", "torus"]),
       cfl=st.floats(1e-3, 1.0), delta=st.floats(1e-9, 0.5))
def test_config_round_trip(nx, lx, eta, t_end, bc, cfl, delta):
    cfg = Config().with_values(grid__nx=nx, grid__ny=nx + 1, grid__lx=lx, grid__bc=bc,
                               physics__eta_star=eta, physics__eta_upper=2 * eta,
                               time__t_end=t_end, time__cfl=cfl, experiment__delta=delta)
    assert parse_config(serialize(cfg)) == cfg


def test_load_missing_config(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.cfg")


# --- CSV ---------------------------------------------------------------------

def test_csv_header_schema():
    assert CSV_HEADER == ("t,E0,visc_diss,chem_diss,mass_rho,mass_rhochi,int_m_mu,rho_min,rho_max,"
                          "chi_min,chi_max,div_inf,u_l2sq,gradchi_l2sq,chi2m1_l2sq,Ecal,Dcal,Acal,"
                          "H_higher")


def test_empty_csv_is_header_only(tmp_path):
    p = write_csv([], tmp_path / "d.csv")
    assert p.read_text() == CSV_HEADER + "\n"
    assert read_csv(p) == []


def _random_record(rng):
    vals = rng.standard_normal(len(DiagRecord.columns())) * 10.0 ** rng.integers(-300, 300, 19)
    return DiagRecord(*vals)


def test_csv_round_trip_bitwise(tmp_path, rng):
    recs = [_random_record(rng) for _ in range(20)]
    recs.append(DiagRecord(*([math.nan] * 19)))
    back = read_csv(write_csv(recs, tmp_path / "d.csv"))
    for a, b in zip(recs, back):
        assert np.array_equal(np.array(a.values()), np.array(b.values()), equal_nan=True)


def test_tenth_survives_round_trip(tmp_path):
    rec = DiagRecord(*([0.1] * 19))
    text = write_csv([rec], tmp_path / "d.csv").read_text().splitlines()[1]
    token = text.split(",")[0]
    assert float(token) == 0.1 and np.float64(token).tobytes() == np.float64(0.1).tobytes()
    assert read_csv(tmp_path / "d.csv")[0].t == 0.1


def test_csv_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,E0\n1,2\n")
    with pytest.raises(FormatError):
        read_csv(p)


# --- snapshots ---------------------------------------------------------------

def test_constant_snapshot_round_trip(tmp_path):
    f = np.full((8, 5), 0.7)
    s = read_snapshot(write_snapshot(f, tmp_path / "c.txt", "chi", 2.0, 1.0, 0.5))
    assert np.array_equal(s.values, f) and (s.name, s.lx, s.ly, s.t) == ("chi", 2.0, 1.0, 0.5)
    head = (tmp_path / "c.txt").read_text().splitlines()[:2]
    assert head == ["NSACSNAP 1 chi", "8 5 2 1 0.5"]


def test_truncated_snapshot(tmp_path):
    p = write_snapshot(np.ones((8, 8)), tmp_path / "t.txt", "rho", 1.0, 1.0)
    p.write_text(p.read_text()[:-40])
    with pytest.raises(FormatError, match="expected 64"):
        read_snapshot(p)


def test_snapshot_bad_magic(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("NOTSNAP 1 rho\n1 1 1 1 0\n1\n")
    with pytest.raises(FormatError):
        read_snapshot(p)
    p.write_text("NSACSNAP 2 rho\n1 1 1 1 0\n1\n")
    with pytest.raises(FormatError, match="version"):
        read_snapshot(p)


@given(seed=st.integers(0, 2**32 - 1), nx=st.integers(1, 12), ny=st.integers(1, 12))
def test_random_snapshot_round_trip(tmp_path_factory, seed, nx, ny):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((nx, ny)) * 10.0 ** rng.integers(-200, 200, (nx, ny))
    d = tmp_path_factory.mktemp("snap")
    s = read_snapshot(write_snapshot(f, d / "r.txt", "p", 1.0, 1.0))
    assert s.values.tobytes() == f.tobytes()


# --- plotting scripts --------------------------------------------------------

def _short_run(tmp_path):
    cfg = parse_config(MINIMAL + "physics.chi_init = front 0.5\nphysics.rho_init = blob 1 2\n")
    return run(cfg.with_values(output__outdir=str(tmp_path)))


def test_gnuplot_script_references_csv(tmp_path):
    out = _short_run(tmp_path)
    script = emit_gnuplot(out)
    text = script.read_text()
    assert script.exists() and "'diagnostics.csv'" in text
    assert (script.parent / "diagnostics.csv").exists()
    assert "energy and dissipation" in text and "budget residuals" in text and "set logscale y" in text


def test_gnuplot_reemission_is_byte_identical(tmp_path):
    out = _short_run(tmp_path)
    first = emit_gnuplot(out).read_bytes()
    assert emit_gnuplot(out).read_bytes() == first


def test_gnuplot_needs_csv(tmp_path):
    g = GridSpec(8, 8)
    s = State(0.0, np.ones(g.shape), MacField.zeros(g), np.zeros(g.shape), np.ones(g.shape))
    with pytest.raises(FormatError):
        emit_gnuplot(RunOutput([], s, tmp_path / "missing.csv"))


def test_decay_script_annotates_fit_window(tmp_path):
    cfg = presets.decay().with_values(time__t_end=2.0, experiment__fit_lo=0.5,
                                      experiment__fit_hi=1.5)
    out, s = decay_experiment(cfg, tmp_path)
    text = (tmp_path / "plot.gp").read_text()
    lo, hi = s["decay_fit"]["window"]
    assert 0.5 <= lo < hi <= 1.5
    assert f"fit window [{lo:g}, {hi:g}]" in text and "set logscale y" in text
    assert f"{s['decay_fit']['sigma']:.6g}" in text


def test_run_csv_row_count(tmp_path):
    cfg = parse_config(MINIMAL + "output.diag_every = 3\ntime.dt = 0.01\n")
    out = run(cfg.with_values(output__outdir=str(tmp_path)))
    assert len(read_csv(out.csv_path)) == 1 + out.steps // 3


# --- command line ------------------------------------------------------------

def test_check_subcommand(capsys):
    assert main(["check"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 7 and all(line.startswith("PASS") for line in lines)


def test_missing_config_path(capsys):
    assert main(["run", "/nonexistent/path.cfg"]) == EXIT_INVALID
    assert "not found" in capsys.readouterr().err


def test_invalid_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text(MINIMAL + "physics.m_star = -1\n")
    assert main(["run", str(p)]) == EXIT_INVALID
    assert "physics.m_star" in capsys.readouterr().err


def test_unknown_subcommand():
    assert main(["frobnicate"]) == EXIT_INVALID


def test_run_subcommand(tmp_path, capsys):
    p = tmp_path / "r.cfg"
    p.write_text(presets.reference_text(n=32, t_end=0.05))
    assert main(["run", str(p), "--outdir", str(tmp_path / "out")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    for name in ("diagnostics.csv", "budget.csv", "plot.gp", "metadata.txt"):
        assert (tmp_path / "out" / name).exists()


def test_failed_check_exit_code(tmp_path, capsys):
    # the decay window extends past the final time, so the fit checks cannot pass
    p = tmp_path / "d.cfg"
    p.write_text(presets.decay_text().replace("time.t_end = 8", "time.t_end = 1.5"))
    code = main(["decay", str(p)])
    assert code == EXIT_CHECK
    assert "FAIL" in capsys.readouterr().out


def test_preset_subcommand(capsys):
    assert main(["preset", "reference"]) == EXIT_OK
    assert parse_config(capsys.readouterr().out).grid.bc == "box"


def test_galerkin_requires_fixed_step(tmp_path):
    p = tmp_path / "g.cfg"
    p.write_text(presets.galerkin_text().replace("time.dt = 0.001", "time.dt = 0"))
    assert main(["galerkin", str(p)]) == EXIT_INVALID


@pytest.mark.parametrize("name", sorted(presets.PRESETS))
def test_shipped_configs_match_presets(name):
    path = Path(__file__).parents[1] / "demos" / "configs" / f"{name}.cfg"
    assert load_config(path) == parse_config(presets.PRESETS[name]())
