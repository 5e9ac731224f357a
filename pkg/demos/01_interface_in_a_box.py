"""A heavy blob meets a tanh interface in a no-slip box.

The fluid starts at rest. Surface tension drives a weak flow while the phase
field relaxes, and the total energy should fall by at least the accumulated
viscous plus chemical dissipation. The budget residual
``E0(t) + int_0^t dissipation - E0(0)`` is printed at a few times, along with
the density extrema that transport must not exceed.

Usage: python3 demos/01_interface_in_a_box.py [output_root]
"""
import numpy as np

from _common import output_dir, show_checks
from nsac import presets
from nsac.diagnostics import energy_budget
from nsac.experiments import run_experiment

cfg = presets.reference(n=64, t_end=2.0)
out, summary = run_experiment(cfg, output_dir("interface_in_a_box"))
recs = out.records
r = energy_budget(recs)
print(f"{out.steps} steps to t = {out.state.t:g}")
print("      t          E0     residual    rho range")
for k in np.linspace(0, len(recs) - 1, 6).astype(int):
    rec = recs[k]
    print(f"{rec.t:7.3f}  {rec.E0:10.6f}  {r[k]:+.3e}  [{rec.rho_min:.6f}, {rec.rho_max:.6f}]")
show_checks(summary["checks"])
print(f"artefacts in {out.csv_path.parent} (gnuplot plot.gp renders them)")
