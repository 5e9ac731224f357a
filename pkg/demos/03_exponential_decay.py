"""Small data relax exponentially to the pure phase at rest.

A small dent in the phase field and a faint vortex sit in a no-slip box.
The decay quantity ``||u||^2 + ||chi^2 - 1||^2 + ||grad chi||^2`` is fitted by
a straight line in log scale on a window that skips the initial transient.
The weighted energy ``Acal`` is checked to be nonincreasing.

Usage: python3 demos/03_exponential_decay.py [output_root]
"""
import numpy as np

from _common import output_dir, show_checks
from nsac import presets
from nsac.experiments import decay_experiment

out, s = decay_experiment(presets.decay(), output_dir("decay"))
fit = s["decay_fit"]
print(f"initial data size {s['initial_size']:.3e}")
print(f"ln q(t) ~ {fit['log_amplitude']:.3f} - {fit['sigma']:.4f} t on "
      f"[{fit['window'][0]:.3g}, {fit['window'][1]:.3g}], r^2 = {fit['r_squared']:.5f}")
t = np.array([r.t for r in out.records])
q = np.array([r.decay_quantity for r in out.records])
for tt in (0, 1, 2, 4, 6, 8):
    k = int(np.argmin(np.abs(t - tt)))
    print(f"  t = {t[k]:5.2f}   q = {q[k]:.3e}   fit = {np.exp(fit['log_amplitude'] - fit['sigma'] * t[k]):.3e}")
show_checks(s["checks"])
