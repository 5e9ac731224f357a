"""Nearby initial data stay nearby.

Two extra runs start from the reference data with the phase field nudged
by ``delta (1 - chi^2)``, for delta = 1e-3 and 1e-4. The relative-energy
distance to the unperturbed run is quadratic in the difference, so its
square root is reported. Linear dependence on delta shows up as a distance
ratio near 10, and the final-to-initial ratio shows how much the distance
grew in time.

Usage: python3 demos/04_twin_stability.py [output_root]
"""
from _common import output_dir, show_checks
from nsac import presets
from nsac.experiments import twin_experiment

s = twin_experiment(presets.twin(), output_dir("twin"))
for delta, d0, d1 in s["rows"]:
    print(f"delta = {delta:g}: sqrt distance {d0:.4e} at t = 0, {d1:.4e} at t = 1")
print(f"ratio of final distances: {s['ratio']:.3f}")
show_checks(s["checks"])
