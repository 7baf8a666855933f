"""Occupations of the source, the target and the photon flux after a pi pulse.

The flux occupation is <J^+ J> with J the coherent mix of both emitters'
output. Interference between the two contributions carves a dip into it
about two lifetimes after the pulse, followed by a small revival.
"""
import numpy as np

from pulsed_cascade import PulseParams, SystemParams, build_cascaded, emission_grid, evolve
from pulsed_cascade import operators as ops
from pulsed_cascade.observables import local_extrema

sp = SystemParams()
pulse = PulseParams(area=np.pi, fwhm=0.5)
traj = evolve(ops.ground_state(), build_cascaded(sp), pulse, emission_grid(pulse, sp))
t = traj.times - pulse.t0
n = {w: traj.population(w) for w in ("source", "target", "flux")}

for w, v in n.items():
    print(f"{w:6s} peak {v.max():.3f} at t = {t[v.argmax()]:.2f}")
for k in local_extrema(t, n["flux"], "min"):
    print(f"flux dip at t = {t[k]:.2f} (n = {n['flux'][k]:.4f})")
for tt in (0.5, 1, 2, 3, 4, 6):
    i = int(np.searchsorted(t, tt))
    print(f"t = {tt:3}: " + "  ".join(f"{w} {n[w][i]:.4f}" for w in n))
