"""Same-time photon-flux coincidences as a signature of stimulated emission.

sigma and xi are nilpotent, so neither emitter alone can yield two photons
at the same instant. The flux can, with rate proportional to the joint
occupation <sigma^+ sigma xi^+ xi>, and that signal decays at twice the
source decay rate.
"""
import numpy as np

from pulsed_cascade import PulseParams, SystemParams, build_cascaded, map_grid
from pulsed_cascade.correlations import RegressionEngine, normalized_g2_tt, same_time_g2_trace

sp = SystemParams()
parts = build_cascaded(sp)
pulse = PulseParams(area=np.pi, fwhm=1.0)
grid = map_grid(pulse, sp)
engine = RegressionEngine(parts, pulse, grid)

for w in ("source", "target", "flux"):
    print(f"max G2_{w}(t,t) = {np.max(np.abs(engine.g2_map(w).diagonal())):.3e}")

trace = same_time_g2_trace(parts, pulse, grid, engine=engine)
print(f"tail decay rate of G2_flux(t,t): {trace.decay_rate:.5f} gamma_sigma ({trace.fit_points} points)")

for area in (0.1 * np.pi, 0.5 * np.pi, np.pi):
    p = pulse.replace(area=area)
    g = normalized_g2_tt(parts, p, map_grid(p, sp))
    print(f"A = {area / np.pi:.1f}pi: max normalized g2_flux(t,t) = {np.nanmax(g):.1f}")
