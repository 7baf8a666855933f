"""Rabi oscillations in the integrated intensity, and how fast they wash out.

A short pulse of area A leaves the source excited with probability
sin^2(A/2); the emitted intensity then oscillates with A. Longer pulses let
the emitter decay while it is being driven, and the contrast between the
first maximum and the first minimum (the visibility) drops roughly
exponentially with the pulse length. The target, excited only through the
source light, keeps more contrast; the photon flux keeps less.
"""
import numpy as np

from pulsed_cascade import SystemParams
from pulsed_cascade.observables import extinction_fit, rabi_curves, visibility

sp = SystemParams()
areas = np.pi * np.arange(0, 3.0001, 0.05)
lengths = [0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5]

print(f"{'W':>5} {'source':>8} {'target':>8} {'flux':>8}")
table = {w: [] for w in ("source", "target", "flux")}
for length in lengths:
    curves = rabi_curves(sp, length, areas)
    row = {w: visibility(c) for w, c in curves.items()}
    for w, v in row.items():
        table[w].append((length, v))
    print(f"{length:5.2f} {row['source']:8.4f} {row['target']:8.4f} {row['flux']:8.4f}")

for w in ("source", "target"):
    fit = extinction_fit(table[w])
    print(f"{w}: V ~ exp(-{fit.beta:.3f} W)")
