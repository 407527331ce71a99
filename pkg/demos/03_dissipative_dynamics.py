"""Entanglement of a quenched product state under weak sigma^x dephasing.

The log-negativity first grows through the Ising dynamics, then decays once
dissipation takes over around t ~ 1/gamma.
Run: python3 demos/03_dissipative_dynamics.py
"""
import numpy as np

from qentrec.hilbert import random_product_state
from qentrec.measures import log_negativity
from qentrec.models import LindbladConfig, ModelSpec, lindblad_trajectory

L, gamma = 6, 0.01
spec = ModelSpec("tfi+", L, h=1.05)
cfg = LindbladConfig(gamma, dt=0.5, method="split")
times = np.geomspace(0.1, 1000, 25)

psi = random_product_state(L, rng_seed=4)
states = lindblad_trajectory(psi.to_density(), spec, cfg, times)
values = [log_negativity(s).value for s in states]

peak = int(np.argmax(values))
for t, v in zip(times, values):
    marker = "  <- peak" if t == times[peak] else ""
    print(f"t = {t:8.2f}   E_N = {v:.4f} bits  {'*' * int(40 * v / max(values))}{marker}")
print(f"\npeak at t = {times[peak]:.1f}; 1/gamma = {1 / gamma:.0f}")
