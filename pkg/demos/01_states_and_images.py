"""From a spin-chain state to a statistical image.

Run: python3 demos/01_states_and_images.py
"""
import math

import numpy as np

from qentrec.hilbert import random_product_state
from qentrec.imaging import apply_shot_noise, generate_image, sample_cue_rotations
from qentrec.measures import half_chain_entropy, log_negativity
from qentrec.models import ModelSpec, ground_state

L = 6

# Two reference states: a product state and the critical Ising ground state.
product = random_product_state(L, rng_seed=1)
_, critical = ground_state(ModelSpec("tfi+", L, h=1.0))
print(f"product state:   S = {half_chain_entropy(product).value:.4f} nats")
print(f"critical ground: S = {half_chain_entropy(critical).value:.4f} nats "
      f"(ln 2 = {math.log(2):.4f}), E_N = {log_negativity(critical).value:.4f} bits")

# Five random local rotations define the image; each row is an outcome distribution.
rotations = sample_cue_rotations(W=5, L=L, rng_seed=7)
image = generate_image(critical, rotations)
print(f"\nimage shape {image.probs.shape}, row sums {np.round(image.probs.sum(axis=1), 12)}")
print("largest outcome probability per rotation:", np.round(image.probs.max(axis=1), 4))

# A finite number of measurements replaces probabilities by frequencies.
for M in (10_000, 1000, 100):
    noisy = apply_shot_noise(image, M, rng_seed=M)
    rms = np.sqrt(np.mean((noisy.probs - image.probs) ** 2))
    print(f"M = {M:>6}: rms deviation from the exact image {rms:.2e}")

# The same state written as a density matrix gives the same image.
rho_image = generate_image(critical.to_density(), rotations)
print("\npure vs density path, max difference:", np.abs(rho_image.probs - image.probs).max())
