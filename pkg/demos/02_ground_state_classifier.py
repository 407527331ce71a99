"""Train a small network to bin the entanglement entropy of Ising ground states.

Runs in a few seconds on one core (L=6, a few thousand images).
Run: python3 demos/02_ground_state_classifier.py
"""
import numpy as np

from qentrec import cnn, harness
from qentrec.imaging import sample_cue_rotations
from qentrec.library import build_ground_library, entropy_scheme

rotations = sample_cue_rotations(W=5, L=6, rng_seed=3)
scheme = entropy_scheme(n_bins=4)  # four equal bins on [0, ln 2]

train_lib = build_ground_library("tfi+", scheme, count=2000, rotations=rotations, rng_seed=0)
test_lib = build_ground_library("tfi+", scheme, count=400, rotations=rotations, rng_seed=1)
print("training images per bin:", np.bincount(train_lib.bins)[1:])

params, log = harness.train_on_library(train_lib, cnn.TrainConfig(epochs=10))
best = log.rows[log.best_epoch - 1]
print(f"best epoch {log.best_epoch}: validation accuracy {best['val_accuracy']:.3f}")

stats = harness.evaluate(params, test_lib)
print("\nbinning error delta = n - n_ANN on held-out images")
for delta, count in sorted(stats.histogram.items()):
    print(f"  {delta:+d}  {'#' * (60 * count // stats.count)} {count}")
print(f"P(delta=0) = {stats.probability(0):.3f}, P(|delta|<=1) = {stats.within(1):.3f}, "
      f"mu = {stats.mu:+.3f}, sigma = {stats.sigma:.3f}")
