import math

import numpy as np
import pytest

from conftest import bell_state, ghz_state, haar_state, random_density
from qentrec.hilbert import DensityMatrix, PureState, random_product_state, random_separable_mixed
from qentrec.imaging import randomize_orientation
from qentrec.measures import (
    CorruptedStateError,
    EntanglementValue,
    MeasureKind,
    half_chain_entropy,
    log_negativity,
    measure,
    pure_measures,
)

PAGE_L10 = math.log(32) - 31 / 64  # value quoted for the acceptance oracle


def test_bell():
    assert abs(half_chain_entropy(bell_state()).value - math.log(2)) < 1e-10
    assert abs(log_negativity(bell_state().to_density()).value - 1) < 1e-12
    assert abs(log_negativity(bell_state()).value - 1) < 1e-12


def test_ghz():
    g = ghz_state(4)
    assert abs(half_chain_entropy(g).value - math.log(2)) < 1e-9
    assert abs(log_negativity(g.to_density()).value - 1) < 1e-9


def test_products(rng):
    for _ in range(10):
        psi = random_product_state(6, rng)
        assert half_chain_entropy(psi).value < 1e-10
        assert log_negativity(psi.to_density()).value < 1e-9


def test_separable_negativity(rng):
    for _ in range(10):
        assert log_negativity(random_separable_mixed(4, 5, rng)).value < 1e-9


def test_pure_and_density_paths_agree(rng):
    for _ in range(10):
        psi = haar_state(6, rng)
        rho = psi.to_density()
        assert abs(half_chain_entropy(psi).value - half_chain_entropy(rho).value) < 1e-10
        assert abs(log_negativity(psi).value - log_negativity(rho).value) < 1e-10


def test_batched_matches_single(rng):
    vecs = np.stack([haar_state(4, rng).amps for _ in range(5)], axis=1)
    for kind in MeasureKind:
        batch = pure_measures(vecs, 4, kind)
        single = [measure(PureState(4, vecs[:, k]), kind) for k in range(5)]
        assert np.allclose(batch, single, atol=1e-12)


def test_page_value():
    rng = np.random.default_rng(2024)
    vals = [half_chain_entropy(haar_state(10, rng)).value for _ in range(200)]
    assert abs(np.mean(vals) - PAGE_L10) < 0.02
    # exact finite-size mean: sum_{k=dB+1}^{dA dB} 1/k - (dA-1)/(2 dB)
    exact = sum(1 / k for k in range(33, 1025)) - 31 / 64
    assert abs(np.mean(vals) - exact) < 0.005


def test_maximal_values():
    # a product of L/2 Bell pairs straddling the cut saturates both bounds
    L = 4
    amps = np.zeros(16)
    for a in range(2):
        for b in range(2):
            # sites (1,3) and (2,4) paired
            idx = (a << 3) | (b << 2) | (a << 1) | b
            amps[idx] = 0.5
    psi = PureState(L, amps)
    assert abs(half_chain_entropy(psi).value - 2 * math.log(2)) < 1e-12
    assert abs(log_negativity(psi.to_density()).value - 2) < 1e-12


def test_maximally_mixed():
    rho = DensityMatrix(4, np.eye(16) / 16)
    assert abs(half_chain_entropy(rho).value - 2 * math.log(2)) < 1e-12
    assert log_negativity(rho).value == 0.0


def test_odd_L():
    with pytest.raises(ValueError):
        half_chain_entropy(PureState(3, np.eye(8)[0]))
    with pytest.raises(ValueError):
        log_negativity(DensityMatrix(3, np.eye(8) / 8))


def test_local_unitary_invariance(rng):
    for _ in range(20):
        rho = random_density(6, rng, rank=3)
        rot = randomize_orientation(rho, rng)
        assert abs(half_chain_entropy(rho).value - half_chain_entropy(rot).value) < 1e-9
        assert abs(log_negativity(rho).value - log_negativity(rot).value) < 1e-9


def test_value_type():
    v = EntanglementValue(MeasureKind.ENTROPY, 0.5)
    assert float(v) == 0.5
    with pytest.raises(ValueError):
        EntanglementValue(MeasureKind.ENTROPY, -0.1)


def test_corrupted_state():
    # trace-2 "state": trace norm of the partial transpose is 0.5, log2 = -1
    with pytest.raises(CorruptedStateError):
        log_negativity(DensityMatrix(2, np.eye(4) / 8))
