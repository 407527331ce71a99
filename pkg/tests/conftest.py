import numpy as np
import pytest

from qentrec import cnn
from qentrec.hilbert import DensityMatrix, PureState


def bell_state() -> PureState:
    return PureState(2, np.array([1, 0, 0, 1]) / np.sqrt(2))


def ghz_state(L: int) -> PureState:
    amps = np.zeros(2**L, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return PureState(L, amps)


def haar_state(L: int, rng) -> PureState:
    z = rng.standard_normal(2**L) + 1j * rng.standard_normal(2**L)
    return PureState(L, z / np.linalg.norm(z))


def random_density(L: int, rng, rank=None) -> DensityMatrix:
    D = 2**L
    a = rng.standard_normal((D, rank or D)) + 1j * rng.standard_normal((D, rank or D))
    rho = a @ a.conj().T
    return DensityMatrix(L, rho / np.trace(rho).real)


def naive_kron_site(op, site, L):
    """Reference embedding built from an explicit loop of Kronecker products."""
    out = np.array([[1.0 + 0j]])
    for k in range(1, L + 1):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


def numeric_grad(params, images, labels, eps=1e-6):
    out = {}
    for name, tensor in params.tensors.items():
        g = np.zeros_like(tensor)
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = tensor[i]
            tensor[i] = old + eps
            lp, _ = cnn.loss_and_grad(params, images, labels)
            tensor[i] = old - eps
            lm, _ = cnn.loss_and_grad(params, images, labels)
            tensor[i] = old
            g[i] = (lp - lm) / (2 * eps)
        out[name] = g
    return out


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> "PASS ..." / "FAIL ..." line, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
