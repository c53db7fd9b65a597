import numpy as np
import pytest

from algqm import PAULI

TAU1, TAU2, TAU3 = PAULI[1], PAULI[2], PAULI[3]
P0 = np.diag([0.0, 1.0]).astype(complex)

# worked 2x2 example
A_ENT, B_ENT, D_ENT = 2.0, 0.5 + 0.25j, -3.0
A_EXAMPLE = np.array([[A_ENT, B_ENT], [np.conj(B_ENT), D_ENT]])


def random_hermitian(rng, n, scale=1.0):
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (x + x.conj().T) / 2


def random_matrix(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_matrix(rng, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(module.RESULTS):
        terminalreporter.write_line(line)
