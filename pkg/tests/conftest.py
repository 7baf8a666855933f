import numpy as np
import pytest

from pulsed_cascade import SystemParams, build_cascaded


def random_density(rng, dim=4):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, dim=4):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(20241011)


@pytest.fixture(scope="session")
def default_system():
    return SystemParams()


@pytest.fixture(scope="session")
def cascaded(default_system):
    return build_cascaded(default_system)
