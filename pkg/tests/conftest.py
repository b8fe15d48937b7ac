import numpy as np
import pytest

from beancrit import ConvexBody, DomainBoundary, TestBank, Workspace


@pytest.fixture(scope="session")
def ws_disk_small():
    """Unit disk domain and body, coarse grid; fast shared fixture."""
    return Workspace(DomainBoundary.disk(1.0), ConvexBody.disk(1.0), 128, 512)


@pytest.fixture(scope="session")
def ws_disk():
    """Unit disk domain and body at the resolution the tight oracles need."""
    return Workspace(DomainBoundary.disk(1.0), ConvexBody.disk(1.0), 256, 1024)


@pytest.fixture(scope="session")
def ws_mixed():
    """Nonconvex wavy domain with an off-center anisotropic body."""
    omega = DomainBoundary.perturbed_disk(1.0, amplitudes=(0.12,), modes=(4,))
    body = ConvexBody.ellipse(1.0, 0.7, center=(0.15, 0.05))
    return Workspace(omega, body, 128, 1024)


@pytest.fixture(scope="session")
def bank_disk(ws_disk):
    return TestBank(ws_disk.omega)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
