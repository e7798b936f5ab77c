import numpy as np
import pytest

from mstomo.core import random_density


@pytest.fixture
def rng():
    return np.random.default_rng(20250809)


def ginibre_states(seed, count, rank=4):
    """Stream of random density matrices for property checks."""
    rng = np.random.default_rng(seed)
    return [random_density(rng, rank=rank) for _ in range(count)]


def haar_unitary(rng, dim=2):
    """Haar-ish unitary from the QR decomposition of a Ginibre matrix."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def trace_distance(a, b):
    return 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()
