import numpy as np
import pytest

from contmatch.linalg import orthonormal_columns


def random_orthobasis(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    return orthonormal_columns(rng.standard_normal((n, k)))


def dense_projector_norm(v1: np.ndarray, v2: np.ndarray) -> float:
    """Brute-force ||P1 - P2|| from the full N x N projectors."""
    p = v1 @ v1.T - v2 @ v2.T
    return float(np.max(np.abs(np.linalg.eigvalsh(p))))


@pytest.fixture
def rng():
    return np.random.default_rng(20240809)
