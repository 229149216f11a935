"""Small-dimension linear algebra on subspace bases.

Ambient projectors are never materialized: every spectral quantity is
reduced to a symmetric eigenproblem of size at most K1 + K2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, RankDeficiencyError

RANK_TOLERANCE = 1e-10
ORTHONORMALITY_TOLERANCE = 1e-10


@dataclass(frozen=True)
class OrthoBasis:
    """N x K matrix with orthonormal columns, optionally tagged with the
    parameter vector it was evaluated at."""

    matrix: np.ndarray
    source_theta: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < m.shape[1]:
            raise ConfigError(f"basis must be tall N x K, got shape {m.shape}")
        gram_err = np.max(np.abs(m.T @ m - np.eye(m.shape[1])))
        if gram_err > ORTHONORMALITY_TOLERANCE:
            raise ConfigError(f"columns are not orthonormal (Gram error {gram_err:.2e})")
        object.__setattr__(self, "matrix", m)

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def subspace_dim(self) -> int:
        return self.matrix.shape[1]


BasisLike = Union[OrthoBasis, np.ndarray]


def _as_matrix(basis: BasisLike) -> np.ndarray:
    return basis.matrix if isinstance(basis, OrthoBasis) else np.asarray(basis, dtype=float)


def orthonormal_columns(b: np.ndarray) -> np.ndarray:
    """QR-orthonormalize, keeping the span and fixing signs so the result is
    deterministic (diagonal of R nonnegative).  Raises on rank deficiency."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 2:
        raise ConfigError(f"expected a 2-D array, got shape {b.shape}")
    n, k = b.shape
    if k > n:
        raise ConfigError(f"more columns than rows ({k} > {n})")
    sv = np.linalg.svd(b, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] / sv[0] < RANK_TOLERANCE:
        raise RankDeficiencyError(
            f"rank-deficient input: singular value ratio "
            f"{0.0 if sv[0] == 0 else sv[-1] / sv[0]:.2e} below {RANK_TOLERANCE:.0e}"
        )
    q, r = np.linalg.qr(b)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def orthonormalize(b: np.ndarray, source_theta: Optional[np.ndarray] = None) -> OrthoBasis:
    """Wrap :func:`orthonormal_columns` into an :class:`OrthoBasis`."""
    return OrthoBasis(orthonormal_columns(b), source_theta=source_theta)


def project_energy(basis: BasisLike, h: np.ndarray) -> float:
    """Squared norm of the projection of ``h`` onto the column span: ||V^T h||^2."""
    v = _as_matrix(basis)
    h = np.asarray(h, dtype=float)
    if h.shape != (v.shape[0],):
        raise ConfigError(f"vector shape {h.shape} does not match ambient dim {v.shape[0]}")
    w = v.T @ h
    return float(np.dot(w, w))


def residual_projection(basis: BasisLike, h: np.ndarray) -> np.ndarray:
    """Component of ``h`` orthogonal to the column span: h - V (V^T h)."""
    v = _as_matrix(basis)
    h = np.asarray(h, dtype=float)
    if h.shape != (v.shape[0],):
        raise ConfigError(f"vector shape {h.shape} does not match ambient dim {v.shape[0]}")
    return h - v @ (v.T @ h)


def projector_distance(basis1: BasisLike, basis2: BasisLike) -> float:
    """Operator norm of the difference of the two orthogonal projectors.

    P1 - P2 is restricted to an orthonormal basis W of the union of the two
    spans (QR of the concatenation); the norm is the largest-magnitude
    eigenvalue of the (K1+K2)-dimensional symmetric matrix W^T (P1 - P2) W.
    """
    v1, v2 = _as_matrix(basis1), _as_matrix(basis2)
    if v1.shape[0] != v2.shape[0]:
        raise ConfigError(f"ambient dims differ: {v1.shape[0]} vs {v2.shape[0]}")
    w, _ = np.linalg.qr(np.hstack([v1, v2]))
    a1 = w.T @ v1
    a2 = w.T @ v2
    m = a1 @ a1.T - a2 @ a2.T
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (m + m.T)))))


def equal_rank_projector_distance(g: np.ndarray) -> np.ndarray:
    """Distance between equal-dimensional subspaces from the K x K cross-Gram
    of their orthonormal bases: sqrt(1 - sigma_min(G)^2).

    Accepts a stack (..., K, K) and returns distances of shape (...).
    """
    s = np.linalg.svd(g, compute_uv=False)
    smin = np.clip(s[..., -1], 0.0, 1.0)
    return np.sqrt(np.clip(1.0 - smin**2, 0.0, None))
