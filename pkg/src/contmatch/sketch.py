"""Gaussian random measurement matrices.

Entries are i.i.d. zero-mean Gaussian with variance 1/M, generated by the
counter-based Philox generator keyed on the seed, so a sketch is bit-exactly
reconstructible from (rows, cols, seed) regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GaussianSketch:
    rows: int
    cols: int
    seed: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.rows, self.cols):
            raise ConfigError(f"matrix shape {m.shape} != ({self.rows}, {self.cols})")
        object.__setattr__(self, "matrix", m)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Product with a length-N vector or an N x K matrix."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.cols:
            raise ConfigError(
                f"operand leading dim {x.shape[0]} does not match sketch cols {self.cols}"
            )
        return self.matrix @ x


def make_sketch(rows: int, cols: int, seed: int) -> GaussianSketch:
    """M x N sketch with Normal(0, 1/M) entries, determined by the seed."""
    if rows < 1 or cols < 1:
        raise ConfigError(f"sketch dimensions must be positive, got {rows} x {cols}")
    rng = np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))
    matrix = rng.standard_normal((rows, cols)) / np.sqrt(rows)
    matrix.flags.writeable = False
    return GaussianSketch(rows, cols, int(seed), matrix)


def orthogonal_sketch(n: int, seed: int = 0) -> GaussianSketch:
    """Square sketch with Phi^T Phi = I, for exact-isometry validation runs."""
    if n < 1:
        raise ConfigError("dimension must be positive")
    rng = np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    q.flags.writeable = False
    return GaussianSketch(n, n, int(seed), q)
