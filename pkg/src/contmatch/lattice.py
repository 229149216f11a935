"""Rectangular evaluation lattices over parameter boxes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ConfigError
from .families import ParamBox


@dataclass(frozen=True)
class Lattice:
    """Axis-aligned grid of parameter vectors.

    Points enumerate in lexicographic order (first coordinate slowest),
    which is the tie-breaking order used by the matchers.
    """

    axes: tuple

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        if len(axes) == 0:
            raise ConfigError("lattice needs at least one axis")
        for a in axes:
            if a.ndim != 1 or a.shape[0] < 1:
                raise ConfigError("each lattice axis needs at least one point")
            if a.shape[0] > 1 and not np.all(np.diff(a) > 0):
                raise ConfigError("lattice axes must be strictly increasing")
        for a in axes:
            a.flags.writeable = False
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_box(cls, box: ParamBox, resolution: Union[int, Sequence[int]]) -> "Lattice":
        res = _resolve_resolution(resolution, box.dim)
        axes = [np.linspace(box.lower[d], box.upper[d], res[d]) for d in range(box.dim)]
        return cls(tuple(axes))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.shape[0] for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def spacings(self) -> np.ndarray:
        return np.array([a[1] - a[0] if a.shape[0] > 1 else 0.0 for a in self.axes])

    def points(self) -> np.ndarray:
        """All lattice points, shape (size, dim), lexicographic order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def describe(self) -> dict:
        return {
            "shape": list(self.shape),
            "lower": [float(a[0]) for a in self.axes],
            "upper": [float(a[-1]) for a in self.axes],
        }


def _resolve_resolution(resolution: Union[int, Sequence[int]], dim: int) -> tuple:
    if isinstance(resolution, (int, np.integer)):
        res = (int(resolution),) * dim
    else:
        res = tuple(int(r) for r in resolution)
        if len(res) == 1 and dim > 1:
            res = res * dim
    if len(res) != dim:
        raise ConfigError(f"lattice resolution {res} does not match parameter dim {dim}")
    if any(r < 1 for r in res):
        raise ConfigError(f"lattice resolution must be >= 1 per axis, got {res}")
    return res


def parse_lattice_spec(spec: str) -> tuple:
    """Parse "128" or "64x64" into a per-dimension resolution tuple."""
    try:
        parts = tuple(int(p) for p in str(spec).lower().split("x"))
    except ValueError as exc:
        raise ConfigError(f"bad lattice spec {spec!r}") from exc
    if not parts or any(p < 1 for p in parts):
        raise ConfigError(f"bad lattice spec {spec!r}")
    return parts
