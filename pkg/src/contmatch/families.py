"""Continuously parameterized subspace collections.

Three analytic families (shifted Gaussian pulse, shifted square pulse,
Gabor atoms over shift and modulation frequency), the cosine-modulated
lapped-orthogonal family, and finite tabulated families loaded from JSON
(with a real block embedding for complex response matrices).

Every ``basis_eval`` output has exactly orthonormal columns: sampled atoms
are re-orthonormalized by sign-fixed QR, because discrete sampling breaks
the continuous-time orthonormality at the 1e-12..1e-6 level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import BoundaryLeakageError, ConfigError, NumericalError
from .linalg import orthonormal_columns
from .signal import SampleGrid, SampledSignal, gaussian_pulse, square_pulse

ENERGY_CAPTURE_MIN = 0.99


@dataclass(frozen=True)
class ParamBox:
    """Compact box of parameter vectors, lower[i] < upper[i]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ConfigError(f"box bounds must be matching vectors, got {lo.shape}, {hi.shape}")
        if not np.all(lo < hi):
            raise ConfigError("box must satisfy lower < upper in every coordinate")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, theta: np.ndarray, slack: float = 1e-12) -> bool:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        span = self.upper - self.lower
        return bool(
            np.all(theta >= self.lower - slack * span) and np.all(theta <= self.upper + slack * span)
        )


@dataclass(frozen=True)
class SubspaceFamily:
    """Map from a parameter box to K-dimensional subspaces of R^N.

    ``basis_eval(theta)`` returns an N x K matrix with orthonormal columns
    and is a pure, deterministic function of theta.
    """

    domain: ParamBox
    subspace_dim: int
    ambient: SampleGrid
    basis_eval: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    shift_invariant: bool = False
    atom_signals: Optional[Callable[[float], List[SampledSignal]]] = field(
        default=None, compare=False, repr=False
    )
    raw_atom_eval: Optional[Callable] = field(default=None, compare=False, repr=False)

    @property
    def param_dim(self) -> int:
        return self.domain.dim

    @property
    def ambient_dim(self) -> int:
        return self.ambient.count

    def basis(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.domain.dim,):
            raise ConfigError(
                f"theta shape {theta.shape} does not match parameter dim {self.domain.dim}"
            )
        return self.basis_eval(theta)


@dataclass(frozen=True)
class TabulatedFamily:
    """Finite family: one orthonormal basis per stored parameter vector.

    Matching over a tabulated family searches its grid points only; there
    is no interpolation between stored bases.
    """

    theta_grid: np.ndarray
    bases: tuple
    name: str = "tabulated"
    complex_origin: bool = False

    def __post_init__(self):
        grid = np.atleast_2d(np.asarray(self.theta_grid, dtype=float))
        if grid.shape[0] != len(self.bases):
            raise ConfigError(
                f"{grid.shape[0]} grid points but {len(self.bases)} bases"
            )
        if len(self.bases) == 0:
            raise ConfigError("tabulated family needs at least one grid point")
        shapes = {b.shape for b in self.bases}
        if len(shapes) != 1:
            raise ConfigError(f"bases have inconsistent shapes: {sorted(shapes)}")
        grid.flags.writeable = False
        object.__setattr__(self, "theta_grid", grid)

    @property
    def param_dim(self) -> int:
        return self.theta_grid.shape[1]

    @property
    def subspace_dim(self) -> int:
        return self.bases[0].shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.bases[0].shape[0]


# ---------------------------------------------------------------------------
# Built-in analytic families


def _capture_check(grid: SampleGrid, sigma: float, centers: Sequence[float], label: str) -> None:
    """Refuse construction if a Gaussian envelope at any extreme shift keeps
    less than the required energy fraction on the grid."""
    for c in centers:
        captured = grid.spacing * float(np.sum(gaussian_pulse(grid, sigma, c).values ** 2))
        if captured < ENERGY_CAPTURE_MIN:
            raise BoundaryLeakageError(
                f"{label}: pulse at shift {c} keeps only {100 * captured:.2f}% of its "
                f"energy on the grid (need {100 * ENERGY_CAPTURE_MIN:.0f}%)"
            )


def _support_check(grid: SampleGrid, lo: float, hi: float, label: str) -> None:
    t_last = grid.t_start + (grid.count - 1) * grid.spacing
    if lo < grid.t_start or hi > t_last:
        raise BoundaryLeakageError(
            f"{label}: support [{lo:.6g}, {hi:.6g}] leaves the grid "
            f"[{grid.t_start:.6g}, {t_last:.6g}]"
        )


def _unit_column(values: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.dot(values, values))
    if norm == 0.0:
        raise NumericalError("atom vanishes on the grid; refine the sampling")
    return (values / norm)[:, None]


def gaussian_pulse_family(
    sigma: float, shift_range: Sequence[float], grid: SampleGrid
) -> SubspaceFamily:
    """One-dimensional subspaces spanned by a shifted unit Gaussian pulse."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    lo, hi = float(shift_range[0]), float(shift_range[1])
    domain = ParamBox(np.array([lo]), np.array([hi]))
    _capture_check(grid, sigma, [lo, hi], "gaussian family")
    times = grid.times()

    def basis_eval(theta: np.ndarray) -> np.ndarray:
        u = times - theta[0]
        return _unit_column(np.exp(-(u**2) / (2.0 * sigma**2)))

    def atoms(theta: float) -> List[SampledSignal]:
        return [gaussian_pulse(grid, sigma, float(theta))]

    return SubspaceFamily(
        domain=domain,
        subspace_dim=1,
        ambient=grid,
        basis_eval=basis_eval,
        kind="gaussian",
        params={"sigma": sigma, "shift_range": (lo, hi)},
        shift_invariant=True,
        atom_signals=atoms,
    )


def square_pulse_family(
    sigma: float, shift_range: Sequence[float], grid: SampleGrid
) -> SubspaceFamily:
    """One-dimensional subspaces spanned by a shifted unit square pulse."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    lo, hi = float(shift_range[0]), float(shift_range[1])
    domain = ParamBox(np.array([lo]), np.array([hi]))
    _support_check(grid, lo - sigma / 2, hi + sigma / 2, "square family")
    times = grid.times()

    def basis_eval(theta: np.ndarray) -> np.ndarray:
        u = times - theta[0]
        return _unit_column(((u >= -sigma / 2) & (u <= sigma / 2)).astype(float))

    def atoms(theta: float) -> List[SampledSignal]:
        return [square_pulse(grid, sigma, float(theta))]

    return SubspaceFamily(
        domain=domain,
        subspace_dim=1,
        ambient=grid,
        basis_eval=basis_eval,
        kind="square",
        params={"sigma": sigma, "shift_range": (lo, hi)},
        shift_invariant=True,
        atom_signals=atoms,
    )


def _gabor_norm_constants(sigma: float, omega: float) -> tuple:
    base = 2.0 / (sigma * np.sqrt(np.pi))
    c1 = np.sqrt(base / (1.0 + np.exp(-(omega**2) * sigma**2)))
    c2 = np.sqrt(base / (1.0 - np.exp(-(omega**2) * sigma**2)))
    return c1, c2


def gabor_family(
    sigma: float,
    tau_range: Sequence[float],
    omega_range: Sequence[float],
    grid: SampleGrid,
) -> SubspaceFamily:
    """Two-dimensional subspaces spanned by the cosine and sine atoms of a
    Gaussian-windowed carrier, indexed by (shift, modulation frequency).

    Requires omega_lo * sigma > 1 so the sine atom stays well conditioned.
    """
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    t_lo, t_hi = float(tau_range[0]), float(tau_range[1])
    w_lo, w_hi = float(omega_range[0]), float(omega_range[1])
    if w_lo * sigma <= 1.0:
        raise ConfigError(
            f"gabor family requires omega_lo * sigma > 1, got {w_lo * sigma:.4g}"
        )
    domain = ParamBox(np.array([t_lo, w_lo]), np.array([t_hi, w_hi]))
    _capture_check(grid, sigma, [t_lo, t_hi], "gabor family")
    times = grid.times()
    root_d = np.sqrt(grid.spacing)

    def raw_atoms(tau: float, omega: float) -> np.ndarray:
        u = times - tau
        env = np.exp(-(u**2) / (2.0 * sigma**2))
        c1, c2 = _gabor_norm_constants(sigma, omega)
        return np.column_stack([c1 * env * np.cos(omega * u), c2 * env * np.sin(omega * u)])

    def basis_eval(theta: np.ndarray) -> np.ndarray:
        return orthonormal_columns(root_d * raw_atoms(theta[0], theta[1]))

    def atoms(theta) -> List[SampledSignal]:
        tau, omega = float(theta[0]), float(theta[1])
        c1, c2 = _gabor_norm_constants(sigma, omega)

        def f_cos(t, _c=c1, _tau=tau, _w=omega):
            u = t - _tau
            return _c * np.exp(-(u**2) / (2.0 * sigma**2)) * np.cos(_w * u)

        def f_sin(t, _c=c2, _tau=tau, _w=omega):
            u = t - _tau
            return _c * np.exp(-(u**2) / (2.0 * sigma**2)) * np.sin(_w * u)

        return [
            SampledSignal(grid, f_cos(times), analytic=f_cos),
            SampledSignal(grid, f_sin(times), analytic=f_sin),
        ]

    return SubspaceFamily(
        domain=domain,
        subspace_dim=2,
        ambient=grid,
        basis_eval=basis_eval,
        kind="gabor",
        params={"sigma": sigma, "tau_range": (t_lo, t_hi), "omega_range": (w_lo, w_hi)},
        shift_invariant=False,
        atom_signals=atoms,
        raw_atom_eval=raw_atoms,
    )


def lot_envelope(t: np.ndarray, sigma: float) -> np.ndarray:
    """Smooth compactly supported window on [-sigma/4, 5 sigma/4] with unit
    plateau height sqrt(2/sigma)."""
    t = np.asarray(t, dtype=float)
    amp = np.sqrt(2.0 / sigma)
    rising = np.sin(np.pi / 4.0 * (1.0 + 4.0 * t / sigma))
    falling = np.sin(np.pi / 4.0 * (5.0 - 4.0 * t / sigma))
    return amp * np.select(
        [
            t < -sigma / 4,
            t < sigma / 4,
            t < 3 * sigma / 4,
            t < 5 * sigma / 4,
        ],
        [0.0, rising, 1.0, falling],
        default=0.0,
    )


def lot_frequencies(sigma: float, k: int) -> np.ndarray:
    """Half-integer modulation frequencies (pi/sigma) * (k - 1/2), k = 1..K."""
    return (np.pi / sigma) * (np.arange(1, k + 1) - 0.5)


def lot_family(
    sigma: float, subspace_dim: int, shift_range: Sequence[float], grid: SampleGrid
) -> SubspaceFamily:
    """K-dimensional subspaces spanned by shifted cosine-modulated atoms of a
    lapped orthogonal transform (shared envelope, half-integer frequencies)."""
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    k = int(subspace_dim)
    if k < 2:
        raise ConfigError(f"lot family requires K >= 2, got {k}")
    lo, hi = float(shift_range[0]), float(shift_range[1])
    domain = ParamBox(np.array([lo]), np.array([hi]))
    _support_check(grid, lo - sigma / 4, hi + 5 * sigma / 4, "lot family")
    times = grid.times()
    omegas = lot_frequencies(sigma, k)
    root_d = np.sqrt(grid.spacing)

    def raw_atoms(theta: float) -> np.ndarray:
        u = times - theta
        env = lot_envelope(u, sigma)
        return env[:, None] * np.cos(np.outer(u, omegas))

    def basis_eval(theta: np.ndarray) -> np.ndarray:
        return orthonormal_columns(root_d * raw_atoms(theta[0]))

    def atoms(theta: float) -> List[SampledSignal]:
        out = []
        for w in omegas:
            def f(t, _w=w, _th=float(theta)):
                u = t - _th
                return lot_envelope(u, sigma) * np.cos(_w * u)

            out.append(SampledSignal(grid, f(times), analytic=f))
        return out

    return SubspaceFamily(
        domain=domain,
        subspace_dim=k,
        ambient=grid,
        basis_eval=basis_eval,
        kind="lot",
        params={"sigma": sigma, "subspace_dim": k, "shift_range": (lo, hi)},
        shift_invariant=True,
        atom_signals=atoms,
        raw_atom_eval=raw_atoms,
    )


def default_grid(
    kind: str,
    sigma: float,
    shift_lo: float,
    shift_hi: float,
    count: int = 2048,
) -> SampleGrid:
    """Ambient grid wide enough that every shift in range keeps its atom
    comfortably inside the window."""
    pads = {"gaussian": 6.0 * sigma, "gabor": 6.0 * sigma, "square": 0.75 * sigma}
    if kind in pads:
        lo, hi = shift_lo - pads[kind], shift_hi + pads[kind]
    elif kind == "lot":
        lo, hi = shift_lo - 0.5 * sigma, shift_hi + 1.75 * sigma
    else:
        raise ConfigError(f"no default grid rule for family kind {kind!r}")
    return SampleGrid.over(lo, hi, count)


# ---------------------------------------------------------------------------
# Complex response matrices and tabulated families


def real_embedding(g: np.ndarray) -> np.ndarray:
    """Real 2N x 2K block matrix [[Re G, -Im G], [Im G, Re G]] whose column
    span over R carries the complex column span of G."""
    g = np.asarray(g)
    if g.ndim != 2:
        raise ConfigError(f"expected a 2-D matrix, got shape {g.shape}")
    if not np.all(np.isfinite(g.real)) or not np.all(np.isfinite(np.imag(g))):
        raise ConfigError("matrix contains non-finite entries")
    re, im = np.real(g).astype(float), np.imag(g).astype(float)
    return np.block([[re, -im], [im, re]])


def load_tabulated(path: str) -> TabulatedFamily:
    """Load a tabulated family from its JSON record.

    Record layout: ``{name, param_dim, ambient_dim, subspace_dim, complex,
    theta_grid: [[...], ...], bases: [flat column-major matrix, ...]}``.
    Complex records store interleaved (re, im) pairs; they are expanded by
    :func:`real_embedding`, doubling both N and K.  Every basis is
    orthonormalized on load; rank-deficient bases are rejected.
    """
    try:
        with open(path) as fh:
            rec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read tabulated family {path}: {exc}") from exc
    try:
        name = str(rec["name"])
        d = int(rec["param_dim"])
        n = int(rec["ambient_dim"])
        k = int(rec["subspace_dim"])
        is_complex = bool(rec["complex"])
        theta_grid = np.asarray(rec["theta_grid"], dtype=float)
        flats = rec["bases"]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing field {exc}") from exc
    if theta_grid.ndim != 2 or theta_grid.shape[1] != d:
        raise ConfigError(
            f"{path}: theta_grid shape {theta_grid.shape} inconsistent with param_dim {d}"
        )
    if len(flats) != theta_grid.shape[0]:
        raise ConfigError(
            f"{path}: {len(flats)} bases for {theta_grid.shape[0]} grid points"
        )
    expected = 2 * n * k if is_complex else n * k
    bases = []
    for i, flat in enumerate(flats):
        arr = np.asarray(flat, dtype=float)
        if arr.shape != (expected,):
            raise ConfigError(
                f"{path}: basis {i} has {arr.shape[0]} entries, expected {expected}"
            )
        if is_complex:
            cplx = (arr[0::2] + 1j * arr[1::2]).reshape((n, k), order="F")
            mat = real_embedding(cplx)
        else:
            mat = arr.reshape((n, k), order="F")
        if not np.all(np.isfinite(mat)):
            raise ConfigError(f"{path}: basis {i} contains non-finite entries")
        bases.append(orthonormal_columns(mat))
    return TabulatedFamily(
        theta_grid=theta_grid,
        bases=tuple(bases),
        name=name,
        complex_origin=is_complex,
    )


def save_tabulated(family: TabulatedFamily, path: str) -> None:
    """Inverse of :func:`load_tabulated` for real (already embedded) bases."""
    rec = {
        "name": family.name,
        "param_dim": family.param_dim,
        "ambient_dim": family.ambient_dim,
        "subspace_dim": family.subspace_dim,
        "complex": False,
        "theta_grid": family.theta_grid.tolist(),
        "bases": [b.flatten(order="F").tolist() for b in family.bases],
    }
    with open(path, "w") as fh:
        json.dump(rec, fh)
