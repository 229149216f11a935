"""Empirical verification harness for the sketched-matching guarantees.

Everything here measures lattice suprema, so the deterministic energy-gap
inequality is checked as an exact statement about the lattice-restricted
family: whenever the two sketch diagnostics come in below one, the gap
bound must hold for that realization, with no probability involved.

Per-trial seeds are derived from (base_seed, M, trial) with SHA-256, so
results are independent of execution order and parallelism:
``seed = sha256("contmatch:{base}:{M}:{trial}")[:8]`` as a 63-bit integer.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, NumericalError
from .families import SubspaceFamily, TabulatedFamily
from .lattice import Lattice
from .matching import _normalize, basis_at, sweep
from .sketch import GaussianSketch, make_sketch

Family = Union[SubspaceFamily, TabulatedFamily]

GAP_BOUND_SLACK = 1e-9


def derive_seed(base_seed: int, m: int, trial: int) -> int:
    """Published per-trial seed derivation (see module docstring)."""
    digest = hashlib.sha256(f"contmatch:{base_seed}:{m}:{trial}".encode()).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)


def _lattice_descr(family: Family, lattice: Optional[Lattice]) -> dict:
    if isinstance(family, TabulatedFamily):
        return {"kind": "tabulated", "points": int(family.theta_grid.shape[0])}
    return {"kind": "lattice", **lattice.describe()}


def _points_for(family: Family, lattice: Optional[Lattice]):
    if isinstance(family, TabulatedFamily):
        return None
    if lattice is None:
        raise ConfigError("parameterized families need an evaluation lattice")
    return lattice.points()


@dataclass(frozen=True)
class ConditionEstimate:
    """Lattice supremum of a sketch diagnostic and where it was attained."""

    sup_value: float
    argmax_theta: np.ndarray
    lattice: dict
    seed: int


def sketch_gram_distortion(
    family: Family,
    phi: GaussianSketch,
    lattice: Optional[Lattice] = None,
    threads: int = 1,
) -> ConditionEstimate:
    """sup over evaluation points of ||I - (Phi V)^T (Phi V)||: how far the
    sketched bases are from keeping their orthonormal structure."""
    res = sweep(family, _points_for(family, lattice), phis=[phi], gram=True, threads=threads)
    vals = res["gram"][0]
    i = int(np.argmax(vals))
    return ConditionEstimate(
        sup_value=float(vals[i]),
        argmax_theta=res["points"][i].copy(),
        lattice=_lattice_descr(family, lattice),
        seed=phi.seed,
    )


def residual_crosstalk(
    family: Family,
    phi: GaussianSketch,
    h0: np.ndarray,
    lattice: Optional[Lattice] = None,
    threads: int = 1,
) -> ConditionEstimate:
    """sup over evaluation points of ||(Phi V)^T Phi (h0 - V V^T h0)||: how
    much sketching leaks the off-subspace residual back into the subspace."""
    h0n, _ = _normalize(h0)
    res = sweep(
        family,
        _points_for(family, lattice),
        h0=h0n,
        phis=[phi],
        crosstalk=True,
        threads=threads,
    )
    vals = res["crosstalk"][0]
    i = int(np.argmax(vals))
    return ConditionEstimate(
        sup_value=float(vals[i]),
        argmax_theta=res["points"][i].copy(),
        lattice=_lattice_descr(family, lattice),
        seed=phi.seed,
    )


def gap_bound(delta1: float, delta2: float) -> float:
    """Deterministic energy-gap bound (3 d1 + 2 d2 + (d1 + d2)^2) / (1 - d1),
    valid whenever both diagnostics are below one."""
    if delta1 < 0 or delta2 < 0:
        raise ConfigError("diagnostics must be nonnegative")
    if delta1 >= 1:
        raise ConfigError("no guarantee: gram distortion is >= 1")
    return (3.0 * delta1 + 2.0 * delta2 + (delta1 + delta2) ** 2) / (1.0 - delta1)


@dataclass
class GapBoundReport:
    seed: int
    delta1: float
    delta2: float
    sup_gap: float
    sup_gap_theta: np.ndarray
    bound: Optional[float]
    holds: Optional[bool]
    vacuous: bool
    lattice: dict


def check_gap_bound_many(
    family: Family,
    phis: Sequence[GaussianSketch],
    h0: np.ndarray,
    lattice: Optional[Lattice] = None,
    threads: int = 1,
) -> List[GapBoundReport]:
    """Measure sup |  ||Ptilde y||^2 - ||P h0||^2  | over the lattice and
    compare it against the bound implied by the measured diagnostics, for a
    batch of sketches sharing one row count (bases are evaluated once).

    This is a per-realization check: with both diagnostics below one the
    inequality must hold exactly (up to 1e-9 arithmetic slack), for every
    sketch.  When the gram distortion reaches one the bound is vacuous and
    only the measured values are reported.
    """
    h0n, _ = _normalize(h0)
    ys = np.stack([phi.apply(h0n) for phi in phis])
    res = sweep(
        family,
        _points_for(family, lattice),
        h0=h0n,
        phis=phis,
        ys=ys,
        direct=True,
        compressed=True,
        gram=True,
        crosstalk=True,
        threads=threads,
    )
    descr = _lattice_descr(family, lattice)
    reports = []
    for s, phi in enumerate(phis):
        delta1 = float(np.max(res["gram"][s]))
        delta2 = float(np.max(res["crosstalk"][s]))
        gaps = np.abs(res["compressed"][s] - res["direct"])
        i = int(np.argmax(gaps))
        sup_gap = float(gaps[i])
        vacuous = delta1 >= 1.0
        bound = None if vacuous else gap_bound(delta1, delta2)
        holds = None if vacuous else bool(sup_gap <= bound + GAP_BOUND_SLACK)
        reports.append(
            GapBoundReport(
                seed=phi.seed,
                delta1=delta1,
                delta2=delta2,
                sup_gap=sup_gap,
                sup_gap_theta=res["points"][i].copy(),
                bound=bound,
                holds=holds,
                vacuous=vacuous,
                lattice=descr,
            )
        )
    return reports


def check_gap_bound(
    family: Family,
    phi: GaussianSketch,
    h0: np.ndarray,
    lattice: Optional[Lattice] = None,
    threads: int = 1,
) -> GapBoundReport:
    """Single-sketch form of :func:`check_gap_bound_many`."""
    return check_gap_bound_many(family, [phi], h0, lattice, threads)[0]


# ---------------------------------------------------------------------------
# Scaling of the approximation gap with the number of sketch rows


@dataclass(frozen=True)
class TrialRecord:
    m: int
    trial: int
    seed: int
    gap: float
    sup_gap: float
    theta_hat: np.ndarray


@dataclass(frozen=True)
class ScalingRow:
    m: int
    trials: int
    median_gap: float
    median_sup_gap: float
    quantiles: tuple  # (0.1, 0.9) quantiles of the per-trial sup gap

    def __post_init__(self):
        q10, q90 = self.quantiles
        if not (q10 <= self.median_sup_gap <= q90):
            raise ConfigError("quantiles must bracket the median")


@dataclass
class ScalingResult:
    rows: List[ScalingRow]
    trials: List[TrialRecord]
    theta_bar: np.ndarray
    direct_error_sq: float


def scaling_experiment(
    family: Family,
    h0: np.ndarray,
    m_list: Sequence[int],
    trials: int,
    base_seed: int,
    lattice: Optional[Lattice] = None,
    threads: int = 1,
) -> ScalingResult:
    """Per sketch size M: match directly once, then match ``trials`` seeded
    sketches, recording the approximation gap and the lattice sup gap.

    Matching is lattice-only here (no refinement), so the per-trial chain
    gap <= 2 * sup_gap is exact by construction.
    """
    if trials < 1:
        raise ConfigError("need at least one trial")
    h0n, _ = _normalize(h0)
    pts = _points_for(family, lattice)
    base = sweep(family, pts, h0=h0n, direct=True, threads=threads)
    direct_proj = base["direct"]
    points = base["points"]
    ambient = family.ambient_dim
    k = family.subspace_dim
    bar_idx = int(np.argmin(1.0 - direct_proj))
    theta_bar = points[bar_idx].copy()

    rows: List[ScalingRow] = []
    detail: List[TrialRecord] = []
    for m in m_list:
        m = int(m)
        if m < k:
            raise ConfigError(f"sketch rows {m} below subspace dim {k}")
        seeds = [derive_seed(base_seed, m, i) for i in range(trials)]
        phis = [make_sketch(m, ambient, s) for s in seeds]
        ys = np.stack([phi.apply(h0n) for phi in phis])
        comp = sweep(
            family, pts, phis=phis, ys=ys, compressed=True, threads=threads
        )["compressed"]
        gaps = np.empty(trials)
        sup_gaps = np.empty(trials)
        for t in range(trials):
            y_energy = float(np.dot(ys[t], ys[t]))
            hat_idx = int(np.argmin(y_energy - comp[t]))
            gaps[t] = direct_proj[bar_idx] - direct_proj[hat_idx]
            sup_gaps[t] = float(np.max(np.abs(comp[t] - direct_proj)))
            detail.append(
                TrialRecord(
                    m=m,
                    trial=t,
                    seed=seeds[t],
                    gap=float(gaps[t]),
                    sup_gap=float(sup_gaps[t]),
                    theta_hat=points[hat_idx].copy(),
                )
            )
        rows.append(
            ScalingRow(
                m=m,
                trials=trials,
                median_gap=float(np.median(gaps)),
                median_sup_gap=float(np.median(sup_gaps)),
                quantiles=(
                    float(np.quantile(sup_gaps, 0.1)),
                    float(np.quantile(sup_gaps, 0.9)),
                ),
            )
        )
    return ScalingResult(
        rows=rows,
        trials=detail,
        theta_bar=theta_bar,
        direct_error_sq=float(1.0 - direct_proj[bar_idx]),
    )


# ---------------------------------------------------------------------------
# Distortion of pairwise differences under the sketch


def _sample_theta(family: Family, rng: np.random.Generator) -> np.ndarray:
    if isinstance(family, TabulatedFamily):
        return family.theta_grid[rng.integers(0, family.theta_grid.shape[0])]
    lo, hi = family.domain.lower, family.domain.upper
    return lo + rng.uniform(0.0, 1.0, lo.shape[0]) * (hi - lo)


def pairwise_distortion(
    family: Family, phi: GaussianSketch, pair_count: int, seed: int = 0
) -> float:
    """Max over sampled cross-subspace pairs of the relative distortion
    | ||Phi(x1 - x2)||^2 / ||x1 - x2||^2 - 1 |.

    Pairs combine random parameters with random unit coefficient vectors;
    numerically coincident pairs are resampled.
    """
    if pair_count < 1:
        raise ConfigError("need at least one pair")
    rng = np.random.default_rng(seed)
    k = family.subspace_dim
    worst = 0.0
    accepted = 0
    attempts = 0
    while accepted < pair_count:
        attempts += 1
        if attempts > 100 * pair_count:
            raise NumericalError(
                "could not form separated pairs; the family diameter is numerically zero"
            )
        coefs = rng.standard_normal((2, k))
        norms = np.linalg.norm(coefs, axis=1)
        if np.any(norms == 0):
            continue
        coefs /= norms[:, None]
        x1 = basis_at(family, _sample_theta(family, rng)) @ coefs[0]
        x2 = basis_at(family, _sample_theta(family, rng)) @ coefs[1]
        diff = x1 - x2
        d2 = float(np.dot(diff, diff))
        if np.sqrt(d2) < 1e-8:
            continue
        proj = phi.apply(diff)
        worst = max(worst, abs(float(np.dot(proj, proj)) / d2 - 1.0))
        accepted += 1
    return worst


def lattice_distortion(
    family: Family,
    phi: GaussianSketch,
    lattice: Optional[Lattice] = None,
    seed: int = 0,
) -> float:
    """Max over evaluation points of | ||Phi x||^2 / ||x||^2 - 1 | for one
    random unit vector x per subspace.  Never exceeds the gram-distortion
    supremum measured on the same points and sketch."""
    rng = np.random.default_rng(seed)
    pts = _points_for(family, lattice)
    if pts is None:
        pts = np.asarray(family.theta_grid)
    worst = 0.0
    for i in range(pts.shape[0]):
        v = basis_at(family, pts[i])
        c = rng.standard_normal(v.shape[1])
        norm = np.linalg.norm(c)
        if norm == 0:
            continue
        x = v @ (c / norm)
        x2 = float(np.dot(x, x))
        proj = phi.apply(x)
        worst = max(worst, abs(float(np.dot(proj, proj)) / x2 - 1.0))
    return worst
