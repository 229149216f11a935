"""Direct and sketched subspace matching.

The direct matcher minimizes the residual projection energy of a signal
over the parameter box; the sketched matcher does the same on compressed
observations, realizing the sketched-subspace projector by thin-QR least
squares against Phi V_theta (an M x K problem, never an M x M projector).

The continuous argmin is approximated by a uniform lattice search plus
shrink-and-refine rounds around the incumbent; ties break toward the
lexicographically smallest parameter vector so results are reproducible.

``sweep`` is the shared evaluation engine: it walks a set of parameter
points in chunks and returns, per point (and per sketch), projection
energies plus the two sketch-conditioning diagnostics used by the
verification module.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, NumericalError
from .families import SubspaceFamily, TabulatedFamily
from .lattice import Lattice, _resolve_resolution
from .sketch import GaussianSketch

Family = Union[SubspaceFamily, TabulatedFamily]

QR_RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SearchPlan:
    """Lattice resolution plus shrink-refine schedule for the matchers."""

    grid_resolution: Union[int, tuple] = 128
    refinement_rounds: int = 2
    shrink_factor: float = 8.0

    def __post_init__(self):
        res = self.grid_resolution
        res_tuple = (res,) if isinstance(res, (int, np.integer)) else tuple(res)
        if any(int(r) < 2 for r in res_tuple):
            raise ConfigError(f"search lattice needs >= 2 points per dimension, got {res}")
        if self.refinement_rounds < 0:
            raise ConfigError("refinement_rounds must be >= 0")
        if not self.shrink_factor > 1:
            raise ConfigError("shrink_factor must exceed 1")


@dataclass
class Surface:
    """Objective values over a lattice, stored in row-major lattice shape."""

    axes: tuple
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.axes)

    def argmin_theta(self) -> np.ndarray:
        flat = int(np.argmin(self.values.reshape(-1)))
        idx = np.unravel_index(flat, self.values.shape)
        return np.array([self.axes[d][idx[d]] for d in range(len(self.axes))])


@dataclass
class MatchResult:
    """Minimizer, residual energy, and the relative error it implies."""

    theta_star: np.ndarray
    objective: float
    relative_error_sq: float
    raw_norm: float
    surface: Optional[Surface] = None
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Evaluation engine


def _point_set(family: Family, thetas: Optional[np.ndarray]):
    """Normalize the two family kinds into (thetas, basis-for-chunk)."""
    if isinstance(family, TabulatedFamily):
        order = np.lexsort(family.theta_grid.T[::-1])
        pts = family.theta_grid[order]
        ordered = [family.bases[i] for i in order]

        def bases(lo: int, hi: int) -> np.ndarray:
            return np.stack(ordered[lo:hi], axis=0).transpose(1, 0, 2)

        return pts, bases, family.ambient_dim, family.subspace_dim
    if thetas is None:
        raise ConfigError("parameterized families need explicit evaluation points")
    pts = np.atleast_2d(np.asarray(thetas, dtype=float))

    def bases(lo: int, hi: int) -> np.ndarray:
        cols = [family.basis_eval(pts[i]) for i in range(lo, hi)]
        return np.stack(cols, axis=0).transpose(1, 0, 2)

    return pts, bases, family.ambient_dim, family.subspace_dim


def _chunk_size(n: int, k: int, n_sketch: int, m: int) -> int:
    budget_bases = int(6e6 // max(n * k, 1))
    budget_sketched = int(6e6 // max(n_sketch * m * k, 1)) if n_sketch else budget_bases
    return max(16, min(budget_bases, budget_sketched, 4096))


def sweep(
    family: Family,
    thetas: Optional[np.ndarray] = None,
    *,
    h0: Optional[np.ndarray] = None,
    phis: Optional[Sequence[GaussianSketch]] = None,
    ys: Optional[np.ndarray] = None,
    direct: bool = False,
    compressed: bool = False,
    gram: bool = False,
    crosstalk: bool = False,
    threads: int = 1,
) -> dict:
    """Evaluate projection energies and sketch diagnostics over points.

    Returns a dict with the requested keys:

    * ``points``: (P, D) evaluation points (lexicographically ordered for
      tabulated families).
    * ``direct``: (P,) squared projection energies ||V^T h0||^2.
    * ``compressed``: (S, P) sketched projection energies ||Ptilde y||^2.
    * ``gram``: (S, P) values ||I - (Phi V)^T (Phi V)||.
    * ``crosstalk``: (S, P) values ||(Phi V)^T Phi (h0 - V V^T h0)||.

    All sketches must share the same row count; results are independent of
    ``threads`` and of chunk boundaries.
    """
    pts, bases_for, n, k = _point_set(family, thetas)
    p = pts.shape[0]
    out: dict = {"points": pts}
    if direct or crosstalk:
        if h0 is None:
            raise ConfigError("this sweep needs the signal h0")
        h0 = np.asarray(h0, dtype=float)
        if h0.shape != (n,):
            raise ConfigError(f"h0 shape {h0.shape} does not match ambient dim {n}")
    n_sketch = 0
    phi_stack = None
    if compressed or gram or crosstalk:
        if not phis:
            raise ConfigError("this sweep needs at least one sketch")
        rows = {phi.rows for phi in phis}
        if len(rows) != 1:
            raise ConfigError("all sketches in one sweep must share the row count")
        for phi in phis:
            if phi.cols != n:
                raise ConfigError(f"sketch cols {phi.cols} do not match ambient dim {n}")
        n_sketch = len(phis)
        m = rows.pop()
        phi_stack = np.concatenate([phi.matrix for phi in phis], axis=0)
        if compressed:
            if ys is None:
                raise ConfigError("compressed sweep needs observations ys")
            ys = np.atleast_2d(np.asarray(ys, dtype=float))
            if ys.shape != (n_sketch, m):
                raise ConfigError(f"ys shape {ys.shape} != ({n_sketch}, {m})")
    else:
        m = 0

    if direct:
        out["direct"] = np.empty(p)
    if compressed:
        out["compressed"] = np.empty((n_sketch, p))
    if gram:
        out["gram"] = np.empty((n_sketch, p))
    if crosstalk:
        out["crosstalk"] = np.empty((n_sketch, p))

    chunk = _chunk_size(n, k, n_sketch, m)
    ranges = [(lo, min(lo + chunk, p)) for lo in range(0, p, chunk)]

    def run_chunk(bounds) -> None:
        lo, hi = bounds
        b = bases_for(lo, hi)  # (N, C, K)
        if direct or crosstalk:
            w = np.einsum("nck,n->ck", b, h0)
        if direct:
            out["direct"][lo:hi] = np.einsum("ck,ck->c", w, w)
        if n_sketch:
            c = b.shape[1]
            a = (phi_stack @ b.reshape(n, c * k)).reshape(n_sketch, m, c, k)
            if gram:
                g = np.einsum("smck,smcl->sckl", a, a)
                eig = np.linalg.eigvalsh(g)
                out["gram"][:, lo:hi] = np.max(np.abs(1.0 - eig), axis=-1)
            if compressed:
                q, r = np.linalg.qr(a.transpose(0, 2, 1, 3))
                diag = np.abs(np.einsum("sckk->sck", r))
                dmax = diag.max(axis=-1)
                dmin = diag.min(axis=-1)
                if np.any(dmax == 0.0) or np.any(dmin < QR_RANK_TOLERANCE * dmax):
                    raise NumericalError(
                        "sketched basis Phi V is numerically rank deficient"
                    )
                t = np.einsum("scmk,sm->sck", q, ys)
                out["compressed"][:, lo:hi] = np.einsum("sck,sck->sc", t, t)
            if crosstalk:
                resid = h0[:, None] - np.einsum("nck,ck->nc", b, w)
                pr = (phi_stack @ resid).reshape(n_sketch, m, c)
                b2 = np.einsum("smck,smc->sck", a, pr)
                out["crosstalk"][:, lo:hi] = np.sqrt(np.einsum("sck,sck->sc", b2, b2))

    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, ranges))
    else:
        for bounds in ranges:
            run_chunk(bounds)
    return out


# ---------------------------------------------------------------------------
# Matching programs


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    return tuple(a) < tuple(b)


def _best_point(pts: np.ndarray, objectives: np.ndarray):
    i = int(np.argmin(objectives))
    return pts[i].copy(), float(objectives[i])


def _normalize(h0: np.ndarray) -> tuple:
    h0 = np.asarray(h0, dtype=float).reshape(-1)
    norm = float(np.linalg.norm(h0))
    if norm == 0.0 or not np.isfinite(norm):
        raise ConfigError("signal must be nonzero and finite")
    return h0 / norm, norm


def _refined_boxes(domain, theta: np.ndarray, shrink: float, round_index: int):
    span = domain.upper - domain.lower
    width = span / (shrink**round_index)
    lo = np.minimum(np.maximum(theta - width / 2, domain.lower), domain.upper - width)
    return lo, lo + width


def match_direct(
    family: Family,
    h0: np.ndarray,
    plan: Optional[SearchPlan] = None,
    *,
    keep_surface: bool = False,
    threads: int = 1,
) -> MatchResult:
    """Minimize ||h0 - P_theta h0||^2 over the family.

    The signal is normalized to unit energy on entry (its raw norm is kept
    in the result), so the objective equals the relative error squared.
    Tabulated families are searched exhaustively over their grid points.
    """
    plan = plan or SearchPlan()
    h0n, raw_norm = _normalize(h0)

    if isinstance(family, TabulatedFamily):
        res = sweep(family, h0=h0n, direct=True)
        objectives = 1.0 - res["direct"]
        theta, objective = _best_point(res["points"], objectives)
        return MatchResult(
            theta_star=theta,
            objective=objective,
            relative_error_sq=objective,
            raw_norm=raw_norm,
            meta={"kind": "direct", "family": family.name, "refined": False},
        )

    resolution = _resolve_resolution(plan.grid_resolution, family.param_dim)
    base = Lattice.from_box(family.domain, resolution)
    res = sweep(family, base.points(), h0=h0n, direct=True, threads=threads)
    objectives = 1.0 - res["direct"]
    theta, objective = _best_point(res["points"], objectives)

    for r in range(1, plan.refinement_rounds + 1):
        lo, hi = _refined_boxes(family.domain, theta, plan.shrink_factor, r)
        axes = tuple(np.linspace(lo[d], hi[d], resolution[d]) for d in range(family.param_dim))
        pts = Lattice(axes).points()
        vals = 1.0 - sweep(family, pts, h0=h0n, direct=True, threads=threads)["direct"]
        cand_theta, cand_obj = _best_point(pts, vals)
        if cand_obj < objective or (cand_obj == objective and _lex_less(cand_theta, theta)):
            theta, objective = cand_theta, cand_obj

    surface = None
    if keep_surface:
        surface = Surface(
            axes=base.axes,
            values=objectives.reshape(base.shape),
            kind="direct",
            meta={"normalized": True},
        )
    return MatchResult(
        theta_star=theta,
        objective=max(objective, 0.0),
        relative_error_sq=max(objective, 0.0),
        raw_norm=raw_norm,
        surface=surface,
        meta={"kind": "direct", "plan": plan, "refined": plan.refinement_rounds > 0},
    )


def match_compressed(
    family: Family,
    phi: GaussianSketch,
    y: np.ndarray,
    plan: Optional[SearchPlan] = None,
    *,
    keep_surface: bool = False,
    threads: int = 1,
) -> MatchResult:
    """Minimize ||y - Ptilde_theta y||^2 over the family, where Ptilde is the
    projector onto the sketched subspace range(Phi V_theta)."""
    plan = plan or SearchPlan()
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (phi.rows,):
        raise ConfigError(f"observation length {y.shape[0]} != sketch rows {phi.rows}")
    y_energy = float(np.dot(y, y))

    def objectives_at(pts_or_none):
        res = sweep(
            family,
            pts_or_none,
            phis=[phi],
            ys=y[None, :],
            compressed=True,
            threads=threads,
        )
        return res["points"], y_energy - res["compressed"][0]

    if isinstance(family, TabulatedFamily):
        pts, objectives = objectives_at(None)
        theta, objective = _best_point(pts, objectives)
        rel = objective / y_energy if y_energy > 0 else 0.0
        return MatchResult(
            theta_star=theta,
            objective=objective,
            relative_error_sq=rel,
            raw_norm=float(np.sqrt(y_energy)),
            meta={"kind": "compressed", "seed": phi.seed, "family": family.name},
        )

    resolution = _resolve_resolution(plan.grid_resolution, family.param_dim)
    base = Lattice.from_box(family.domain, resolution)
    pts, objectives = objectives_at(base.points())
    theta, objective = _best_point(pts, objectives)

    for r in range(1, plan.refinement_rounds + 1):
        lo, hi = _refined_boxes(family.domain, theta, plan.shrink_factor, r)
        axes = tuple(np.linspace(lo[d], hi[d], resolution[d]) for d in range(family.param_dim))
        cand_pts, cand_vals = objectives_at(Lattice(axes).points())
        cand_theta, cand_obj = _best_point(cand_pts, cand_vals)
        if cand_obj < objective or (cand_obj == objective and _lex_less(cand_theta, theta)):
            theta, objective = cand_theta, cand_obj

    surface = None
    if keep_surface:
        surface = Surface(
            axes=base.axes,
            values=objectives.reshape(base.shape),
            kind="compressed",
            meta={"seed": phi.seed, "rows": phi.rows},
        )
    rel = objective / y_energy if y_energy > 0 else 0.0
    return MatchResult(
        theta_star=theta,
        objective=max(objective, 0.0),
        relative_error_sq=max(rel, 0.0),
        raw_norm=float(np.sqrt(y_energy)),
        surface=surface,
        meta={"kind": "compressed", "plan": plan, "seed": phi.seed, "rows": phi.rows},
    )


def energy_surface(
    family: SubspaceFamily,
    objective_kind: str,
    lattice: Lattice,
    *,
    h0: Optional[np.ndarray] = None,
    phi: Optional[GaussianSketch] = None,
    y: Optional[np.ndarray] = None,
    threads: int = 1,
) -> Surface:
    """Dense objective evaluation over a lattice (no normalization)."""
    if isinstance(family, TabulatedFamily):
        raise ConfigError("energy_surface needs a parameterized family; use match_* instead")
    pts = lattice.points()
    if objective_kind == "direct":
        if h0 is None:
            raise ConfigError("direct surface needs h0")
        h0 = np.asarray(h0, dtype=float).reshape(-1)
        proj = sweep(family, pts, h0=h0, direct=True, threads=threads)["direct"]
        values = float(np.dot(h0, h0)) - proj
        meta = {"normalized": False}
    elif objective_kind == "compressed":
        if phi is None or y is None:
            raise ConfigError("compressed surface needs a sketch and observations")
        y = np.asarray(y, dtype=float).reshape(-1)
        proj = sweep(
            family, pts, phis=[phi], ys=y[None, :], compressed=True, threads=threads
        )["compressed"][0]
        values = float(np.dot(y, y)) - proj
        meta = {"seed": phi.seed, "rows": phi.rows}
    else:
        raise ConfigError(f"unknown objective kind {objective_kind!r}")
    return Surface(
        axes=lattice.axes,
        values=values.reshape(lattice.shape),
        kind=objective_kind,
        meta=meta,
    )


def basis_at(family: Family, theta) -> np.ndarray:
    """Orthonormal basis at a parameter vector; for tabulated families the
    vector must coincide with a stored grid point."""
    if isinstance(family, TabulatedFamily):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        gaps = np.max(np.abs(family.theta_grid - theta[None, :]), axis=1)
        i = int(np.argmin(gaps))
        if gaps[i] > 1e-9 * (1.0 + float(np.max(np.abs(theta)))):
            raise ConfigError("theta is not a grid point of the tabulated family")
        return family.bases[i]
    return family.basis(theta)


def approximation_gap(
    family: Family, h0: np.ndarray, theta_bar: np.ndarray, theta_hat: np.ndarray
) -> float:
    """Excess relative error of the sketched match over the direct match:
    ||P_bar h0||^2 - ||P_hat h0||^2 on the unit-normalized signal."""
    h0n, _ = _normalize(h0)
    energies = []
    for theta in (theta_bar, theta_hat):
        w = basis_at(family, theta).T @ h0n
        energies.append(float(np.dot(w, w)))
    return energies[0] - energies[1]
