"""Acceptance suite: every criterion at its pinned tolerance.

Each test prints one `[PASS] criterion N` line (run with -s to see them);
a failed assertion marks the criterion failed.  Runtime budgets are
asserted too.
"""

import time

import numpy as np
import pytest

from conftest import dense_projector_norm, random_orthobasis
from contmatch.cli import main as cli_main
from contmatch.families import (
    gabor_family,
    gaussian_pulse_family,
    lot_family,
    square_pulse_family,
)
from contmatch.geometry import (
    analytic_regularity,
    covering_profile,
    delta_constant,
    family_regularity,
    fit_regularity,
)
from contmatch.lattice import Lattice
from contmatch.linalg import projector_distance, residual_projection
from contmatch.signal import (
    SampleGrid,
    gaussian_pulse,
    raised_cosine_pulse,
    shift,
    sobolev_norm,
    total_variation,
)
from contmatch.sketch import make_sketch
from contmatch.verify import check_gap_bound_many, derive_seed, scaling_experiment

RNG_SEED = 20240809


def report(n, message):
    print(f"[PASS] criterion {n}: {message}")


@pytest.fixture(scope="module")
def gabor_setup():
    grid = SampleGrid.over(-0.37, 0.37, 2048)
    family = gabor_family(
        0.02, (-0.25, 0.25), (2 * np.pi * 50, 2 * np.pi * 250), grid
    )
    h0 = raised_cosine_pulse(grid).values
    return family, h0


def test_criterion_1_gaussian_autocorrelation():
    started = time.perf_counter()
    sigma = 0.05
    grid = SampleGrid.over(-1.0, 1.0, 4096)
    pulse = gaussian_pulse(grid, sigma)
    d = grid.spacing
    rng = np.random.default_rng(RNG_SEED)
    worst = 0.0
    for _ in range(50):
        t1, t2 = rng.uniform(-0.45, 0.45, 2)
        diff = shift(pulse, t1).values - shift(pulse, t2).values
        measured = d * float(np.dot(diff, diff))
        predicted = 2.0 * (1.0 - np.exp(-((t2 - t1) ** 2) / (4 * sigma**2)))
        worst = max(worst, abs(measured - predicted))
    elapsed = time.perf_counter() - started
    assert worst <= 1e-6
    assert elapsed < 5.0
    report(1, f"autocorrelation max abs error {worst:.2e} over 50 pairs ({elapsed:.2f}s)")


def test_criterion_2_gap_bound_per_realization(gabor_setup):
    started = time.perf_counter()
    family, h0 = gabor_setup
    lattice = Lattice.from_box(family.domain, (64, 64))
    phis = [
        make_sketch(40, family.ambient_dim, derive_seed(0, 40, i)) for i in range(20)
    ]
    reports = check_gap_bound_many(family, phis, h0, lattice)
    checkable = [r for r in reports if r.delta1 < 1.0]
    for r in checkable:
        assert r.sup_gap <= r.bound + 1e-9
    elapsed = time.perf_counter() - started
    assert elapsed < 180.0
    report(
        2,
        f"gap bound held in {len(checkable)}/{len(checkable)} realizations with "
        f"delta1<1 ({len(reports) - len(checkable)} vacuous of 20) ({elapsed:.1f}s)",
    )


def test_criterion_3_minimizer_cell_reproduction(gabor_setup):
    started = time.perf_counter()
    family, h0 = gabor_setup
    lattice = Lattice.from_box(family.domain, (128, 128))
    spacing = lattice.spacings()
    result = scaling_experiment(family, h0, [10, 30], trials=25, base_seed=0, lattice=lattice)
    theta_bar = result.theta_bar
    target = np.array([0.0, 2 * np.pi * 128])
    assert np.all(np.abs(theta_bar - target) <= spacing)  # cell containing the target

    hits = sum(
        1
        for t in result.trials
        if t.m == 30 and np.all(np.abs(t.theta_hat - theta_bar) <= spacing + 1e-12)
    )
    assert hits >= 0.8 * 25

    med = {row.m: row.median_sup_gap for row in result.rows}
    assert med[30] < med[10]
    elapsed = time.perf_counter() - started
    assert elapsed < 300.0
    report(
        3,
        f"direct min at {np.round(theta_bar, 4)} (target cell hit), M=30 same-cell "
        f"{hits}/25, median sup gap {med[30]:.3f} (M=30) < {med[10]:.3f} (M=10) "
        f"({elapsed:.1f}s)",
    )


def test_criterion_4_sup_gap_scaling(gabor_setup):
    started = time.perf_counter()
    family, h0 = gabor_setup
    lattice = Lattice.from_box(family.domain, (64, 64))
    m_list = [10, 20, 40, 80, 160]
    result = scaling_experiment(family, h0, m_list, trials=25, base_seed=0, lattice=lattice)
    med = np.array([row.median_sup_gap for row in result.rows])
    slope = float(np.polyfit(np.log(np.array(m_list, float)), np.log(med), 1)[0])
    assert -0.75 <= slope <= -0.25
    elapsed = time.perf_counter() - started
    assert elapsed < 600.0
    report(
        4,
        f"median sup gap {np.round(med, 3)} over M={m_list}, log-log slope "
        f"{slope:.3f} in [-0.75, -0.25] ({elapsed:.1f}s)",
    )


def test_criterion_5_covering_bounds():
    started = time.perf_counter()
    eps = [0.5, 0.25, 0.125]

    gauss = gaussian_pulse_family(0.05, (0.0, 1.0), SampleGrid.over(-0.4, 1.4, 4096))
    d = gauss.ambient.spacing
    probe = Lattice((0.0 + 4 * d * np.arange(int(1.0 / (4 * d)) + 1),))
    counts_g = covering_profile(gauss, eps, probe)
    reg_g = family_regularity(gauss)
    for e, c in zip(eps, counts_g):
        assert c <= reg_g.n0 * e ** (-reg_g.alpha)
    alpha_g = fit_regularity(eps, counts_g)[1]
    assert 0.8 <= alpha_g <= 1.2

    square = square_pulse_family(0.1, (0.0, 1.0), SampleGrid.over(-0.1, 1.1, 32768))
    ds = square.ambient.spacing
    probe_s = Lattice((0.0 + ds * np.arange(int(1.0 / ds) + 1),))
    counts_s = covering_profile(square, eps, probe_s)
    reg_s = family_regularity(square)
    for e, c in zip(eps, counts_s):
        assert c <= reg_s.n0 * e ** (-reg_s.alpha)
    alpha_s = fit_regularity(eps, counts_s)[1]
    assert 1.6 <= alpha_s <= 2.4

    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    report(
        5,
        f"gaussian counts {counts_g} (alpha {alpha_g:.2f}), square counts "
        f"{counts_s} (alpha {alpha_s:.2f}), all below analytic bounds ({elapsed:.1f}s)",
    )


def test_criterion_6_complexity_constants():
    started = time.perf_counter()
    for t_over_sigma in (1.0, 10.0, 50.0):
        sq = analytic_regularity("square", sigma=1.0, span=t_over_sigma)
        assert abs(sq.delta - (2 * np.log(t_over_sigma) + 8.93)) <= 0.02
    for lt in (np.e, 5.0, 20.0):
        sob = analytic_regularity("sobolev", L=lt, span=1.0)
        assert abs(sob.delta - (2 * np.log(lt) + 4.08)) <= 0.02
    for k in (2, 4, 8):
        lot = analytic_regularity("lot", sigma=0.1, span=1.0, subspace_dim=k)
        assert abs(lot.delta - (6 * np.log(k) + 2 * np.log(10.0) + 16.26)) <= 0.02
    ga = analytic_regularity("gaussian", sigma=0.05, span=1.0)
    assert ga.delta == delta_constant(ga.n0, ga.alpha)
    assert any("4.78" in note for note in ga.notes)
    gb = analytic_regularity(
        "gabor", sigma=0.02, span=0.5, omega_lo=2 * np.pi * 50, omega_hi=2 * np.pi * 250
    )
    assert gb.delta == delta_constant(gb.n0, gb.alpha)
    assert any("8.36" in note for note in gb.notes)
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    report(6, f"closed-form complexity constants reproduced, discrepancies flagged ({elapsed:.2f}s)")


def test_criterion_7_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(RNG_SEED)
    n = 64
    worst_dist = worst_gram = worst_cross = 0.0
    for i in range(100):
        k1, k2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        v1 = random_orthobasis(rng, n, k1)
        v2 = random_orthobasis(rng, n, k2)
        fast = projector_distance(v1, v2)
        worst_dist = max(worst_dist, abs(fast - dense_projector_norm(v1, v2)))

        phi = make_sketch(8, n, seed=1000 + i)
        a = phi.matrix @ v1
        fast_gram = float(np.max(np.abs(np.linalg.eigvalsh(np.eye(k1) - a.T @ a))))
        p = v1 @ v1.T
        g = p - p @ phi.matrix.T @ phi.matrix @ p
        dense_gram = float(np.max(np.abs(np.linalg.eigvalsh(g))))
        worst_gram = max(worst_gram, abs(fast_gram - dense_gram))

        h0 = rng.standard_normal(n)
        h0 /= np.linalg.norm(h0)
        resid = residual_projection(v1, h0)
        fast_cross = float(np.linalg.norm(a.T @ phi.apply(resid)))
        dense_cross = float(np.linalg.norm(p @ phi.matrix.T @ phi.matrix @ resid))
        worst_cross = max(worst_cross, abs(fast_cross - dense_cross))
    elapsed = time.perf_counter() - started
    assert worst_dist <= 1e-8
    assert worst_gram <= 1e-8
    assert worst_cross <= 1e-8
    assert elapsed < 30.0
    report(
        7,
        f"dense-oracle deviations: distance {worst_dist:.1e}, gram {worst_gram:.1e}, "
        f"crosstalk {worst_cross:.1e} over 100 instances ({elapsed:.1f}s)",
    )


def test_criterion_8_shift_bound_suite(gabor_setup):
    started = time.perf_counter()
    rng = np.random.default_rng(RNG_SEED)

    # smooth families: ||v(.-t1) - v(.-t2)||_L2 <= L |t1 - t2| (1% slack)
    gauss = gaussian_pulse_family(0.05, (0.0, 1.0), SampleGrid.over(-0.4, 1.4, 4096))
    d = gauss.ambient.spacing
    atom = gauss.atom_signals(0.5)[0]
    L = sobolev_norm(atom)
    for _ in range(100):
        t1, t2 = rng.uniform(0.0, 1.0, 2)
        diff = shift(atom, t1 - 0.5).values - shift(atom, t2 - 0.5).values
        assert np.sqrt(d * float(np.dot(diff, diff))) <= L * abs(t1 - t2) * 1.01 + 1e-12

    gabor, _h0 = gabor_setup
    dg = gabor.ambient.spacing
    for _ in range(100):
        w = rng.uniform(2 * np.pi * 50, 2 * np.pi * 250)
        atoms = gabor.atom_signals(np.array([0.0, w]))
        a = atoms[int(rng.integers(0, 2))]
        La = sobolev_norm(a)
        t1, t2 = rng.uniform(-0.2, 0.2, 2)
        diff = shift(a, t1).values - shift(a, t2).values
        assert np.sqrt(dg * float(np.dot(diff, diff))) <= La * abs(t1 - t2) * 1.01 + 1e-12

    # arc-length families: ||v(.-t1) - v(.-t2)|| <= TV sqrt|t1 - t2| (1% slack)
    square = square_pulse_family(0.1, (0.0, 1.0), SampleGrid.over(-0.1, 1.1, 8192))
    ds = square.ambient.spacing
    sq_atom = square.atom_signals(0.5)[0]
    tv = total_variation(sq_atom)
    for _ in range(100):
        m1, m2 = rng.integers(-3000, 3000, 2)
        if m1 == m2:
            continue
        diff = shift(sq_atom, m1 * ds).values - shift(sq_atom, m2 * ds).values
        lhs = np.sqrt(ds * float(np.dot(diff, diff)))
        assert lhs <= tv * np.sqrt(abs(m1 - m2) * ds) * 1.01

    lot = lot_family(0.5, 3, (0.0, 0.5), SampleGrid.over(-0.3, 1.2, 8192))
    dl = lot.ambient.spacing
    lot_atoms = lot.atom_signals(0.25)
    for _ in range(100):
        a = lot_atoms[int(rng.integers(0, 3))]
        tva = total_variation(a)
        m1, m2 = rng.integers(-1500, 1500, 2)
        if m1 == m2:
            continue
        diff = shift(a, m1 * dl).values - shift(a, m2 * dl).values
        lhs = np.sqrt(dl * float(np.dot(diff, diff)))
        assert lhs <= tva * np.sqrt(abs(m1 - m2) * dl) * 1.01

    # atom-pairing projector bound over 200 gabor parameter pairs
    for _ in range(200):
        th1 = np.array([rng.uniform(-0.2, 0.2), rng.uniform(2 * np.pi * 50, 2 * np.pi * 250)])
        th2 = np.array([rng.uniform(-0.2, 0.2), rng.uniform(2 * np.pi * 50, 2 * np.pi * 250)])
        a1 = gabor.atom_signals(th1)
        a2 = gabor.atom_signals(th2)
        total = sum(dg * float(np.sum((u.values - w.values) ** 2)) for u, w in zip(a1, a2))
        dist = projector_distance(gabor.basis(th1), gabor.basis(th2))
        assert dist <= 2.0 * np.sqrt(total) * (1 + 1e-6) + 1e-12

    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report(8, f"shift bounds and atom-pairing bound held on every sampled pair ({elapsed:.1f}s)")


def test_criterion_9_cli_determinism(tmp_path):
    started = time.perf_counter()
    argsets = [
        ["surface", "--family", "gaussian", "--sigma", "0.05", "--range", "0:1",
         "--grid-count", "512", "--lattice", "17", "--m", "8", "--seed", "11"],
        ["verify", "--family", "gaussian", "--sigma", "0.05", "--range", "0:1",
         "--grid-count", "512", "--lattice", "17", "--m", "6", "--trials", "3",
         "--seed", "5", "--signal", "atom:0.4", "--format", "json"],
    ]
    for idx, argv in enumerate(argsets):
        blobs = []
        for run_id in ("r1", "r2"):
            ext = "json" if "json" in argv else "csv"
            out = tmp_path / f"{idx}_{run_id}.{ext}"
            code = cli_main([str(a) for a in argv + ["--out", str(out)]])
            assert code == 0
            data = out.read_bytes().replace(run_id.encode(), b"rX")
            fig = out.with_suffix(".png").read_bytes()
            blobs.append((data, fig))
        assert blobs[0] == blobs[1]
    elapsed = time.perf_counter() - started
    report(9, f"repeated CLI runs byte-identical (data and figures) ({elapsed:.1f}s)")
