import numpy as np
import pytest

from conftest import random_orthobasis
from contmatch.errors import ConfigError
from contmatch.families import TabulatedFamily, gabor_family, gaussian_pulse_family
from contmatch.lattice import Lattice
from contmatch.linalg import residual_projection
from contmatch.matching import sweep
from contmatch.signal import SampleGrid
from contmatch.sketch import make_sketch, orthogonal_sketch
from contmatch.verify import (
    ScalingRow,
    check_gap_bound,
    check_gap_bound_many,
    derive_seed,
    gap_bound,
    lattice_distortion,
    pairwise_distortion,
    residual_crosstalk,
    scaling_experiment,
    sketch_gram_distortion,
)

GRID = SampleGrid.over(-0.4, 1.4, 512)
GAUSS = gaussian_pulse_family(0.05, (0.0, 1.0), GRID)
LATTICE = Lattice.from_box(GAUSS.domain, 33)


def small_tabulated(rng, n=48, k=2, q=6):
    bases = tuple(random_orthobasis(rng, n, k) for _ in range(q))
    return TabulatedFamily(theta_grid=np.arange(float(q))[:, None], bases=bases)


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, 30, 0) == derive_seed(0, 30, 0)
    seeds = {derive_seed(0, m, i) for m in (10, 30) for i in range(50)}
    assert len(seeds) == 100


def test_gram_distortion_isometry():
    phi = orthogonal_sketch(GRID.count, seed=1)
    est = sketch_gram_distortion(GAUSS, phi, LATTICE)
    assert est.sup_value <= 1e-10


def test_gram_distortion_dense_oracle(rng):
    fam = small_tabulated(rng, n=64, k=3)
    phi = make_sketch(12, 64, seed=4)
    est = sketch_gram_distortion(fam, phi)
    dense = 0.0
    for v in fam.bases:
        p = v @ v.T
        g = p - p @ phi.matrix.T @ phi.matrix @ p
        dense = max(dense, float(np.max(np.abs(np.linalg.eigvalsh(g)))))
    assert abs(est.sup_value - dense) <= 1e-8


def test_gram_distortion_small_domain_usually_below_one():
    fam = gabor_family(
        0.02, (-0.05, 0.05), (2 * np.pi * 90, 2 * np.pi * 110),
        SampleGrid.over(-0.2, 0.2, 1024),
    )
    lat = Lattice.from_box(fam.domain, (16, 16))
    below = 0
    for i in range(20):
        phi = make_sketch(40, 1024, seed=derive_seed(1, 40, i))
        if sketch_gram_distortion(fam, phi, lat).sup_value < 1.0:
            below += 1
    assert below >= 19  # >= 95% of realizations


def test_crosstalk_zero_cases(rng):
    fam = small_tabulated(rng, q=1)
    h0 = fam.bases[0] @ np.array([0.6, 0.8])
    phi = make_sketch(12, fam.ambient_dim, seed=9)
    assert residual_crosstalk(fam, phi, h0).sup_value <= 1e-10

    phi_iso = orthogonal_sketch(GRID.count, seed=2)
    h0 = GAUSS.basis([0.3])[:, 0] + 0.2 * np.ones(GRID.count) / np.sqrt(GRID.count)
    assert residual_crosstalk(GAUSS, phi_iso, h0, LATTICE).sup_value <= 1e-10


def test_crosstalk_dense_oracle(rng):
    fam = small_tabulated(rng, n=64, k=3)
    phi = make_sketch(12, 64, seed=5)
    h0 = rng.standard_normal(64)
    h0 /= np.linalg.norm(h0)
    est = residual_crosstalk(fam, phi, h0)
    ptp = phi.matrix.T @ phi.matrix
    dense = max(
        float(np.linalg.norm(v @ v.T @ ptp @ residual_projection(v, h0)))
        for v in fam.bases
    )
    assert abs(est.sup_value - dense) <= 1e-8


def test_gap_bound_formula():
    assert gap_bound(0.0, 0.0) == 0.0
    assert abs(gap_bound(0.1, 0.1) - 0.6) <= 1e-15
    values = [gap_bound(d1, 0.2) for d1 in np.linspace(0.0, 0.99, 30)]
    assert np.all(np.diff(values) > 0)  # increasing toward the pole
    with pytest.raises(ConfigError):
        gap_bound(1.0, 0.1)
    with pytest.raises(ConfigError):
        gap_bound(-0.1, 0.1)


def test_check_gap_bound_isometry():
    phi = orthogonal_sketch(GRID.count, seed=6)
    h0 = GAUSS.basis([0.4])[:, 0]
    rep = check_gap_bound(GAUSS, phi, h0, LATTICE)
    assert rep.sup_gap <= 1e-10
    assert rep.bound <= 1e-9
    assert rep.holds


def test_check_gap_bound_holds_per_realization(rng):
    h0 = GAUSS.basis([0.3])[:, 0] + 0.3 * rng.standard_normal(GRID.count)
    phis = [make_sketch(20, GRID.count, seed=derive_seed(7, 20, i)) for i in range(20)]
    reports = check_gap_bound_many(GAUSS, phis, h0, LATTICE)
    for rep in reports:
        if not rep.vacuous:
            assert rep.holds
    # batched and single-sketch paths agree (up to gemm-blocking roundoff)
    single = check_gap_bound(GAUSS, phis[3], h0, LATTICE)
    assert abs(single.delta1 - reports[3].delta1) <= 1e-12
    assert abs(single.sup_gap - reports[3].sup_gap) <= 1e-12


def test_scaling_rows_and_invariants(rng):
    h0 = GAUSS.basis([0.52])[:, 0] + 0.2 * rng.standard_normal(GRID.count)
    res = scaling_experiment(GAUSS, h0, [8, 8, 16], trials=9, base_seed=3, lattice=LATTICE)
    # duplicate M entries give identical rows (same derived seeds)
    assert res.rows[0] == res.rows[1]
    for row in res.rows:
        assert row.quantiles[0] <= row.median_sup_gap <= row.quantiles[1]
    h0n = h0 / np.linalg.norm(h0)
    proj = sweep(GAUSS, LATTICE.points(), h0=h0n, direct=True)["direct"]
    for t in res.trials:
        assert t.gap >= -1e-10
        assert t.gap <= 2 * t.sup_gap + 1e-9


def test_scaling_row_validation():
    with pytest.raises(ConfigError):
        ScalingRow(m=8, trials=4, median_gap=0.0, median_sup_gap=0.5, quantiles=(0.6, 0.9))


def test_scaling_rejects_m_below_k(rng):
    fam = small_tabulated(rng, k=3)
    h0 = fam.bases[0][:, 0]
    with pytest.raises(ConfigError):
        scaling_experiment(fam, h0, [2], trials=2, base_seed=0)


def test_pairwise_distortion_isometry():
    phi = orthogonal_sketch(GRID.count, seed=8)
    assert pairwise_distortion(GAUSS, phi, 50, seed=1) <= 1e-10


def test_pairwise_distortion_single_line_consistency(rng):
    # one 1-D subspace: x2 = -x1 reduces the ratio to a single-vector ratio
    v = random_orthobasis(rng, 64, 1)
    fam = TabulatedFamily(theta_grid=np.array([[0.0]]), bases=(v,))
    phi = make_sketch(16, 64, seed=3)
    x = v[:, 0]
    expected = abs(float(np.sum(phi.apply(2 * x) ** 2)) / 4.0 - 1.0)
    measured = pairwise_distortion(fam, phi, 200, seed=2)
    assert abs(measured - expected) <= 1e-12


def test_lattice_distortion_below_gram_sup(rng):
    phi = make_sketch(24, GRID.count, seed=11)
    delta1 = sketch_gram_distortion(GAUSS, phi, LATTICE).sup_value
    ratios = lattice_distortion(GAUSS, phi, LATTICE, seed=5)
    assert ratios <= delta1 + 1e-9


def test_pairwise_distortion_decreases_with_m():
    fam = gabor_family(
        0.02, (-0.1, 0.1), (2 * np.pi * 60, 2 * np.pi * 140),
        SampleGrid.over(-0.25, 0.25, 1024),
    )
    medians = []
    for m in (20, 160):
        vals = [
            pairwise_distortion(fam, make_sketch(m, 1024, derive_seed(5, m, i)), 60, seed=i)
            for i in range(20)
        ]
        medians.append(np.median(vals))
    slope = (np.log(medians[1]) - np.log(medians[0])) / np.log(160 / 20)
    assert -0.8 <= slope <= -0.2
