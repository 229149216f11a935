import numpy as np
import pytest
from scipy import stats

from contmatch.errors import ConfigError
from contmatch.sketch import make_sketch, orthogonal_sketch


def test_determinism():
    a = make_sketch(50, 200, seed=123)
    b = make_sketch(50, 200, seed=123)
    assert np.array_equal(a.matrix, b.matrix)
    c = make_sketch(50, 200, seed=124)
    assert not np.array_equal(a.matrix, c.matrix)


def test_zero_dimensions_rejected():
    with pytest.raises(ConfigError):
        make_sketch(0, 10, 0)
    with pytest.raises(ConfigError):
        make_sketch(10, 0, 0)


def test_entry_moments():
    m = 100
    phi = make_sketch(m, 10000, seed=7)
    entries = phi.matrix.reshape(-1)
    assert abs(entries.mean()) <= 4e-3
    assert abs(entries.var() - 1.0 / m) <= 0.05 / m


def test_entry_distribution_ks():
    m = 100
    phi = make_sketch(m, 1000, seed=11)
    sample = np.sqrt(m) * phi.matrix.reshape(-1)
    stat = stats.kstest(sample, "norm").statistic
    critical_1pct = 1.6276 / np.sqrt(sample.shape[0])
    assert stat < critical_1pct


def test_apply_zero_and_shapes():
    phi = make_sketch(20, 64, seed=0)
    assert np.array_equal(phi.apply(np.zeros(64)), np.zeros(20))
    out = phi.apply(np.eye(64)[:, :3])
    assert out.shape == (20, 3)
    with pytest.raises(ConfigError):
        phi.apply(np.zeros(63))


def test_apply_isotropy_monte_carlo(rng):
    x = rng.standard_normal(64)
    x /= np.linalg.norm(x)
    m = 100
    vals = np.array(
        [float(np.sum(make_sketch(m, 64, seed=s).apply(x) ** 2)) for s in range(1000)]
    )
    # Var(||Phi x||^2) = 2/M per isotropy; three standard errors of the mean.
    se = np.sqrt(2.0 / m / 1000)
    assert abs(vals.mean() - 1.0) <= 3 * se
    inside = np.mean((vals >= 0.5) & (vals <= 1.5))
    assert inside >= 0.99


def test_orthogonal_sketch_is_isometry():
    phi = orthogonal_sketch(48, seed=3)
    assert np.max(np.abs(phi.matrix.T @ phi.matrix - np.eye(48))) <= 1e-12
