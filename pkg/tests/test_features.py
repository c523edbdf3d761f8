import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rffrc.errors import InvalidArgument
from rffrc.features import FeatureMap, gaussian_kernel, sample_feature_map, transform
from rffrc.rng import RandomSource


def test_same_seed_same_draws():
    a = sample_feature_map(4, 50, 2.0, seed=7)
    b = sample_feature_map(4, 50, 2.0, seed=7)
    np.testing.assert_array_equal(a.W, b.W)
    np.testing.assert_array_equal(a.b, b.b)
    c = sample_feature_map(4, 50, 2.0, seed=8)
    assert not np.array_equal(a.W, c.W)


def test_draw_order_documented():
    # W first (row-major, scaled by 1/sigma), then phases
    rs = RandomSource(3)
    W = rs.normal((2, 5)) / 4.0
    b = 2 * np.pi * rs.uniform(5)
    fm = sample_feature_map(2, 5, 4.0, 3)
    np.testing.assert_array_equal(fm.W, W)
    np.testing.assert_array_equal(fm.b, b)


def test_box_muller_moments():
    z = RandomSource(1).normal(200001)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01
    assert z.shape == (200001,)


def test_phases_in_range_and_w_scale():
    fm = sample_feature_map(3, 20000, 2.0, 1)
    assert fm.b.min() >= 0 and fm.b.max() < 2 * np.pi
    assert fm.W.std() == pytest.approx(0.5, rel=0.02)


def test_transform_shape_and_bound(rng):
    fm = sample_feature_map(3, 64, 1.0, 0)
    X = rng.normal(size=(10, 3))
    Z = transform(fm, X)
    assert Z.shape == (10, 64)
    assert np.all(np.abs(Z) <= np.sqrt(2 / 64) + 1e-15)
    np.testing.assert_allclose(fm.transform(X[0]), Z[0], rtol=0, atol=1e-13)


def test_transform_wrong_width():
    fm = sample_feature_map(3, 8, 1.0, 0)
    with pytest.raises(InvalidArgument):
        transform(fm, np.ones((2, 4)))


@pytest.mark.parametrize("args", [(0, 5, 1.0), (2, 0, 1.0), (2, 5, 0.0), (2, 5, -1.0)])
def test_sample_rejects(args):
    with pytest.raises(InvalidArgument):
        sample_feature_map(*args, seed=0)


def test_featuremap_validation():
    with pytest.raises(InvalidArgument):
        FeatureMap(np.ones((2, 3)), np.ones(2), 1.0)
    with pytest.raises(InvalidArgument):
        FeatureMap(np.ones((2, 3)), np.ones(3), 0.0)


def test_self_inner_product_near_one(rng):
    fm = sample_feature_map(5, 20000, 2.0, 4)
    z = transform(fm, rng.normal(size=5))
    assert z @ z == pytest.approx(1.0, abs=0.03)


def test_gaussian_kernel():
    assert gaussian_kernel([0, 0], [0, 0], 2.0) == 1.0
    assert gaussian_kernel([0.0], [2.0], 2.0) == pytest.approx(np.exp(-0.5))


def test_kernel_error_decays_with_m(rng):
    x, y = rng.normal(size=(2, 3))
    exact = gaussian_kernel(x, y, 1.5)
    errs = []
    for m in (100, 10000):
        vals = [transform(f, x) @ transform(f, y) for f in (sample_feature_map(3, m, 1.5, s) for s in range(30))]
        errs.append(np.sqrt(np.mean((np.array(vals) - exact) ** 2)))
    assert errs[1] < errs[0] / 4


@given(st.integers(0, 2**31), st.floats(0.1, 10))
def test_features_finite(seed, sigma):
    fm = sample_feature_map(2, 16, sigma, seed)
    assert np.all(np.isfinite(transform(fm, np.array([[1e3, -1e3]]))))


def test_max_error_decays_over_seeds(rng):
    x = rng.normal(size=(20, 3))
    y = x + rng.normal(size=(20, 3))
    exact = np.array([gaussian_kernel(a, b, 2.0) for a, b in zip(x, y)])

    def mean_max_err(m):
        errs = []
        for s in range(20):
            fm = sample_feature_map(3, m, 2.0, s)
            errs.append(np.max(np.abs(np.einsum("ij,ij->i", transform(fm, x), transform(fm, y)) - exact)))
        return np.mean(errs)

    assert mean_max_err(10_000) < mean_max_err(100)
