import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contmem.errors import DegenerateDensityError, InvalidArgumentError
from contmem.numerics import (cumulative_trapezoid, histogram_sample, integrate,
                              inverse_cdf_sample, normalized_exp, uniform_grid)


def test_default_grid_size():
    g = uniform_grid(0, 1, 1000)
    assert len(g) == 1000
    np.testing.assert_allclose(np.diff(g.points), 1 / 999, rtol=1e-10)
    assert g.points[0] == 0 and g.points[-1] == 1


def test_minimal_grid():
    g = uniform_grid(0, 1, 2)
    np.testing.assert_array_equal(g.points, [0, 1])
    np.testing.assert_array_equal(g.weights, [0.5, 0.5])


def test_quarter_grid():
    g = uniform_grid(0, 0.75, 4)
    np.testing.assert_allclose(g.points, [0, 0.25, 0.5, 0.75], atol=1e-15)
    np.testing.assert_allclose(g.weights, [0.125, 0.25, 0.25, 0.125], atol=1e-15)


@pytest.mark.parametrize("a,b,n", [(0, 1, 1), (1, 0, 5), (0, np.inf, 5), (np.nan, 1, 5), (0, 1, 2.5)])
def test_grid_rejects(a, b, n):
    with pytest.raises(InvalidArgumentError):
        uniform_grid(a, b, n)


@given(a=st.floats(-100, 100), width=st.floats(1e-3, 100), n=st.integers(2, 3000))
def test_grid_invariants(a, width, n):
    g = uniform_grid(a, a + width, n)
    assert np.all(np.diff(g.points) > 0)
    assert np.all(g.weights > 0)
    assert g.points[0] == a
    assert abs(g.weights.sum() - width) <= 1e-12 * width + 1e-12 * abs(a)


def test_integrate_constant_and_linear():
    g = uniform_grid(0, 1, 1000)
    assert integrate(np.ones(1000), g) == pytest.approx(1.0, abs=1e-12)
    assert integrate(g.points, g) == pytest.approx(0.5, abs=1e-9)


def test_integrate_exp_against_fine_grid():
    fine = uniform_grid(0, 1, 100001)
    oracle = integrate(np.exp(fine.points), fine)
    assert abs(oracle - (np.e - 1)) < 1e-9
    g = uniform_grid(0, 1, 1000)
    assert abs(integrate(np.exp(g.points), g) - oracle) < 1e-6


@given(a=st.floats(-5, 5), width=st.floats(0.1, 10), n=st.integers(2, 500),
       slope=st.floats(-10, 10), icpt=st.floats(-10, 10))
def test_integrate_exact_for_affine(a, width, n, slope, icpt):
    b = a + width
    g = uniform_grid(a, b, n)
    exact = slope * (b * b - a * a) / 2 + icpt * width
    scale = abs(slope) * max(a * a, b * b) + abs(icpt) * width + 1
    assert abs(integrate(slope * g.points + icpt, g) - exact) <= 1e-12 * scale * 10


def test_second_order_convergence():
    errs = []
    for n in (51, 101, 201, 401):
        g = uniform_grid(0, 1, n)
        errs.append(abs(integrate(np.exp(g.points), g) - (np.e - 1)))
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine >= 3.5


def test_integrate_rejects_bad_values():
    g = uniform_grid(0, 1, 10)
    with pytest.raises(InvalidArgumentError):
        integrate(np.ones(9), g)
    with pytest.raises(InvalidArgumentError):
        integrate(np.r_[np.ones(9), np.nan], g)


def test_normalized_exp_constant_is_uniform():
    g = uniform_grid(0, 1, 1000)
    np.testing.assert_allclose(normalized_exp(np.full(1000, 3.7), g), 1.0, atol=1e-12)


def test_normalized_exp_linear_scores_closed_form():
    g = uniform_grid(0, 1, 1000)
    np.testing.assert_allclose(normalized_exp(g.points, g), np.exp(g.points) / (np.e - 1), atol=1e-5)


def test_normalized_exp_survives_huge_scores():
    g = uniform_grid(0, 1, 100)
    p = normalized_exp(np.linspace(0, 1, 100) * 1e4, g)
    assert np.all(np.isfinite(p))
    assert integrate(p, g) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=50)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 20), shift=st.floats(-1e3, 1e3))
def test_normalized_exp_properties(seed, scale, shift):
    g = uniform_grid(0, 1, 1000)
    s = np.random.default_rng(seed).standard_normal(1000) * scale
    p = normalized_exp(s, g)
    assert np.all(p >= 0)
    assert abs(integrate(p, g) - 1) <= 1e-9
    # shifting rounds the scores at the ulp of |shift|; measure against the peak
    q = normalized_exp(s + shift, g)
    assert np.max(np.abs(q - p)) <= 1e-12 * p.max() * max(1.0, abs(shift) / 100)


def test_cumulative_trapezoid_ends_at_integral():
    g = uniform_grid(0, 2, 50)
    f = np.sin(g.points)
    c = cumulative_trapezoid(f, g)
    assert c[0] == 0
    assert c[-1] == pytest.approx(integrate(f, g), abs=1e-13)


def test_inverse_cdf_uniform_quartiles():
    g = uniform_grid(0, 1, 1000)
    np.testing.assert_allclose(inverse_cdf_sample(np.ones(1000), g, 4), [0.125, 0.375, 0.625, 0.875],
                               atol=1e-12)


def test_inverse_cdf_uniform_median():
    g = uniform_grid(0, 1, 1000)
    np.testing.assert_allclose(inverse_cdf_sample(np.ones(1000), g, 1), [0.5], atol=1e-12)


def test_inverse_cdf_triangular_bump():
    # bump supported on [0.45, 0.55], peak 20 at 0.5; grid step 1e-3
    g = uniform_grid(0, 1, 1001)
    density = np.clip(20 - 400 * np.abs(g.points - 0.5), 0, None)
    density /= integrate(density, g)
    u = inverse_cdf_sample(density, g, 8)
    assert np.all((u > 0.45) & (u < 0.55))
    # symmetric bump -> symmetric stratified quantiles
    np.testing.assert_allclose(u + u[::-1], 1.0, atol=1e-9)
    # independent check of one quantile: CDF of the triangle at 0.5 - x is (1 - 20x)^2 / 2 ... solved
    # for the first quantile 1/16: (20 * (x - 0.45))^2 / 2 = 1/16  ->  x = 0.45 + sqrt(1/8) / 20
    assert u[0] == pytest.approx(0.45 + np.sqrt(1 / 8) / 20, abs=1e-5)


def test_inverse_cdf_deterministic_and_random_mode():
    g = uniform_grid(0, 1, 500)
    p = normalized_exp(np.sin(6 * g.points) * 2, g)
    a = inverse_cdf_sample(p, g, 17)
    assert np.array_equal(a, inverse_cdf_sample(p, g, 17))
    r1 = inverse_cdf_sample(p, g, 17, mode="random", seed=3)
    r2 = inverse_cdf_sample(p, g, 17, mode="random", seed=3)
    assert np.array_equal(r1, r2)
    assert np.all(np.diff(r1) >= 0) and r1.min() >= 0 and r1.max() <= 1


def test_inverse_cdf_zero_density():
    g = uniform_grid(0, 1, 10)
    with pytest.raises(DegenerateDensityError):
        inverse_cdf_sample(np.zeros(10), g, 3)


def test_inverse_cdf_rejects_unnormalized():
    g = uniform_grid(0, 1, 10)
    with pytest.raises(InvalidArgumentError):
        inverse_cdf_sample(np.full(10, 2.0), g, 3)


def test_histogram_sample_split():
    u = histogram_sample([0.7, 0.3], 10)
    assert (u < 0.5).sum() == 7
    assert (u >= 0.5).sum() == 3


def test_histogram_sample_skips_empty_bins():
    u = histogram_sample([0, 0, 1, 0], 5)
    assert np.all((u >= 0.5) & (u <= 0.75))


@given(masses=st.lists(st.floats(0, 10), min_size=1, max_size=20), count=st.integers(1, 64))
def test_histogram_sample_quantile_counts(masses, count):
    masses = np.array(masses)
    if masses.sum() <= 0:
        with pytest.raises(DegenerateDensityError):
            histogram_sample(masses, count)
        return
    u = histogram_sample(masses, count)
    assert np.all(np.diff(u) >= 0) and u.min() >= 0 and u.max() <= 1
    # quantile-arithmetic oracle: bin j receives the quantiles falling in its CDF range
    cdf = np.concatenate(([0], np.cumsum(masses))) / masses.sum()
    q = (np.arange(count) + 0.5) / count
    for j in np.flatnonzero(masses > 0):
        strictly_inside = np.sum((q > cdf[j] + 1e-9) & (q < cdf[j + 1] - 1e-9))
        got = np.sum((u > j / len(masses)) & (u < (j + 1) / len(masses)))
        assert got >= strictly_inside
