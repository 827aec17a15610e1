import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import exp1

from dopplercap.montecarlo import (Estimate, MCConfig, combine_quadrature,
                                   complex_gaussian_samples,
                                   expect_complex_gaussian, gauss_hermite_2d,
                                   mean_stderr, sample_rng)

from oracles import gauss_laguerre_exp_mean


def test_second_moment_matches_variance():
    mc = MCConfig(n_samples=20000, seed=3)
    est = expect_complex_gaussian(lambda s: abs(s) ** 2, 0.7, mc)
    assert abs(est.mean - 0.7) <= 3 * est.stderr
    assert est.stderr > 0


def test_constant_integrand_is_exact():
    mc = MCConfig(n_samples=500, seed=1)
    est = expect_complex_gaussian(lambda s: 1.0, 2.0, mc)
    assert est.mean == pytest.approx(1.0, abs=0)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)


def test_log_moment_against_gauss_laguerre():
    # For s ~ CN(0,1), |s|^2 ~ Exp(1): E[log(1+|s|^2)] = e * E_1(1).
    closed_form = float(np.e * exp1(1.0))
    oracle = gauss_laguerre_exp_mean(lambda t: np.log1p(t))
    assert oracle == pytest.approx(closed_form, abs=1e-10)
    mc = MCConfig(n_samples=40000, seed=11)
    est = expect_complex_gaussian(lambda s: np.log1p(abs(s) ** 2), 1.0, mc)
    assert abs(est.mean - oracle) <= 3 * est.stderr


def test_zero_variance_short_circuits():
    mc = MCConfig(n_samples=10, seed=0)
    est = expect_complex_gaussian(lambda s: abs(s) ** 2 + 5.0, 0.0, mc)
    assert est == Estimate(mean=5.0, stderr=0.0, n_samples=10, seed=0)


def test_nonfinite_sample_is_reported_with_index():
    mc = MCConfig(n_samples=64, seed=5, batch_size=16)
    with pytest.raises(FloatingPointError, match="sample index"):
        expect_complex_gaussian(
            lambda s: np.inf if abs(s) > 0 else 1.0, 1.0, mc)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**63 - 1),
       batch=st.integers(min_value=1, max_value=777))
def test_batch_size_never_changes_the_estimate(seed, batch):
    f = lambda s: np.log1p(abs(s) ** 2)
    ref = expect_complex_gaussian(
        f, 0.5, MCConfig(n_samples=300, seed=seed, batch_size=300))
    alt = expect_complex_gaussian(
        f, 0.5, MCConfig(n_samples=300, seed=seed, batch_size=batch))
    assert ref.mean == alt.mean
    assert ref.stderr == alt.stderr


def test_vectorized_matches_scalar_path():
    mc = MCConfig(n_samples=2000, seed=9, batch_size=128)
    scalar = expect_complex_gaussian(lambda s: abs(s) ** 4, 1.3, mc)
    vec = expect_complex_gaussian(lambda s: np.abs(s) ** 4, 1.3, mc,
                                  vectorized=True)
    assert scalar.mean == vec.mean
    assert scalar.stderr == vec.stderr


def test_per_sample_draws_depend_only_on_seed_and_index():
    a = complex_gaussian_samples(42, 10, 1.0, start=5)
    b = complex_gaussian_samples(42, 3, 1.0, start=7)
    np.testing.assert_array_equal(a[2:5], b)
    rng = sample_rng(42, 7)
    direct = (rng.standard_normal() + 1j * rng.standard_normal()) \
        * np.sqrt(0.5)
    assert direct == b[0]


def test_stderr_scales_like_inverse_sqrt_n():
    # Ensemble-averaged stderr should drop by ~sqrt(2) when n doubles.
    ratios = []
    for seed in range(12):
        small = expect_complex_gaussian(
            lambda s: abs(s) ** 2, 1.0, MCConfig(n_samples=2000, seed=seed))
        big = expect_complex_gaussian(
            lambda s: abs(s) ** 2, 1.0,
            MCConfig(n_samples=4000, seed=1000 + seed))
        ratios.append(small.stderr / big.stderr)
    assert np.mean(ratios) == pytest.approx(np.sqrt(2), rel=0.2)


def test_gauss_hermite_normalization_and_moments():
    assert gauss_hermite_2d(lambda s: 1.0, 0.8, nodes=32) \
        == pytest.approx(1.0, abs=1e-12)
    assert gauss_hermite_2d(lambda s: abs(s) ** 2, 0.8, nodes=32) \
        == pytest.approx(0.8, abs=1e-10)
    assert gauss_hermite_2d(lambda s: 7.0, 0.0, nodes=32) == 7.0


def test_gauss_hermite_agrees_with_mc():
    f = lambda s: np.log1p(abs(1 + 0.3 * s) ** 2)
    quad = gauss_hermite_2d(f, 0.25, nodes=64)
    est = expect_complex_gaussian(f, 0.25, MCConfig(n_samples=60000, seed=2))
    assert abs(est.mean - quad) <= 3 * est.stderr


def test_combine_quadrature_adds_means_and_rss_stderrs():
    a = Estimate(mean=1.0, stderr=0.3, n_samples=10, seed=0)
    b = Estimate(mean=2.0, stderr=0.4, n_samples=20, seed=0)
    c = combine_quadrature(a, b)
    assert c.mean == pytest.approx(3.0)
    assert c.stderr == pytest.approx(0.5)


def test_mean_stderr_single_sample():
    est = mean_stderr(np.array([4.0]), seed=1)
    assert est.mean == 4.0 and est.stderr == 0.0
