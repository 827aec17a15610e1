import numpy as np
import pytest

from dopplercap.channel import (ChannelSample, InputCovariance,
                                StructuredChannel, cond_cov_given_s,
                                cond_output_cov, h_y_given_x, output_cov,
                                sample_output)
from dopplercap.linalg import logdet_psd, min_eig_h

from oracles import random_channel_pair


def make_channel(n=2, sigma2=0.5, seed=0):
    f, g = random_channel_pair(n, seed)
    return StructuredChannel(F=f, G=g, sigma2=sigma2)


class TestCondOutputCov:
    def test_zero_input(self):
        ch = make_channel()
        np.testing.assert_array_equal(cond_output_cov(ch, np.zeros(2)),
                                      np.eye(2))

    def test_coherent_case(self):
        ch = make_channel(sigma2=0.0)
        x = np.array([1.0, 2.0 + 1j])
        np.testing.assert_allclose(cond_output_cov(ch, x), np.eye(2))

    def test_rank_one_plus_identity(self):
        ch = StructuredChannel(F=np.eye(2), G=np.eye(2), sigma2=1.0)
        got = cond_output_cov(ch, np.array([1.0, 0.0]))
        np.testing.assert_allclose(got, np.diag([2.0, 1.0]))
        # Eigenvalues: 1 (multiplicity N-1) and 1 + sigma^2 ||Gx||^2.
        ch3 = make_channel(3, sigma2=0.3, seed=4)
        x = np.array([1.0, -2j, 0.5])
        eigs = np.linalg.eigvalsh(cond_output_cov(ch3, x))
        gx = ch3.G @ x
        np.testing.assert_allclose(
            eigs, [1.0, 1.0, 1.0 + 0.3 * np.vdot(gx, gx).real], rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cond_output_cov(make_channel(), np.zeros(3))


class TestEntropyGivenX:
    def test_zero_input(self):
        ch = make_channel(3, sigma2=0.7, seed=1)
        assert h_y_given_x(ch, np.zeros(3)) \
            == pytest.approx(3 * np.log(np.pi * np.e))

    def test_coherent(self):
        ch = make_channel(3, sigma2=0.0, seed=2)
        assert h_y_given_x(ch, np.ones(3)) \
            == pytest.approx(3 * np.log(np.pi * np.e))

    def test_scalar_arithmetic(self):
        ch = StructuredChannel(F=np.array([[1.0 + 0j]]),
                               G=np.array([[1.0 + 0j]]), sigma2=0.01)
        expected = np.log(np.pi * np.e) + np.log(2.0)
        assert h_y_given_x(ch, np.array([10.0])) == pytest.approx(expected)


class TestCondCovGivenS:
    def test_s_zero(self):
        ch = make_channel(3, seed=3)
        q = InputCovariance.isotropic(3, 2.0)
        expected = np.eye(3) + ch.F @ q.Q @ ch.F.conj().T
        np.testing.assert_allclose(cond_cov_given_s(ch, q, 0j), expected)

    def test_zero_covariance(self):
        ch = make_channel(3, seed=3)
        q = InputCovariance(Q=np.zeros((3, 3)))
        np.testing.assert_array_equal(cond_cov_given_s(ch, q, 1.0), np.eye(3))

    def test_scalar_arithmetic(self):
        ch = StructuredChannel(F=np.array([[1.0 + 0j]]),
                               G=np.array([[1.0 + 0j]]), sigma2=1.0)
        got = cond_cov_given_s(ch, np.array([[2.0 + 0j]]), 1.0 + 0j)
        assert got[0, 0] == pytest.approx(9.0)

    def test_eigenvalues_at_least_one(self):
        ch = make_channel(4, seed=5)
        q = InputCovariance.isotropic(4, 3.0)
        for s in (0.3 + 0.1j, -1.2j, 2.0):
            assert min_eig_h(cond_cov_given_s(ch, q, s)) >= 1 - 1e-9


class TestOutputCov:
    def test_coherent(self):
        ch = make_channel(3, sigma2=0.0, seed=6)
        q = InputCovariance.isotropic(3, 1.0)
        expected = np.eye(3) + ch.F @ q.Q @ ch.F.conj().T
        np.testing.assert_allclose(output_cov(ch, q), expected)

    def test_scalar_arithmetic(self):
        ch = StructuredChannel(F=np.array([[1.0 + 0j]]),
                               G=np.array([[2.0 + 0j]]), sigma2=0.25)
        got = output_cov(ch, np.array([[1.0 + 0j]]))
        assert got[0, 0] == pytest.approx(3.0)

    def test_equals_mean_of_conditional_covariance(self):
        ch = make_channel(3, sigma2=0.4, seed=7)
        q = InputCovariance.isotropic(3, 2.0)
        rng = np.random.default_rng(0)
        n = 20000
        s_draws = np.sqrt(ch.sigma2 / 2) * (rng.standard_normal(n)
                                            + 1j * rng.standard_normal(n))
        acc = np.zeros((3, 3), dtype=complex)
        for s in s_draws:
            acc += cond_cov_given_s(ch, q, s)
        acc /= n
        expected = output_cov(ch, q)
        rel = np.linalg.norm(acc - expected) / np.linalg.norm(expected)
        assert rel < 3.0 / np.sqrt(n) * 10

    def test_difference_identity(self):
        # output_cov(Q) - cond_cov_given_s(Q, 0) = sigma^2 G Q G^H exactly.
        ch = make_channel(4, sigma2=0.9, seed=8)
        q = InputCovariance.isotropic(4, 1.5)
        diff = output_cov(ch, q) - cond_cov_given_s(ch, q, 0j)
        expected = ch.sigma2 * ch.G @ q.Q @ ch.G.conj().T
        np.testing.assert_allclose(diff, expected, atol=1e-12)


class TestSampleOutput:
    def test_zero_noise_debug_path(self):
        ch = make_channel(3, sigma2=0.0, seed=9)
        x = np.array([1.0, 2.0, -1j])
        sample = sample_output(ch, x, np.random.default_rng(0),
                               zero_noise=True)
        np.testing.assert_allclose(sample.y, ch.F @ x)
        assert isinstance(sample, ChannelSample)

    def test_sample_covariance_matches_formula(self):
        ch = make_channel(2, sigma2=0.6, seed=10)
        x = np.array([1.0, 0.5 - 0.2j])
        rng = np.random.default_rng(1)
        n = 100_000
        ys = np.empty((n, 2), dtype=complex)
        for i in range(n):
            ys[i] = sample_output(ch, x, rng).y
        mean_y = (ch.F @ x)
        centered = ys - mean_y
        emp = centered.conj().T @ centered / n
        expected = cond_output_cov(ch, x)
        rel = np.linalg.norm(emp.T - expected) / np.linalg.norm(expected)
        assert rel < 0.02

    def test_reproducible_draws(self):
        ch = make_channel(3, sigma2=0.5, seed=11)
        x = np.ones(3)
        a = sample_output(ch, x, np.random.default_rng(123))
        b = sample_output(ch, x, np.random.default_rng(123))
        assert a.s == b.s
        np.testing.assert_array_equal(a.y, b.y)


class TestInputCovariance:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            InputCovariance(Q=np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            InputCovariance(Q=np.diag([1.0, -0.5]))

    def test_power_is_trace(self):
        q = InputCovariance.isotropic(4, 8.0)
        assert q.power == pytest.approx(8.0)


class TestLogdetRankShortcut:
    def test_dense_vs_rank_structured(self):
        # For rank-r Q = A A^H: det(I + HQH^H) = det(I_r + A^H H^H H A).
        f, g = random_channel_pair(5, 21)
        ch = StructuredChannel(F=f, G=g, sigma2=0.2)
        rng = np.random.default_rng(2)
        a = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
        q = InputCovariance(Q=a @ a.conj().T)
        s = 0.3 - 0.4j
        dense = logdet_psd(cond_cov_given_s(ch, q, s))
        h = ch.F + s * ch.G
        ha = h @ a
        small = logdet_psd(np.eye(2) + ha.conj().T @ ha)
        assert dense == pytest.approx(small, abs=1e-9)
