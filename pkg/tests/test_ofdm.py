import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dopplercap.ofdm import (NTN_TDL_A, DopplerLinearization, InvalidConfigError,
                             InvalidProfileError, MultipathProfile, OFDMConfig,
                             TapSet, build_ntn_channel, draw_taps, full_channel,
                             ici_matrix, linearize, scale_delays, tap_dft)

from oracles import td_ofdm_channel

# Sampling period of the reference 1024-subcarrier numerology, ~65.104 ns.
TS_1024 = 1.0 / (15e3 * 1024)


def unit_tap():
    return TapSet(coefficients=np.array([1.0 + 0j]))


class TestScaleDelays:
    def test_reference_numerology_indices(self):
        # DS = 100 ns scales the profile delays to ~(0, 108.11, 284.16) ns.
        assert scale_delays(NTN_TDL_A, TS_1024) == [0, 2, 4]

    def test_zero_delay_spread_collapses_all_taps(self):
        profile = MultipathProfile(NTN_TDL_A.normalized_delays,
                                   NTN_TDL_A.powers_db, 0.0)
        assert scale_delays(profile, TS_1024) == [0, 0, 0]

    def test_doubled_delay_spread(self):
        # Hand arithmetic: round((0, 216.22, 568.32)/65.104) = (0, 3, 9).
        profile = MultipathProfile(NTN_TDL_A.normalized_delays,
                                   NTN_TDL_A.powers_db, 200.0)
        assert scale_delays(profile, TS_1024) == [0, 3, 9]

    def test_negative_delay_rejected(self):
        profile = MultipathProfile((0.0, 1.0), (0.0, -3.0), 100.0)
        object.__setattr__(profile, "normalized_delays", (0.0, -1.0))
        with pytest.raises(InvalidProfileError):
            scale_delays(profile, TS_1024)

    def test_half_tie_rounds_away_from_zero(self):
        profile = MultipathProfile((0.0, 0.5), (0.0, 0.0), 100.0)
        # 0.5 * 100 ns / 100 ns = exactly .5 -> index 1, not 0.
        assert scale_delays(profile, 100e-9) == [0, 1]


class TestDrawTaps:
    def test_unit_power_single_tap(self):
        profile = MultipathProfile((0.0,), (0.0,), 100.0)
        rng = np.random.default_rng(0)
        draws = np.array([draw_taps(profile, [0], rng).coefficients[0]
                          for _ in range(100_000)])
        assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, rel=0.02)

    def test_table_powers_in_linear_scale(self):
        rng = np.random.default_rng(1)
        indices = [0, 2, 4]
        acc = np.zeros(5)
        n_draws = 100_000
        for _ in range(n_draws):
            acc += np.abs(draw_taps(NTN_TDL_A, indices, rng).coefficients) ** 2
        acc /= n_draws
        expected = (1.0, 10 ** -0.4675, 10 ** -0.6482)
        for idx, power in zip(indices, expected):
            assert acc[idx] == pytest.approx(power, rel=0.02)
        assert acc[1] == 0.0 and acc[3] == 0.0

    def test_fixed_seed_is_bit_identical(self):
        taps_a = draw_taps(NTN_TDL_A, [0, 2, 4], np.random.default_rng(7))
        taps_b = draw_taps(NTN_TDL_A, [0, 2, 4], np.random.default_rng(7))
        np.testing.assert_array_equal(taps_a.coefficients, taps_b.coefficients)


class TestIciMatrix:
    def test_no_doppler_gives_identity(self):
        for n in (2, 5, 16):
            config = OFDMConfig(n_subcarriers=n, n_taps=2)
            b = ici_matrix(config, 0.0)
            assert np.linalg.norm(b - np.eye(n)) < 1e-12 * np.sqrt(n)

    def test_entry_against_high_precision_evaluation(self):
        # mpmath (50 digits) evaluation of the entry formulas at
        # N=4, L=2, f_d=0.1, zero-based entry (1, 1):
        #   (1/4) sin(.1 pi)/sin(.025 pi) exp(2 pi j * 0.5*(((3/4)+1)*0.1))
        import mpmath
        mpmath.mp.dps = 50
        fd = mpmath.mpf("0.1")
        n, l_taps = 4, 2
        x = fd  # k - i = 0
        mag = mpmath.sin(mpmath.pi * x) / (n * mpmath.sin(mpmath.pi * x / n))
        psi = ((2 * l_taps - 1) / mpmath.mpf(n) + 1) * fd / 2
        ref = mag * mpmath.e ** (2j * mpmath.pi * psi)
        config = OFDMConfig(n_subcarriers=4, n_taps=2)
        got = ici_matrix(config, 0.1)[1, 1]
        assert abs(got - complex(ref)) < 1e-14

    def test_integer_shift_moves_energy_off_diagonal(self):
        config = OFDMConfig(n_subcarriers=8, n_taps=1)
        b = ici_matrix(config, 1.0)
        assert np.max(np.abs(np.diag(b))) < 1e-12
        # Energy sits where f_d + k - i = 0, i.e. k = i - 1.
        sub = np.abs(np.diag(b, k=-1))
        assert np.all(np.abs(sub - 1.0) < 1e-12)

    @settings(max_examples=30, deadline=None)
    @given(fd=st.floats(min_value=-0.5, max_value=0.5),
           n=st.sampled_from([2, 4, 8, 16]))
    def test_dirichlet_magnitude_bound(self, fd, n):
        config = OFDMConfig(n_subcarriers=n, n_taps=1)
        assert np.max(np.abs(ici_matrix(config, fd))) <= 1.0 + 1e-12


class TestFullChannel:
    def test_flat_channel_no_doppler_is_identity(self):
        config = OFDMConfig(n_subcarriers=8, n_taps=1)
        h = full_channel(config, unit_tap(), 0.0)
        assert np.linalg.norm(h - np.eye(8)) < 1e-12

    def test_no_doppler_is_diagonal_tap_dft(self):
        config = OFDMConfig(n_subcarriers=16, n_taps=5)
        taps = draw_taps(NTN_TDL_A, [0, 2, 4], np.random.default_rng(3))
        h = full_channel(config, taps, 0.0)
        np.testing.assert_allclose(h, np.diag(tap_dft(taps, 16)), atol=1e-12)

    def test_matches_time_domain_simulation(self):
        rng = np.random.default_rng(5)
        for n in (4, 8, 16):
            coeffs = (rng.standard_normal(3) + 1j * rng.standard_normal(3))
            taps = TapSet(coefficients=coeffs)
            config = OFDMConfig(n_subcarriers=n, n_taps=3)
            for fd in (0.05, -0.3, 1.0):
                h = full_channel(config, taps, fd)
                ref = td_ofdm_channel(n, config.cp_length, coeffs, fd)
                rel = np.linalg.norm(h - ref) / np.linalg.norm(ref)
                assert rel < 1e-10, (n, fd, rel)

    def test_taps_longer_than_cp_rejected(self):
        config = OFDMConfig(n_subcarriers=8, n_taps=2)
        taps = TapSet(coefficients=np.array([1.0, 0.1, 0.1], dtype=complex))
        with pytest.raises(InvalidConfigError):
            full_channel(config, taps, 0.0)


class TestLinearize:
    def test_hand_evaluated_two_by_two(self):
        config = OFDMConfig(n_subcarriers=2, n_taps=1)
        lin = linearize(config, unit_tap())
        np.testing.assert_allclose(lin.nominal, np.eye(2), atol=1e-15)
        expected_g = np.array([[1.5j * np.pi, -0.5j * np.pi],
                               [-0.5j * np.pi, 1.5j * np.pi]])
        np.testing.assert_allclose(lin.sensitivity, expected_g, atol=1e-14)

    def test_nominal_is_diagonal(self):
        config = OFDMConfig(n_subcarriers=16, n_taps=5)
        taps = draw_taps(NTN_TDL_A, [0, 2, 4], np.random.default_rng(0))
        lin = linearize(config, taps)
        off = lin.nominal - np.diag(np.diag(lin.nominal))
        assert np.max(np.abs(off)) < 1e-12 * np.linalg.norm(lin.nominal)

    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_finite_difference_derivative(self, n):
        rng = np.random.default_rng(n)
        coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        taps = TapSet(coefficients=coeffs)
        config = OFDMConfig(n_subcarriers=n, n_taps=3)
        lin = linearize(config, taps)
        errs = []
        for eps in (1e-3, 1e-4):
            fd_deriv = (full_channel(config, taps, eps) - lin.nominal) / eps
            rel = np.linalg.norm(fd_deriv - lin.sensitivity) \
                / np.linalg.norm(lin.sensitivity)
            assert rel <= 10 * eps
            errs.append(rel)
        # Error should shrink linearly in eps: slope ~ 1 in log-log.
        slope = np.log(errs[0] / errs[1]) / np.log(10.0)
        assert 0.8 <= slope <= 1.2

    def test_zero_taps_give_zero_model(self):
        config = OFDMConfig(n_subcarriers=4, n_taps=2)
        lin = linearize(config, TapSet(coefficients=np.zeros(2, complex)))
        assert np.all(lin.nominal == 0) and np.all(lin.sensitivity == 0)


class TestConfigValidation:
    def test_cp_must_match_taps(self):
        with pytest.raises(InvalidConfigError):
            OFDMConfig(n_subcarriers=8, n_taps=3, cp_length=1)

    def test_profile_length_mismatch(self):
        with pytest.raises(InvalidProfileError):
            MultipathProfile((0.0, 1.0), (0.0,), 100.0)

    def test_profile_first_delay_nonzero(self):
        with pytest.raises(InvalidProfileError):
            MultipathProfile((1.0, 2.0), (0.0, 0.0), 100.0)

    def test_build_ntn_channel_full_scale_indices(self):
        config, taps, lin = build_ntn_channel(1024, np.random.default_rng(0))
        assert len(taps) == 5  # indices (0, 2, 4) at the 1024 numerology
        assert config.cp_length == 4
        assert taps.coefficients[1] == 0 and taps.coefficients[3] == 0
        assert isinstance(lin, DopplerLinearization)
