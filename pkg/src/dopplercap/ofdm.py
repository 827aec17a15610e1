"""Doppler-impaired OFDM channel construction.

Builds the exact frequency-domain channel matrix of a CP-OFDM symbol over
an L-tap multipath channel with a normalized carrier frequency offset f_d
(Doppler divided by subcarrier spacing), and its first-order expansion
around f_d = 0:

    H(f_d) ~= F + f_d * G

F is the diagonal nominal channel (the tap DFT); G captures the
sensitivity of the inter-carrier interference to the frequency offset.

Conventions: time index m = 1..N+N_cp with the cyclic prefix occupying
m = 1..N_cp; the per-sample phase rotation is exp(j 2 pi (m/N) f_d) with
the absolute index m; DFT pair is X -> x = (1/N) sum X e^{+j2pi pk/N},
Y_i = sum y e^{-j2pi pi/N}. The entry formulas below are exact for this
convention (validated against a time-domain simulation oracle in tests).
"""

from dataclasses import dataclass

import numpy as np


class InvalidProfileError(ValueError):
    """Multipath profile violates its contract (e.g. negative delay)."""


class InvalidConfigError(ValueError):
    """OFDM configuration and tap set are inconsistent (e.g. taps exceed CP)."""


# Singularity guard for the Dirichlet-kernel denominator sin(pi x / N).
_SIN_EPS = 1e-9


@dataclass(frozen=True)
class OFDMConfig:
    """OFDM numerology: N subcarriers, L taps, CP of length L - 1."""
    n_subcarriers: int
    n_taps: int
    carrier_freq_hz: float = 2e9
    subcarrier_spacing_hz: float = 15e3
    cp_length: int = None
    sample_period_s: float = None

    def __post_init__(self):
        if self.n_subcarriers < 2:
            raise InvalidConfigError("need at least 2 subcarriers")
        if self.n_taps < 1:
            raise InvalidConfigError("need at least 1 tap")
        if self.cp_length is None:
            object.__setattr__(self, "cp_length", self.n_taps - 1)
        if self.cp_length != self.n_taps - 1:
            raise InvalidConfigError("cp_length must equal n_taps - 1")
        if self.sample_period_s is None:
            object.__setattr__(
                self, "sample_period_s",
                1.0 / (self.subcarrier_spacing_hz * self.n_subcarriers))
        if self.sample_period_s <= 0:
            raise InvalidConfigError("sample_period_s must be positive")


@dataclass(frozen=True)
class MultipathProfile:
    """Tapped-delay-line profile: normalized delays, per-tap powers in dB,
    and the RMS delay spread the normalized delays are scaled to."""
    normalized_delays: tuple
    powers_db: tuple
    desired_rms_delay_spread_ns: float

    def __post_init__(self):
        object.__setattr__(self, "normalized_delays",
                           tuple(float(d) for d in self.normalized_delays))
        object.__setattr__(self, "powers_db",
                           tuple(float(p) for p in self.powers_db))
        if len(self.normalized_delays) != len(self.powers_db):
            raise InvalidProfileError("delays and powers must have equal length")
        if not self.normalized_delays or self.normalized_delays[0] != 0.0:
            raise InvalidProfileError("first normalized delay must be 0")

    @property
    def powers_linear(self):
        return tuple(10.0 ** (p / 10.0) for p in self.powers_db)


# 3GPP non-terrestrial TDL-A profile: three Rayleigh taps.
NTN_TDL_A = MultipathProfile(
    normalized_delays=(0.0, 1.0811, 2.8416),
    powers_db=(0.0, -4.675, -6.482),
    desired_rms_delay_spread_ns=100.0,
)


@dataclass(frozen=True)
class TapSet:
    """Discrete-time impulse response h[l], l = 0..len-1 (sample delays)."""
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise InvalidConfigError("tap coefficients must be a nonempty vector")
        object.__setattr__(self, "coefficients", coeffs)

    def __len__(self):
        return self.coefficients.size


@dataclass(frozen=True)
class DopplerLinearization:
    """First-order channel model: nominal F (diagonal) and sensitivity G."""
    nominal: np.ndarray
    sensitivity: np.ndarray


def _round_half_away(x):
    # Ties at .5 round away from zero (np.round would round half to even).
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def scale_delays(profile, sample_period_s):
    """Map a profile's normalized delays to integer sample indices.

    tau_k [ns] = tau_model_k * DS_desired [ns]; n_k = round(tau_k / T_s).
    """
    if sample_period_s <= 0:
        raise InvalidProfileError("sample_period_s must be positive")
    delays = np.asarray(profile.normalized_delays, dtype=float)
    if np.any(delays < 0):
        raise InvalidProfileError("normalized delays must be nonnegative")
    if np.any(np.diff(delays) < 0):
        raise InvalidProfileError("normalized delays must be nondecreasing")
    tau_ns = delays * profile.desired_rms_delay_spread_ns
    ts_ns = sample_period_s * 1e9
    return [int(n) for n in _round_half_away(tau_ns / ts_ns)]


def draw_taps(profile, indices, rng):
    """Rayleigh tap draw: coefficient sqrt(P_k) g_k at sample index n_k,
    g_k standard circularly-symmetric complex Gaussian; zeros elsewhere."""
    indices = [int(i) for i in indices]
    if len(indices) != len(profile.powers_db):
        raise InvalidProfileError("one sample index per profile tap required")
    length = max(indices) + 1
    h = np.zeros(length, dtype=complex)
    for power_lin, n_k in zip(profile.powers_linear, indices):
        g = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2.0)
        h[n_k] += np.sqrt(power_lin) * g
    return TapSet(coefficients=h)


def _dirichlet_ratio(x, n):
    """(1/N) sin(pi x) / sin(pi x / N) with the removable singularity at
    x = 0 mod N evaluated by the limit cos(pi x)/cos(pi x / N)."""
    x = np.asarray(x, dtype=float)
    denom = np.sin(np.pi * x / n)
    singular = np.abs(denom) < _SIN_EPS
    safe = np.where(singular, 1.0, denom)
    ratio = np.sin(np.pi * x) / (n * safe)
    limit = np.cos(np.pi * x) / np.cos(np.pi * x / n)
    return np.where(singular, limit, ratio)


def ici_matrix(config, f_d):
    """Inter-carrier interference matrix B(f_d) of the Doppler-OFDM channel.

    B(i,k) = (1/N) sin(pi(f_d+k-i)) / sin((pi/N)(f_d+k-i)) e^{j2pi Psi(i,k)}
    Psi(i,k) = 0.5 [((2L-1)/N + 1) f_d + (1 - 1/N)(k - i)]
    """
    n = config.n_subcarriers
    l_taps = config.n_taps
    idx = np.arange(n)
    diff = idx[None, :] - idx[:, None]          # (i,k) -> k - i
    x = f_d + diff
    mag = _dirichlet_ratio(x, n)
    psi = 0.5 * (((2 * l_taps - 1) / n + 1.0) * f_d + (1.0 - 1.0 / n) * diff)
    return mag * np.exp(2j * np.pi * psi)


def tap_dft(taps, n):
    """C(k) = sum_l h_l e^{-j 2 pi l k / N}, evaluated directly (L is tiny)."""
    h = taps.coefficients
    k = np.arange(n)
    ell = np.arange(h.size)
    return (h[None, :] * np.exp(-2j * np.pi * np.outer(k, ell) / n)).sum(axis=1)


def full_channel(config, taps, f_d):
    """Exact frequency-domain channel H(i,k) = C(k) B(i,k)."""
    if len(taps) > config.cp_length + 1:
        raise InvalidConfigError(
            f"tap span {len(taps)} exceeds cyclic prefix budget "
            f"{config.cp_length + 1}")
    c = tap_dft(taps, config.n_subcarriers)
    return c[None, :] * ici_matrix(config, f_d)


def linearize(config, taps):
    """First-order expansion of H(f_d) around f_d = 0.

    F = diag(C(k)); G(i,k) = C(k) D(i,k) with
      D(i,k) = (pi/N) e^{-j(pi/N)(k-i)} / sin((pi/N)(k-i))   (k != i)
      D(i,i) = j pi (1 + (2L-1)/N)
    """
    if len(taps) > config.cp_length + 1:
        raise InvalidConfigError(
            f"tap span {len(taps)} exceeds cyclic prefix budget "
            f"{config.cp_length + 1}")
    n = config.n_subcarriers
    l_taps = config.n_taps
    c = tap_dft(taps, n)
    f_mat = np.diag(c)

    idx = np.arange(n)
    diff = idx[None, :] - idx[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (np.pi / n) * np.exp(-1j * np.pi * diff / n) \
            / np.sin(np.pi * diff / n)
    d_mat = np.where(diff == 0, 1j * np.pi * (1.0 + (2 * l_taps - 1) / n), off)
    g_mat = c[None, :] * d_mat
    return DopplerLinearization(nominal=f_mat, sensitivity=g_mat)


def build_ntn_channel(n_subcarriers, tap_rng, profile=NTN_TDL_A,
                      subcarrier_spacing_hz=15e3, carrier_freq_hz=2e9):
    """Draw an NTN-TDL-A realization and return (config, taps, F, G).

    The sample period follows the configured numerology, T_s = 1/(df*N).
    """
    config_probe = OFDMConfig(n_subcarriers=n_subcarriers, n_taps=1,
                              subcarrier_spacing_hz=subcarrier_spacing_hz,
                              carrier_freq_hz=carrier_freq_hz)
    indices = scale_delays(profile, config_probe.sample_period_s)
    taps = draw_taps(profile, indices, tap_rng)
    config = OFDMConfig(n_subcarriers=n_subcarriers, n_taps=len(taps),
                        subcarrier_spacing_hz=subcarrier_spacing_hz,
                        carrier_freq_hz=carrier_freq_hz)
    lin = linearize(config, taps)
    return config, taps, lin
