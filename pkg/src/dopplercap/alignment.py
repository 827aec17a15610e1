"""Superposition coding with subspace-aligned precoding.

The refined data layer is precoded through a semi-unitary V chosen so that
span(FV, GV) has dimension at most N-1. The receiver then sees the refined
layer inside a fixed subspace independent of the uncertainty draw s, which
leaves an orthogonal complement where a coarse layer (or a pure pilot)
observes s cleanly. Decoding is successive: coarse layer first, then s is
estimated by projection, its contribution cancelled, and the refined layer
decoded with a conditional LMMSE filter indexed by the estimate.

The combined rate is the sum of the coarse-layer rate and the refined-layer
rate; with a deterministic pilot the coarse layer carries no information
and the scheme reduces to pilot-based transmission.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg
import scipy.special

from .linalg import (hermitize, logdet_psd, logdet_psd_stack, psd_sqrt,
                     RANK_RTOL)
from .montecarlo import (MCConfig, combine_quadrature, complex_normal,
                         exact_estimate, mean_stderr, sample_rng)

PILOT = "pilot"
SUPERPOSITION = "superposition"

# Key offset separating the inner-mixture stream of the marginal-entropy
# estimator from the outer sample stream.
_MIXTURE_KEY_OFFSET = 0x9E3779B97F4A7C15


class PrecoderConstructionError(RuntimeError):
    """Constructed precoder failed its alignment invariants."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


@dataclass(frozen=True)
class AlignmentPrecoder:
    """Semi-unitary V with aligned image, the annihilator w certifying it,
    and orthonormal bases (U, U_perp) of span(FV, GV) and its complement."""
    V: np.ndarray
    w: np.ndarray
    U: np.ndarray
    U_perp: np.ndarray
    d_perp: int
    residuals: dict


@dataclass(frozen=True)
class SchemeConfig:
    """Two-layer transmission setup.

    power_split rho sends P_p = rho * P on the coarse/pilot direction v_p
    and P_d = (1 - rho) * P on the refined layer with covariance Q_d.
    """
    mode: str
    power_split: float
    total_power: float
    Q_d: np.ndarray
    v_p: np.ndarray
    s_observable: bool = True

    def __post_init__(self):
        if self.mode not in (PILOT, SUPERPOSITION):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 <= self.power_split <= 1.0:
            raise ValueError("power_split must be in [0, 1]")
        v = np.asarray(self.v_p, dtype=complex).reshape(-1)
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError("v_p must be a unit vector")
        qd = hermitize(np.asarray(self.Q_d, dtype=complex))
        budget = float(np.real(np.trace(qd))) + self.pilot_power
        if budget > self.total_power * (1 + 1e-9) + 1e-12:
            raise ValueError("trace(Q_d) + P_p exceeds the power budget")
        object.__setattr__(self, "v_p", v)
        object.__setattr__(self, "Q_d", qd)

    @property
    def pilot_power(self):
        return self.power_split * self.total_power

    @property
    def refined_power(self):
        return (1.0 - self.power_split) * self.total_power


@dataclass(frozen=True)
class SEstimate:
    """Projection-based estimate of the uncertainty scalar s."""
    s_hat: complex
    error_var: float


def _stack_rows(w, f_mat, g_mat):
    return np.vstack([w.conj() @ f_mat, w.conj() @ g_mat])


def build_precoder(f_mat, g_mat, tol=None):
    """Construct V (and its certifying annihilator w) with
    rank[FV GV] <= N-1, then the bases of span(FV, GV) and its complement.

    Rank-deficient F (or G) yields w directly from the left kernel; in the
    regular case the pencil F + tG is made singular at an eigenvalue t* of
    the pair (F, -G) and w is the corresponding left null vector. V spans
    the common kernel of the rows w^H F and w^H G. Raises
    PrecoderConstructionError with the measured residuals if the
    construction misses its tolerances.
    """
    f_mat = np.asarray(f_mat, dtype=complex)
    g_mat = np.asarray(g_mat, dtype=complex)
    n = f_mat.shape[0]
    if n < 2:
        raise ValueError("need N >= 2")
    if tol is None:
        tol = RANK_RTOL * n

    sf = np.linalg.svd(f_mat, compute_uv=False)
    sg = np.linalg.svd(g_mat, compute_uv=False)
    if sf[-1] <= tol * sf[0] or sf[0] == 0.0:
        uf, _, _ = np.linalg.svd(f_mat)
        w = uf[:, -1]
    elif sg[-1] <= tol * sg[0]:
        ug, _, _ = np.linalg.svd(g_mat)
        w = ug[:, -1]
    else:
        eigvals = scipy.linalg.eig(f_mat, -g_mat, right=False)
        finite = eigvals[np.isfinite(eigvals)]
        if finite.size == 0:
            raise PrecoderConstructionError("pencil has no finite root")
        t_star = finite[np.argmin(np.abs(finite))]
        u_pencil, _, _ = np.linalg.svd(f_mat + t_star * g_mat)
        w = u_pencil[:, -1]
    w = w / np.linalg.norm(w)

    # Common kernel of the two rows: all but the leading right singular
    # direction of the stacked 2 x N matrix.
    _, _, vh = np.linalg.svd(_stack_rows(w, f_mat, g_mat))
    v = vh[1:].conj().T

    u, u_perp, d_perp, span_ratio = _split_spaces(f_mat, g_mat, v, tol)

    scale = np.linalg.norm(f_mat) + np.linalg.norm(g_mat)
    residuals = {
        "orthonormality": float(np.linalg.norm(
            v.conj().T @ v - np.eye(n - 1))),
        "span_ratio": span_ratio,
        "perp_leak": float(np.linalg.norm(u_perp.conj().T @ f_mat @ v)
                           + np.linalg.norm(u_perp.conj().T @ g_mat @ v)),
    }
    check_tol = max(tol, 1e-8)
    if residuals["orthonormality"] > 1e-9:
        raise PrecoderConstructionError("V is not semi-unitary", residuals)
    if scale > 0 and (span_ratio > check_tol
                      or residuals["perp_leak"] > check_tol * scale):
        raise PrecoderConstructionError(
            "aligned-subspace residuals exceed tolerance", residuals)
    return AlignmentPrecoder(V=v, w=w, U=u, U_perp=u_perp, d_perp=d_perp,
                             residuals=residuals)


def _split_spaces(f_mat, g_mat, v, tol):
    n = f_mat.shape[0]
    concat = np.hstack([f_mat @ v, g_mat @ v])
    u_full, sing, _ = np.linalg.svd(concat)
    if sing.size == 0 or sing[0] == 0.0:
        return u_full[:, :0], u_full, n, 0.0
    rank = int(np.sum(sing > tol * sing[0]))
    rank = min(rank, n - 1)  # Lemma guarantee: the span misses w.
    span_ratio = float(sing[min(n - 1, sing.size - 1)] / sing[0]) \
        if sing.size >= n else 0.0
    return u_full[:, :rank], u_full[:, rank:], n - rank, span_ratio


def subspace_bases(f_mat, g_mat, v, tol=None):
    """Orthonormal bases (U, U_perp) of span(FV, GV) and its complement,
    plus the complement dimension."""
    f_mat = np.asarray(f_mat, dtype=complex)
    g_mat = np.asarray(g_mat, dtype=complex)
    if tol is None:
        tol = RANK_RTOL * f_mat.shape[0]
    u, u_perp, d_perp, _ = _split_spaces(f_mat, g_mat, v, tol)
    return u, u_perp, d_perp


def choose_pilot_direction(g_mat, u_perp):
    """Pilot direction maximizing the observable part of s.

    v_p is the leading right singular vector of U_perp^H G, maximizing
    ||U_perp^H G v||: the s-estimation SNR per unit pilot power. Returns
    (v_p, observable); observable=False flags U_perp^H G ~ 0 (s cannot be
    seen through the pilot), with an arbitrary unit fallback direction.
    """
    g_mat = np.asarray(g_mat, dtype=complex)
    n = g_mat.shape[0]
    m = u_perp.conj().T @ g_mat
    sing = np.linalg.svd(m, compute_uv=False)
    scale = np.linalg.norm(g_mat)
    if sing.size == 0 or scale == 0.0 or sing[0] <= 1e-14 * max(scale, 1.0):
        fallback = np.zeros(n, dtype=complex)
        fallback[0] = 1.0
        return fallback, False
    _, _, vh = np.linalg.svd(m)
    return vh[0].conj(), True


def estimate_s(y_perp, g_perp, sigma2):
    """LMMSE estimate of s from the aligned-complement observation:
    s_hat = g_perp^H y_perp / (||g_perp||^2 + 1/sigma^2), with error
    variance 1 / (||g_perp||^2 + 1/sigma^2)."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    if sigma2 == 0.0:
        return SEstimate(s_hat=0j, error_var=0.0)
    y_perp = np.asarray(y_perp, dtype=complex).reshape(-1)
    g_perp = np.asarray(g_perp, dtype=complex).reshape(-1)
    precision = float(np.real(np.vdot(g_perp, g_perp))) + 1.0 / sigma2
    return SEstimate(s_hat=complex(np.vdot(g_perp, y_perp)) / precision,
                     error_var=1.0 / precision)


def _interference_cov(ch, precoder, x_p, q_d, sigma_es2):
    u, v = precoder.U, precoder.V
    m = u.shape[1]
    spread = np.outer(x_p, x_p.conj()) + v @ q_d @ v.conj().T
    gu = u.conj().T @ ch.G
    return hermitize(np.eye(m, dtype=complex)
                     + sigma_es2 * (gu @ spread @ gu.conj().T))


def refined_error_cov(ch, precoder, s_hat, x_p, q_d, sigma_es2):
    """Conditional LMMSE error covariance of the refined layer given
    (s_hat, x_p), and the disturbance covariance R it is computed against.

    Uses the inverse-free form so rank-deficient Q_d is supported.
    """
    u, v = precoder.U, precoder.V
    q_d = hermitize(np.asarray(q_d, dtype=complex))
    r = _interference_cov(ch, precoder, np.asarray(x_p, dtype=complex),
                          q_d, sigma_es2)
    t = u.conj().T @ (ch.F + s_hat * ch.G) @ v
    tq = t @ q_d
    inner = hermitize(tq @ t.conj().T + r)
    c_e = hermitize(q_d - tq.conj().T @ np.linalg.solve(inner, tq))
    return c_e, r


def _refined_logdet_batch(a_eff, b_eff, s_hats):
    """log det(I + Z Z^H) for Z = a_eff + s * b_eff over a batch of s."""
    m = a_eff.shape[0]
    z = a_eff[None, :, :] + s_hats[:, None, None] * b_eff[None, :, :]
    mats = np.eye(m, dtype=complex) + z @ np.conj(np.swapaxes(z, 1, 2))
    return logdet_psd_stack(mats)


def rate_refined(ch, precoder, scheme, mc=None):
    """Refined-layer rate: E[log det(I + Q_d T^H R^{-1} T)] with
    T = U^H (F + s_hat G) V, averaged over the estimator output s_hat
    (and over the coarse symbol in superposition mode)."""
    mc = mc or MCConfig()
    u, u_perp, v = precoder.U, precoder.U_perp, precoder.V
    q_half = psd_sqrt(scheme.Q_d)
    m = u.shape[1]
    if m == 0:
        return exact_estimate(0.0, seed=mc.seed)

    a_proj = u.conj().T @ ch.F @ v
    b_proj = u.conj().T @ ch.G @ v

    if ch.sigma2 == 0.0:
        z = a_proj @ q_half
        val = logdet_psd(np.eye(m, dtype=complex) + z @ z.conj().T)
        return exact_estimate(val, seed=mc.seed)

    if scheme.mode == PILOT:
        x_p = math.sqrt(scheme.pilot_power) * scheme.v_p
        g_perp = u_perp.conj().T @ (ch.G @ x_p)
        sigma_es2 = 1.0 / (float(np.real(np.vdot(g_perp, g_perp)))
                           + 1.0 / ch.sigma2)
        r = _interference_cov(ch, precoder, x_p, scheme.Q_d, sigma_es2)
        chol = np.linalg.cholesky(r)
        a_eff = np.linalg.solve(chol, a_proj @ q_half)
        b_eff = np.linalg.solve(chol, b_proj @ q_half)
        shat_var = max(ch.sigma2 - sigma_es2, 0.0)
        values = np.empty(mc.n_samples, dtype=float)
        for lo in range(0, mc.n_samples, mc.batch_size):
            hi = min(lo + mc.batch_size, mc.n_samples)
            s_hats = np.empty(hi - lo, dtype=complex)
            for k in range(lo, hi):
                s_hats[k - lo] = complex_normal(sample_rng(mc.seed, k),
                                                shat_var)
            values[lo:hi] = _refined_logdet_batch(a_eff, b_eff, s_hats)
        return mean_stderr(values, mc.seed)

    # Superposition: the pilot symbol is data, so the estimator quality
    # varies with |w_p|; everything is recomputed per sample.
    b_base = u_perp.conj().T @ (ch.G @ scheme.v_p)
    b_norm2 = float(np.real(np.vdot(b_base, b_base)))
    values = np.empty(mc.n_samples, dtype=float)
    eye_m = np.eye(m, dtype=complex)
    for i in range(mc.n_samples):
        rng = sample_rng(mc.seed, i)
        w_p = complex_normal(rng, scheme.pilot_power)
        x_p = scheme.v_p * w_p
        sigma_es2 = 1.0 / (abs(w_p) ** 2 * b_norm2 + 1.0 / ch.sigma2)
        r = _interference_cov(ch, precoder, x_p, scheme.Q_d, sigma_es2)
        chol = np.linalg.cholesky(r)
        s_hat = complex_normal(rng, max(ch.sigma2 - sigma_es2, 0.0))
        z = np.linalg.solve(chol, (a_proj + s_hat * b_proj) @ q_half)
        values[i] = logdet_psd(eye_m + z @ z.conj().T)
    return mean_stderr(values, mc.seed)


def _coarse_log_density(a_dot_y, b_dot_y, y_norm2, w, a_norm2, b_dot_a,
                        b_norm2, sigma2, d_perp):
    """log CN(a w; I + sigma^2 |w|^2 b b^H) density of observations y.

    Works from precomputed inner products a^H y, b^H y, ||y||^2. `w` is
    broadcast against them: pass shape (M,) against samples of shape
    (n, 1) for the pairwise mixture matrix, or an aligned (n,) vector for
    the per-sample conditional term. The inverse and determinant of the
    rank-one-updated covariance are closed form.
    """
    w_abs2 = np.abs(w) ** 2
    det_term = np.log1p(sigma2 * w_abs2 * b_norm2)
    kappa = sigma2 * w_abs2 / (1.0 + sigma2 * w_abs2 * b_norm2)
    resid_norm2 = y_norm2 - 2.0 * np.real(np.conj(w) * a_dot_y) \
        + w_abs2 * a_norm2
    b_resid = b_dot_y - w * b_dot_a
    quad = resid_norm2 - kappa * np.abs(b_resid) ** 2
    return -d_perp * np.log(np.pi) - det_term - quad


def rate_coarse(ch, precoder, scheme, mc=None, n_mixture=1000):
    """Coarse-layer rate through the aligned complement.

    Pilot mode carries no information (exactly zero). In superposition
    mode the scalar channel is y_perp = (a + s b) w_p + z with
    a = U_perp^H F v_p, b = U_perp^H G v_p; the conditional entropy term
    is closed-form Gaussian and the marginal entropy is estimated with a
    Gaussian-mixture plug-in (n_mixture components, log-sum-exp
    stabilized). The plug-in carries a small positive bias at finite
    mixture size.
    """
    mc = mc or MCConfig()
    if scheme.mode == PILOT:
        return exact_estimate(0.0, seed=mc.seed)
    if n_mixture < 1000:
        raise ValueError("mixture estimator needs at least 1000 components")

    u_perp = precoder.U_perp
    a = u_perp.conj().T @ (ch.F @ scheme.v_p)
    b = u_perp.conj().T @ (ch.G @ scheme.v_p)
    d_perp = a.size
    p_p = scheme.pilot_power
    a_norm2 = float(np.real(np.vdot(a, a)))
    b_norm2 = float(np.real(np.vdot(b, b)))
    b_dot_a = complex(np.vdot(b, a))  # b^H a

    mix_seed = (int(mc.seed) ^ _MIXTURE_KEY_OFFSET) & 0xFFFFFFFFFFFFFFFF
    w_mix = np.empty(n_mixture, dtype=complex)
    for j in range(n_mixture):
        w_mix[j] = complex_normal(sample_rng(mix_seed, j), p_p)

    n = mc.n_samples
    values = np.empty(n, dtype=float)
    for lo in range(0, n, mc.batch_size):
        hi = min(lo + mc.batch_size, n)
        size = hi - lo
        w_out = np.empty(size, dtype=complex)
        ys = np.empty((size, d_perp), dtype=complex)
        for k in range(lo, hi):
            rng = sample_rng(mc.seed, k)
            w_out[k - lo] = complex_normal(rng, p_p)
            s = complex_normal(rng, ch.sigma2) if ch.sigma2 > 0 else 0j
            z = complex_normal(rng, 1.0, size=d_perp)
            ys[k - lo] = (a + s * b) * w_out[k - lo] + z
        y_norm2 = np.real(np.sum(np.abs(ys) ** 2, axis=1))
        a_dot_y = ys @ a.conj()   # a^H y per sample
        b_dot_y = ys @ b.conj()   # b^H y per sample
        log_p_cond = _coarse_log_density(
            a_dot_y, b_dot_y, y_norm2, w_out,
            a_norm2, b_dot_a, b_norm2, ch.sigma2, d_perp)
        log_mix = _coarse_log_density(
            a_dot_y[:, None], b_dot_y[:, None], y_norm2[:, None],
            w_mix[None, :], a_norm2, b_dot_a, b_norm2, ch.sigma2, d_perp)
        log_qhat = scipy.special.logsumexp(log_mix, axis=1) \
            - np.log(n_mixture)
        values[lo:hi] = log_p_cond - log_qhat
    return mean_stderr(values, mc.seed)


def rate_sa(ch, precoder, scheme, mc=None, n_mixture=1000):
    """Combined two-layer rate: coarse + refined, stderrs in quadrature."""
    mc = mc or MCConfig()
    coarse = rate_coarse(ch, precoder, scheme, mc, n_mixture=n_mixture)
    refined = rate_refined(ch, precoder, scheme, mc)
    return combine_quadrature(coarse, refined)


def make_scheme(ch, precoder, power, rho, mode=PILOT):
    """Assemble a scheme: pilot direction from the complement geometry,
    isotropic refined-layer covariance on the N-1 precoded streams."""
    n = ch.dim
    v_p, observable = choose_pilot_direction(ch.G, precoder.U_perp)
    p_d = (1.0 - rho) * power
    q_d = (p_d / (n - 1)) * np.eye(n - 1, dtype=complex)
    return SchemeConfig(mode=mode, power_split=rho, total_power=power,
                        Q_d=q_d, v_p=v_p, s_observable=observable)


def optimize_scheme(ch, power, mc=None, mode=PILOT, rho_grid=None,
                    precoder=None):
    """Grid search over the power split rho; every candidate is a valid
    lower bound, so the best-scoring configuration is returned. The same
    seed is reused across candidates (common random numbers), making the
    selected rho deterministic."""
    if power < 0:
        raise ValueError("power must be >= 0")
    mc = mc or MCConfig()
    if precoder is None:
        precoder = build_precoder(ch.F, ch.G)
    if rho_grid is None:
        rho_grid = np.linspace(0.05, 0.5, 8)
    best_scheme, best_rate = None, -np.inf
    for rho in rho_grid:
        scheme = make_scheme(ch, precoder, power, float(rho), mode=mode)
        est = rate_sa(ch, precoder, scheme, mc)
        if est.mean > best_rate:
            best_scheme, best_rate = scheme, est.mean
    return best_scheme
