"""Gaussian-signaling achievable rates.

Two lower bounds for the structured-uncertainty channel, both as functions
of the input covariance Q:

  * optimal decoding:  E_s[log det(I + (F+sG) Q (F+sG)^H)]
                         - log(1 + sigma^2 tr(G Q G^H))
    (Monte Carlo over s; the penalty term is exact)

  * linear receiver (nearest-neighbor metric matched to the LMMSE error
    covariance): log det(I + Q F^H (I + sigma^2 G Q G^H)^{-1} F),
    closed form.

Both are tight at sigma^2 = 0 where they equal the coherent capacity of F.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from .channel import InputCovariance
from .linalg import (hermitize, logdet_psd, logdet_psd_stack, psd_sqrt,
                     project_trace_ball, solve_hpd, water_filling)
from .montecarlo import MCConfig, expect_complex_gaussian

GAUSSIAN_OPTIMAL = "gaussian_optimal"
GAUSSIAN_LINEAR = "gaussian_linear"


@dataclass(frozen=True)
class LowerBoundResult:
    rate_nats: float
    stderr_nats: float
    bound_name: str
    q_used: InputCovariance
    n_samples: int = 0


class SingularInputError(ValueError):
    """Q is singular and the caller did not allow the inverse-free path."""


def r0_matrix(ch, q):
    """Equivalent interference covariance R_0 = I + sigma^2 G Q G^H."""
    qm = q.Q if isinstance(q, InputCovariance) else np.asarray(q, dtype=complex)
    return hermitize(np.eye(ch.dim, dtype=complex)
                     + ch.sigma2 * (ch.G @ qm @ ch.G.conj().T))


def lmmse_error_cov(ch, q, allow_singular=False):
    """LMMSE error covariance (Q^{-1} + F^H R_0^{-1} F)^{-1}.

    For singular Q (allow_singular=True) the algebraically equivalent
    inverse-free form Q - Q F^H (F Q F^H + R_0)^{-1} F Q is used.
    """
    qm = q.Q if isinstance(q, InputCovariance) else np.asarray(q, dtype=complex)
    r0 = r0_matrix(ch, q)
    eigs = np.linalg.eigvalsh(hermitize(qm))
    singular = eigs[0] < 1e-12 * max(1.0, eigs[-1])
    if singular and not allow_singular:
        raise SingularInputError(
            "Q is singular; pass allow_singular=True for the inverse-free form")
    if singular:
        m = hermitize(ch.F @ qm @ ch.F.conj().T + r0)
        fq = ch.F @ qm
        return hermitize(qm - qm @ ch.F.conj().T @ solve_hpd(m, fq))
    inner = hermitize(np.linalg.inv(qm)
                      + ch.F.conj().T @ solve_hpd(r0, ch.F))
    return hermitize(np.linalg.inv(inner))


def rate_gaussian_linear(ch, q):
    """Closed-form linear-receiver rate log det(I + Q F^H R_0^{-1} F).

    Computed through the Hermitian congruence
    det(I + Q F^H R_0^{-1} F) = det(I + L^{-1} F Q F^H L^{-H}), R_0 = L L^H.
    """
    if not isinstance(q, InputCovariance):
        q = InputCovariance(Q=q)
    r0 = r0_matrix(ch, q)
    chol = np.linalg.cholesky(r0)
    b = np.linalg.solve(chol, ch.F)
    m = np.eye(ch.dim, dtype=complex) + b @ q.Q @ b.conj().T
    return LowerBoundResult(rate_nats=logdet_psd(m), stderr_nats=0.0,
                            bound_name=GAUSSIAN_LINEAR, q_used=q)


def _optimal_integrand(f_half, g_half, n):
    eye = np.eye(n, dtype=complex)

    def f(s_batch):
        w = f_half[None, :, :] + s_batch[:, None, None] * g_half[None, :, :]
        m = eye + w @ np.conj(np.swapaxes(w, 1, 2))
        return logdet_psd_stack(m)

    return f


def rate_gaussian_optimal(ch, q, mc=None):
    """Optimal-decoding rate: Monte Carlo over s, exact penalty term.

    sigma^2 = 0 short-circuits to the exact coherent value
    log det(I + F Q F^H).
    """
    if not isinstance(q, InputCovariance):
        q = InputCovariance(Q=q)
    mc = mc or MCConfig()
    half = psd_sqrt(q.Q)
    f_half = ch.F @ half
    if ch.sigma2 == 0.0:
        coherent = logdet_psd(np.eye(ch.dim, dtype=complex)
                              + f_half @ f_half.conj().T)
        return LowerBoundResult(rate_nats=coherent, stderr_nats=0.0,
                                bound_name=GAUSSIAN_OPTIMAL, q_used=q)
    g_half = ch.G @ half
    est = expect_complex_gaussian(
        _optimal_integrand(f_half, g_half, ch.dim), ch.sigma2, mc,
        vectorized=True)
    penalty = float(np.log1p(
        ch.sigma2 * np.real(np.sum(np.abs(g_half) ** 2))))
    return LowerBoundResult(rate_nats=est.mean - penalty,
                            stderr_nats=est.stderr,
                            bound_name=GAUSSIAN_OPTIMAL, q_used=q,
                            n_samples=est.n_samples)


def waterfilling_capacity(f_mat, power):
    """Coherent capacity of the known channel F under a trace constraint.

    Exact water-filling on the squared singular values of F; returns
    (capacity_nats, optimizing InputCovariance).
    """
    f_mat = np.asarray(f_mat, dtype=complex)
    n = f_mat.shape[0]
    _, sing, vh = np.linalg.svd(f_mat)
    gains = sing ** 2
    alloc = water_filling(gains, power)
    value = float(np.sum(np.log1p(gains * alloc)))
    q = hermitize((vh.conj().T * alloc) @ vh)
    return value, InputCovariance(Q=q)


def _grad_linear(ch, qm):
    sigma_y = hermitize(np.eye(ch.dim, dtype=complex)
                        + ch.F @ qm @ ch.F.conj().T
                        + ch.sigma2 * (ch.G @ qm @ ch.G.conj().T))
    r0 = hermitize(np.eye(ch.dim, dtype=complex)
                   + ch.sigma2 * (ch.G @ qm @ ch.G.conj().T))
    grad = ch.F.conj().T @ solve_hpd(sigma_y, ch.F) \
        + ch.sigma2 * (ch.G.conj().T @ solve_hpd(sigma_y, ch.G)) \
        - ch.sigma2 * (ch.G.conj().T @ solve_hpd(r0, ch.G))
    return hermitize(grad)


def _surrogate_optimal(ch, qm, s_draws):
    """Deterministic surrogate of the optimal-decoding objective on fixed
    (common-random-number) s draws; returns (value, gradient)."""
    n = ch.dim
    eye = np.eye(n, dtype=complex)
    value = 0.0
    grad = np.zeros((n, n), dtype=complex)
    for s in s_draws:
        h = ch.F + s * ch.G
        m = hermitize(eye + h @ qm @ h.conj().T)
        value += logdet_psd(m)
        grad += h.conj().T @ solve_hpd(m, h)
    value /= len(s_draws)
    grad /= len(s_draws)
    tr_g = float(np.real(np.trace(ch.G @ qm @ ch.G.conj().T)))
    value -= float(np.log1p(ch.sigma2 * tr_g))
    grad -= ch.sigma2 / (1.0 + ch.sigma2 * tr_g) * (ch.G.conj().T @ ch.G)
    return value, hermitize(grad)


def optimize_qx(ch, power, objective="linear", mc=None, max_iters=200,
                rel_tol=1e-6, n_grad_samples=192):
    """Projected gradient ascent over {Q >= 0, tr Q <= P}.

    Starts from the isotropic allocation, projects eigenvalues onto the
    trace ball each step and halves the step on non-improvement. Any
    feasible iterate is a valid lower-bound input; global optimality is
    not required. For objective="optimal" the expectation over s uses a
    fixed set of draws (common random numbers) across iterations.
    """
    if power < 0:
        raise ValueError("power must be >= 0")
    n = ch.dim
    if power == 0.0:
        return InputCovariance(Q=np.zeros((n, n), dtype=complex))
    if objective not in ("linear", "optimal"):
        raise ValueError(f"unknown objective {objective!r}")
    mc = mc or MCConfig()

    if objective == "optimal" and ch.sigma2 > 0:
        from .montecarlo import complex_gaussian_samples
        s_draws = complex_gaussian_samples(mc.seed, n_grad_samples, ch.sigma2)

        def evaluate(qm):
            return _surrogate_optimal(ch, qm, s_draws)
    else:
        def evaluate(qm):
            val = rate_gaussian_linear(ch, InputCovariance(Q=qm)).rate_nats \
                if objective == "linear" else \
                logdet_psd(np.eye(n, dtype=complex)
                           + ch.F @ qm @ ch.F.conj().T)
            return val, _grad_linear(ch, qm)

    qm = (power / n) * np.eye(n, dtype=complex)
    best_val, grad = evaluate(qm)
    step = power / max(1.0, float(np.linalg.norm(grad)))
    converged = False
    for _ in range(max_iters):
        trial = project_trace_ball(qm + step * grad, power)
        trial_val, trial_grad = evaluate(trial)
        if trial_val > best_val:
            gain = trial_val - best_val
            qm, best_val, grad = trial, trial_val, trial_grad
            if gain < rel_tol * max(1.0, abs(best_val)):
                converged = True
                break
            step *= 1.2
        else:
            step *= 0.5
            if step < 1e-14 * power:
                converged = True
                break
    if not converged:
        warnings.warn("optimize_qx hit the iteration cap; returning the "
                      "best feasible iterate", RuntimeWarning)
    return InputCovariance(Q=qm)
