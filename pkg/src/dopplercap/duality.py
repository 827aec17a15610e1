"""Capacity upper bounds via output-distribution duality.

Mutual information is bounded by E[log 1/q(y)] - h(y|x) for any output
density q. Taking q from a regularized Gamma family indexed by
(alpha, beta, delta=0, S) and bounding the remaining expectations yields,
for alpha in (0, N] and S > 0,

  R_UB = alpha log beta* + log Gamma(alpha) - log Gamma(N) + alpha - N
         - log det S + sup_{||x|| <= r} log( gamma(S,x)^(N-alpha)
                                             / (1 + sigma^2 ||Gx||^2) ),

with gamma(S,x) = tr S + x^H (F^H S F + sigma^2 G^H S G) x and beta*
maximized in closed form over the input covariance (beta is linear in Q).
Every internal maximization here is evaluated exactly or over-estimated
(certified), so reported bounds are always valid; an optional numerical
sup exists for exploration only and is flagged as uncertified.

Specializations: alpha = N makes the sup term vanish and recovers the
log-det bound max_Q log det(I + F Q F^H + sigma^2 G Q G^H), tight at
sigma = 0; alpha = N-1 with S = I gives the closed form whose growth is
(N-1) log P, pinning the degrees of freedom.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .channel import InputCovariance, output_cov
from .gaussian import waterfilling_capacity
from .linalg import hermitize, logdet_psd, project_trace_ball, solve_hpd
from .montecarlo import sample_rng

UB_LOGDET = "ub_logdet"
UB_GENERAL = "ub_general"
UB_DOF = "ub_dof"

SUP_ZERO = "zero"                 # alpha = N: the sup term is exactly 0
SUP_DOF = "dof_closed_form"       # alpha = N-1, S = I: max{N, lambda_max}
SUP_ENVELOPE = "envelope"         # certified over-estimate for general (alpha, S)
SUP_NUMERIC = "numeric"           # multi-start ascent; NOT certified


@dataclass(frozen=True)
class DualityParams:
    """Output-density family parameters; delta is pinned to 0 here."""
    alpha: float
    S: np.ndarray
    r: float
    beta: float
    delta: float = 0.0


@dataclass(frozen=True)
class UpperBoundResult:
    rate_nats: float
    bound_name: str
    certified: bool
    params: DualityParams = None
    q_used: str = ""
    info: dict = field(default_factory=dict)


class SingularGError(ValueError):
    """G is numerically rank deficient; the degrees-of-freedom closed form
    does not apply (use the safe-envelope mode of ub_general instead)."""


def gamma_term(s_mat, f_mat, g_mat, sigma2, x):
    """Conditional output second moment tr S + x^H (F^H S F + s2 G^H S G) x."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    fx = f_mat @ x
    gx = g_mat @ x
    return float(np.real(np.trace(s_mat))
                 + np.real(fx.conj() @ s_mat @ fx)
                 + sigma2 * np.real(gx.conj() @ s_mat @ gx))


def beta_term(s_mat, f_mat, g_mat, sigma2, q, alpha):
    """beta(Q, S) = (1/alpha) tr(S (I + F Q F^H + sigma^2 G Q G^H))."""
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    qm = q.Q if isinstance(q, InputCovariance) else np.asarray(q, dtype=complex)
    sigma_y = hermitize(np.eye(qm.shape[0], dtype=complex)
                        + f_mat @ qm @ f_mat.conj().T
                        + sigma2 * (g_mat @ qm @ g_mat.conj().T))
    return float(np.real(np.trace(s_mat @ sigma_y))) / alpha


def _quad_form_max(s_mat, f_mat, g_mat, sigma2):
    """lambda_max of F^H S F + sigma^2 G^H S G (drives beta over the ball)."""
    m = hermitize(f_mat.conj().T @ s_mat @ f_mat
                  + sigma2 * (g_mat.conj().T @ s_mat @ g_mat))
    return float(np.linalg.eigvalsh(m)[-1]), m


def ub_logdet_objective(ch, q):
    """log det(I + F Q F^H + sigma^2 G Q G^H) at a specific Q."""
    return logdet_psd(output_cov(ch, q))


def ub_logdet(ch, power, max_iters=400, gap_rtol=1e-6):
    """Log-det upper bound max_Q log det Sigma_y(Q), tight at sigma = 0.

    sigma = 0 solves exactly by water-filling. Otherwise projected
    gradient ascent on the concave objective with a convexity
    certificate: the reported rate is objective(Q_hat) + gap, where
    gap = P lambda_max(grad) - tr(grad Q_hat) over-estimates the distance
    to the optimum, so the result is a valid bound even on early stop.
    """
    if power <= 0:
        raise ValueError("power must be > 0")
    n = ch.dim
    if ch.sigma2 == 0.0 or not np.any(ch.G):
        # Sigma_y = I + F Q F^H: exactly the coherent problem.
        value, q_star = waterfilling_capacity(ch.F, power)
        return UpperBoundResult(
            rate_nats=value, bound_name=UB_LOGDET, certified=True,
            q_used="waterfilling", info={"gap": 0.0, "converged": True})

    def grad_at(qm):
        sigma_y = hermitize(np.eye(n, dtype=complex)
                            + ch.F @ qm @ ch.F.conj().T
                            + ch.sigma2 * (ch.G @ qm @ ch.G.conj().T))
        grad = ch.F.conj().T @ solve_hpd(sigma_y, ch.F) \
            + ch.sigma2 * (ch.G.conj().T @ solve_hpd(sigma_y, ch.G))
        return logdet_psd(sigma_y), hermitize(grad)

    qm = (power / n) * np.eye(n, dtype=complex)
    value, grad = grad_at(qm)
    step = power / max(1.0, float(np.linalg.norm(grad)))
    gap = np.inf
    for _ in range(max_iters):
        gap = max(power * float(np.linalg.eigvalsh(grad)[-1]), 0.0) \
            - float(np.real(np.trace(grad @ qm)))
        if gap <= gap_rtol * max(1.0, abs(value)):
            break
        trial = project_trace_ball(qm + step * grad, power)
        trial_value, trial_grad = grad_at(trial)
        if trial_value > value:
            qm, value, grad = trial, trial_value, trial_grad
            step *= 1.2
        else:
            step *= 0.5
            if step < 1e-15 * power:
                break
    converged = gap <= gap_rtol * max(1.0, abs(value))
    bound = value + max(gap, 0.0)
    if not converged:
        # Stalled: cap with the trace-budget envelope, still valid.
        cmax = power * _quad_form_max(np.eye(n, dtype=complex),
                                      ch.F, ch.G, ch.sigma2)[0]
        bound = min(bound, n * math.log1p(cmax / n))
    return UpperBoundResult(
        rate_nats=bound, bound_name=UB_LOGDET, certified=True,
        q_used="pga", info={"gap": float(gap), "converged": bool(converged)})


def _dof_sup_term(ch):
    n = ch.dim
    if ch.sigma2 <= 0:
        raise ValueError("the high-SNR closed form needs sigma^2 > 0")
    sg = np.linalg.svd(ch.G, compute_uv=False)
    if sg[0] == 0.0 or sg[-1] <= 1e-10 * sg[0] * n:
        raise SingularGError(
            "G is numerically singular; use ub_general with the safe "
            "envelope sup mode")
    fhf = hermitize(ch.F.conj().T @ ch.F)
    ghg = hermitize(ch.G.conj().T @ ch.G)
    lam = scipy.linalg.eigh(fhf, ghg, eigvals_only=True)[-1]
    return math.log(max(float(n), 1.0 + lam / ch.sigma2))


def _sup_term(ch, alpha, s_mat, r, mode, seed=0, n_starts=32):
    n = ch.dim
    if mode == SUP_ZERO:
        if abs(alpha - n) > 1e-12:
            raise ValueError("sup mode 'zero' requires alpha = N")
        return 0.0, True
    if mode == SUP_DOF:
        if abs(alpha - (n - 1)) > 1e-12 or \
                np.linalg.norm(s_mat - np.eye(n)) > 1e-12:
            raise ValueError("sup mode 'dof_closed_form' requires "
                             "alpha = N-1 and S = I")
        return _dof_sup_term(ch), True
    if mode == SUP_ENVELOPE:
        lam, _ = _quad_form_max(s_mat, ch.F, ch.G, ch.sigma2)
        tr_s = float(np.real(np.trace(s_mat)))
        return (n - alpha) * math.log(tr_s + r * r * lam), True
    if mode == SUP_NUMERIC:
        return _sup_numeric(ch, alpha, s_mat, r, seed, n_starts), False
    raise ValueError(f"unknown sup mode {mode!r}")


def _sup_numeric(ch, alpha, s_mat, r, seed, n_starts):
    """Multi-start projected ascent of the sup objective; exploration aid
    only: a numerical maximizer can under-estimate a supremum, so results
    with this mode are never certified."""
    n = ch.dim
    _, quad = _quad_form_max(s_mat, ch.F, ch.G, ch.sigma2)
    ghg = hermitize(ch.G.conj().T @ ch.G)
    tr_s = float(np.real(np.trace(s_mat)))

    def objective(x):
        gam = tr_s + float(np.real(x.conj() @ quad @ x))
        gx2 = float(np.real(x.conj() @ ghg @ x))
        return (n - alpha) * math.log(gam) - math.log1p(ch.sigma2 * gx2)

    best = objective(np.zeros(n, dtype=complex))
    for start in range(n_starts):
        rng = sample_rng(seed, start)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x *= r / np.linalg.norm(x)
        step = 0.1 * r
        val = objective(x)
        for _ in range(200):
            gam = tr_s + float(np.real(x.conj() @ quad @ x))
            gx2 = float(np.real(x.conj() @ ghg @ x))
            grad = 2.0 * ((n - alpha) / gam * (quad @ x)
                          - ch.sigma2 / (1.0 + ch.sigma2 * gx2) * (ghg @ x))
            x_new = x + step * grad
            norm = np.linalg.norm(x_new)
            if norm > r:
                x_new *= r / norm
            val_new = objective(x_new)
            if val_new > val:
                x, val = x_new, val_new
                step *= 1.2
            else:
                step *= 0.5
                if step < 1e-12 * r:
                    break
        best = max(best, val)
    return best


def ub_general(ch, power, alpha, s_mat, r=None, sup_mode="auto", seed=0):
    """Duality bound for a fixed (alpha, S), maximized over Q in closed
    form (beta is linear in Q, so beta* = (tr S + P lambda_max)/alpha).

    The input-support radius r only enters the envelope/numeric sup
    modes; it is recorded with the result. Certified results use the
    closed-form or over-estimating sup evaluations only.
    """
    n = ch.dim
    s_mat = hermitize(np.asarray(s_mat, dtype=complex))
    if not 0.0 < alpha <= n:
        raise ValueError("alpha must be in (0, N]")
    if np.linalg.eigvalsh(s_mat)[0] <= 0:
        raise ValueError("S must be positive definite")
    if power <= 0:
        raise ValueError("power must be > 0")
    if r is None:
        r = 10.0 * math.sqrt(power)
    if sup_mode == "auto":
        if abs(alpha - n) <= 1e-12:
            sup_mode = SUP_ZERO
        elif abs(alpha - (n - 1)) <= 1e-12 and \
                np.linalg.norm(s_mat - np.eye(n)) <= 1e-12:
            sup_mode = SUP_DOF
        else:
            sup_mode = SUP_ENVELOPE
    lam, _ = _quad_form_max(s_mat, ch.F, ch.G, ch.sigma2)
    beta_star = (float(np.real(np.trace(s_mat))) + power * lam) / alpha
    sup_val, certified = _sup_term(ch, alpha, s_mat, r, sup_mode, seed=seed)
    rate = alpha * math.log(beta_star) \
        + float(gammaln(alpha) - gammaln(n)) + alpha - n \
        - logdet_psd(s_mat) + sup_val
    params = DualityParams(alpha=float(alpha), S=s_mat, r=float(r),
                           beta=float(beta_star))
    return UpperBoundResult(rate_nats=rate, bound_name=UB_GENERAL,
                            certified=certified, params=params,
                            q_used="beta-maximizing",
                            info={"sup_mode": sup_mode, "sup_term": sup_val})


def ub_general_at_q(ch, q, alpha, s_mat, r=None, sup_mode="auto", seed=0):
    """R_UB evaluated at a specific input covariance (beta exact at Q).

    Diagnostic only: a single-Q evaluation bounds capacity only when
    composed with the outer maximization over Q, which ub_general performs
    in closed form. Used to check the alpha = N, S ~ Sigma_y^{-1}
    specialization against the log-det objective.
    """
    n = ch.dim
    s_mat = hermitize(np.asarray(s_mat, dtype=complex))
    if r is None:
        r = 1.0
    if sup_mode == "auto":
        sup_mode = SUP_ZERO if abs(alpha - n) <= 1e-12 else SUP_ENVELOPE
    beta = beta_term(s_mat, ch.F, ch.G, ch.sigma2, q, alpha)
    sup_val, _ = _sup_term(ch, alpha, s_mat, r, sup_mode, seed=seed)
    return alpha * math.log(beta) + float(gammaln(alpha) - gammaln(n)) \
        + alpha - n - logdet_psd(s_mat) + sup_val


def ub_dof(ch, power):
    """High-SNR bound: alpha = N-1, S = I. Grows as (N-1) log P, so the
    channel offers at most N-1 degrees of freedom."""
    n = ch.dim
    if n < 2:
        raise ValueError("need N >= 2")
    result = ub_general(ch, power, alpha=float(n - 1),
                        s_mat=np.eye(n, dtype=complex), sup_mode=SUP_DOF)
    return UpperBoundResult(rate_nats=result.rate_nats, bound_name=UB_DOF,
                            certified=True, params=result.params,
                            q_used=result.q_used, info=result.info)


def ub_best(ch, power, r=None):
    """Minimum of the two closed-form instantiations (log-det and
    degrees-of-freedom); falls back to log-det alone when G is singular
    or sigma = 0."""
    candidates = [ub_logdet(ch, power)]
    if ch.sigma2 > 0:
        try:
            candidates.append(ub_dof(ch, power))
        except SingularGError:
            pass
    return min(candidates, key=lambda res: res.rate_nats)


def ub_alpha_grid(ch, power, r=None, alphas=None):
    """Exploration sweep over alpha with S = I, certified modes only:
    the exact closed forms at alpha = N and alpha = N-1 (when G allows),
    the safe envelope elsewhere. Returns one result per alpha."""
    n = ch.dim
    if alphas is None:
        alphas = range(1, n + 1)
    eye = np.eye(n, dtype=complex)
    results = []
    for alpha in alphas:
        try:
            results.append(ub_general(ch, power, float(alpha), eye, r=r))
        except SingularGError:
            results.append(ub_general(ch, power, float(alpha), eye, r=r,
                                      sup_mode=SUP_ENVELOPE))
    return results


@dataclass(frozen=True)
class SmallSigmaBracket:
    """Leading-order capacity bracket near sigma = 0:
    C_G - lower_gap_coeff * sigma^2 <= C <= C_G + upper_gap_coeff * sigma^2."""
    coherent_capacity: float
    lower_gap_coeff: float
    upper_gap_coeff: float
    q_star: InputCovariance


def small_sigma_bracket(ch, power):
    """Coefficients of the O(sigma^2) capacity bracket around the coherent
    capacity C_G(P).

    Upper side: with Sigma_0* = I + F Q* F^H at the coherent optimum Q*,
    the perturbation cost is at most sigma^2 * max_Q tr(Sigma_0*^{-1}
    G Q G^H) = sigma^2 * P * lambda_max(G^H Sigma_0*^{-1} G). Lower side:
    the second-order expansion of the optimal-decoding rate at Q* gives a
    gap coefficient |tr(Sigma_0*^{-1} G Q* G^H)
    - ||Sigma_0*^{-1} G Q* F^H||_F^2 - tr(G Q* G^H)|.
    """
    if power <= 0:
        raise ValueError("power must be > 0")
    c_g, q_star = waterfilling_capacity(ch.F, power)
    qm = q_star.Q
    n = ch.dim
    sigma0 = hermitize(np.eye(n, dtype=complex) + ch.F @ qm @ ch.F.conj().T)
    sigma0_inv = solve_hpd(sigma0, np.eye(n, dtype=complex))
    gqg = ch.G @ qm @ ch.G.conj().T
    upper = power * float(np.linalg.eigvalsh(
        hermitize(ch.G.conj().T @ sigma0_inv @ ch.G))[-1])
    cross = sigma0_inv @ ch.G @ qm @ ch.F.conj().T
    lower = abs(float(np.real(np.trace(sigma0_inv @ gqg)))
                - float(np.sum(np.abs(cross) ** 2))
                - float(np.real(np.trace(gqg))))
    return SmallSigmaBracket(coherent_capacity=c_g, lower_gap_coeff=lower,
                             upper_gap_coeff=upper, q_star=q_star)
