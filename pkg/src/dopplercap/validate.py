"""Built-in validation suite: re-runs each module's key invariants at a
size that finishes in a couple of minutes and reports pass/fail with the
measured residuals. The CLI maps any hard failure to exit code 2."""

from dataclasses import dataclass
import math
import time

import numpy as np

from . import alignment, duality, gaussian
from .channel import InputCovariance, StructuredChannel
from .montecarlo import MCConfig
from .ofdm import (NTN_TDL_A, OFDMConfig, draw_taps, full_channel,
                   ici_matrix, linearize, scale_delays)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    runtime_s: float
    # Advisory checks report empirical tendencies (not theorems); they are
    # flagged in the report but do not fail the suite.
    advisory: bool = False


def _random_pair(n, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return f, g


def check_ici_identity():
    worst = 0.0
    for n in (4, 16, 64):
        config = OFDMConfig(n_subcarriers=n, n_taps=3)
        resid = np.linalg.norm(ici_matrix(config, 0.0) - np.eye(n)) \
            / math.sqrt(n)
        worst = max(worst, resid)
    return worst < 1e-12, f"max ||B(0)-I||_F/sqrt(N) = {worst:.3e}"


def check_finite_difference(sensitivity_override=None, seeds=range(5)):
    """Linearization vs numerical derivative of the exact channel.

    `sensitivity_override` lets a caller corrupt G (negative control)."""
    worst = 0.0
    for n in (4, 8, 16):
        for seed in seeds:
            rng = np.random.default_rng(seed)
            indices = scale_delays(NTN_TDL_A, 1.0 / (15e3 * 1024))
            taps = draw_taps(NTN_TDL_A, indices, rng)
            config = OFDMConfig(n_subcarriers=n, n_taps=len(taps))
            lin = linearize(config, taps)
            g_mat = lin.sensitivity if sensitivity_override is None \
                else sensitivity_override(lin.sensitivity)
            for eps in (1e-3, 1e-4):
                deriv = (full_channel(config, taps, eps) - lin.nominal) / eps
                rel = np.linalg.norm(deriv - g_mat) / np.linalg.norm(g_mat)
                worst = max(worst, rel / (10 * eps))
    return worst <= 1.0, f"max rel_err/(10*eps) = {worst:.3e}"


def check_lemma1(n_trials=100):
    worst_span, worst_leak = 0.0, 0.0
    trial = 0
    for n in range(2, 9):
        for k in range(n_trials // 7 + 1):
            f, g = _random_pair(n, 5000 + 13 * n + k)
            pre = alignment.build_precoder(f, g)
            concat = np.hstack([f @ pre.V, g @ pre.V])
            sing = np.linalg.svd(concat, compute_uv=False)
            worst_span = max(worst_span, sing[n - 1] / sing[0])
            scale = np.linalg.norm(f) + np.linalg.norm(g)
            rng = np.random.default_rng(trial)
            for _ in range(10):
                s = rng.standard_normal() + 1j * rng.standard_normal()
                leak = np.linalg.norm(
                    pre.U_perp.conj().T @ (f + s * g) @ pre.V) / scale
                worst_leak = max(worst_leak, leak)
            trial += 1
    ok = worst_span < 1e-8 and worst_leak < 1e-8
    return ok, (f"span ratio {worst_span:.3e}, perp leak {worst_leak:.3e} "
                f"over {trial} pairs")


def check_lmmse_oracle(n_draws=200_000):
    f, g = _random_pair(2, 42)
    ch = StructuredChannel(F=f, G=g, sigma2=0.25)
    q = InputCovariance.isotropic(2, 3.0)
    from .gaussian import r0_matrix
    r0 = r0_matrix(ch, q)
    filt = q.Q @ ch.F.conj().T @ np.linalg.inv(
        ch.F @ q.Q @ ch.F.conj().T + r0)
    rng = np.random.default_rng(0)
    xs = (rng.standard_normal((n_draws, 2))
          + 1j * rng.standard_normal((n_draws, 2))) * math.sqrt(1.5 / 2)
    ss = math.sqrt(ch.sigma2 / 2) * (rng.standard_normal(n_draws)
                                     + 1j * rng.standard_normal(n_draws))
    zs = (rng.standard_normal((n_draws, 2))
          + 1j * rng.standard_normal((n_draws, 2))) / math.sqrt(2)
    ys = xs @ ch.F.T + (ss[:, None] * xs) @ ch.G.T + zs
    errs = xs - ys @ filt.T
    emp = (errs.conj().T @ errs / n_draws).T
    expected = gaussian.lmmse_error_cov(ch, q)
    rel = np.linalg.norm(emp - expected) / np.linalg.norm(expected)
    return rel < 0.03, f"rel Frobenius error {rel:.4f} at {n_draws} draws"


def check_s_estimator(n_draws=100_000):
    rng = np.random.default_rng(3)
    g_perp = np.array([0.9, -0.4 + 0.6j])
    sigma2 = 0.01
    s = math.sqrt(sigma2 / 2) * (rng.standard_normal(n_draws)
                                 + 1j * rng.standard_normal(n_draws))
    z = (rng.standard_normal((n_draws, 2))
         + 1j * rng.standard_normal((n_draws, 2))) / math.sqrt(2)
    y = s[:, None] * g_perp + z
    est0 = alignment.estimate_s(y[0], g_perp, sigma2)
    s_hat = (y @ g_perp.conj()) / (np.vdot(g_perp, g_perp).real + 1 / sigma2)
    err = s - s_hat
    mse = float(np.mean(np.abs(err) ** 2))
    corr = abs(np.mean(s_hat.conj() * err)) / (np.std(s_hat) * np.std(err))
    ok = abs(mse - est0.error_var) < 0.02 * est0.error_var and corr < 0.01
    return ok, f"MSE rel dev {abs(mse - est0.error_var) / est0.error_var:.4f}, corr {corr:.4f}"


def check_tap_powers(n_draws=100_000):
    rng = np.random.default_rng(1)
    indices = [0, 2, 4]
    acc = np.zeros(5)
    for _ in range(n_draws):
        acc += np.abs(draw_taps(NTN_TDL_A, indices, rng).coefficients) ** 2
    acc /= n_draws
    expected = NTN_TDL_A.powers_linear
    rel = max(abs(acc[i] - p) / p for i, p in zip(indices, expected))
    return rel < 0.02, f"worst tap power rel dev {rel:.4f}"


def check_sandwich():
    violations = []
    for seed in (0, 1):
        for sigma in (0.1, 0.01):
            f, g = _random_pair(4, 900 + seed)
            ch = StructuredChannel(F=f, G=g, sigma2=sigma ** 2)
            for snr_db in (0.0, 20.0, 40.0):
                power = 4 * 10 ** (snr_db / 10)
                ub = min(duality.ub_logdet(ch, power).rate_nats,
                         duality.ub_dof(ch, power).rate_nats)
                q = InputCovariance.isotropic(4, power)
                mc = MCConfig(n_samples=4000, seed=seed)
                lin = gaussian.rate_gaussian_linear(ch, q)
                opt = gaussian.rate_gaussian_optimal(ch, q, mc)
                pre = alignment.build_precoder(f, g)
                sa = alignment.rate_sa(ch, pre,
                                       alignment.make_scheme(ch, pre, power,
                                                             0.3), mc)
                for name, rate, tol in (
                        ("gaussian_linear", lin.rate_nats, 1e-9),
                        ("gaussian_optimal", opt.rate_nats,
                         3 * opt.stderr_nats),
                        ("sa_pilot", sa.mean, 3 * sa.stderr + 1e-9)):
                    if rate > ub + tol:
                        violations.append((name, sigma, snr_db, rate - ub))
    return not violations, f"{len(violations)} violation(s): {violations[:3]}"


def check_dof_slope():
    f, g = _random_pair(4, 77)
    ch = StructuredChannel(F=f, G=g, sigma2=0.01)
    slope_ub = (duality.ub_dof(ch, 1e6).rate_nats
                - duality.ub_dof(ch, 1e3).rate_nats) / math.log(1e3)
    mc = MCConfig(n_samples=1500, seed=5)
    pre = alignment.build_precoder(f, g)
    sa_rates = []
    for power in (1e3, 1e6):
        scheme = alignment.make_scheme(ch, pre, power, 0.2)
        sa_rates.append(alignment.rate_sa(ch, pre, scheme, mc).mean)
    slope_sa = (sa_rates[1] - sa_rates[0]) / math.log(1e3)
    ok = abs(slope_ub - 3.0) < 0.3 and abs(slope_sa - 3.0) < 0.3
    return ok, f"ub_dof slope {slope_ub:.3f}, sa_pilot slope {slope_sa:.3f}"


def check_rate_ordering_flag():
    """Advisory: linear <= optimal ordering. Holds at high power; at small
    sigma it flips by the predicted O(sigma^2) cross term, so this check
    flags rather than fails."""
    flips = []
    for seed in (100, 104):
        f, g = _random_pair(3, seed)
        ch = StructuredChannel(F=f, G=g, sigma2=0.01)
        q = InputCovariance.isotropic(3, 500.0)
        lin = gaussian.rate_gaussian_linear(ch, q)
        opt = gaussian.rate_gaussian_optimal(
            ch, q, MCConfig(n_samples=8000, seed=seed))
        if lin.rate_nats > opt.rate_nats + 3 * opt.stderr_nats:
            flips.append(seed)
    return not flips, f"high-power ordering flips at seeds {flips}" \
        if flips else "ordering holds at high power"


CHECKS = (
    ("ici_identity", check_ici_identity, False),
    ("finite_difference", check_finite_difference, False),
    ("lemma1_alignment", check_lemma1, False),
    ("lmmse_oracle", check_lmmse_oracle, False),
    ("s_estimator", check_s_estimator, False),
    ("tap_powers", check_tap_powers, False),
    ("sandwich", check_sandwich, False),
    ("dof_slope", check_dof_slope, False),
    ("rate_ordering", check_rate_ordering_flag, True),
)


def run_all(verbose=True):
    results = []
    for name, func, advisory in CHECKS:
        start = time.perf_counter()
        try:
            passed, detail = func()
        except Exception as exc:
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        result = CheckResult(name=name, passed=bool(passed), detail=detail,
                             runtime_s=elapsed, advisory=advisory)
        results.append(result)
        if verbose:
            status = "PASS" if result.passed else (
                "FLAG" if advisory else "FAIL")
            print(f"[{status}] {name}: {detail} ({elapsed:.1f}s)")
    return results


def all_passed(results):
    return all(r.passed for r in results if not r.advisory)
