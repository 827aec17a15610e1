"""Sweep orchestration: evaluate bound grids over channel realizations.

Cells (one per snr x sigma x bound) are independent jobs; each cell
averages its bound over the tap realizations and reports the MC stderrs
combined in quadrature. Per-cell Monte Carlo seeds derive from
(mc_seed, snr index, sigma index, bound index, realization index) through
SeedSequence, so output is identical for any worker count, and rows are
emitted in grid order regardless of completion order.
"""

from concurrent.futures import ProcessPoolExecutor
import math
import multiprocessing
import os
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import alignment, duality, gaussian
from .channel import InputCovariance, StructuredChannel
from .config import ResultRow, SYNTHETIC_SOURCE, rows_to_csv
from .matio import load_channel_pair
from .montecarlo import MCConfig
from .ofdm import build_ntn_channel




def channel_realizations(spec):
    """The (F, G) pairs the sweep averages over, drawn deterministically
    from tap_seed (one pair per realization; synthetic sources have one)."""
    if spec.channel_source == SYNTHETIC_SOURCE:
        f_mat, g_mat = load_channel_pair(spec.f_file, spec.g_file)
        return [(f_mat, g_mat)]
    pairs = []
    for real in range(spec.n_channel_realizations):
        rng = np.random.default_rng(
            np.random.SeedSequence((spec.tap_seed, real)))
        kwargs = {} if spec.profile is None else {"profile": spec.profile}
        _, _, lin = build_ntn_channel(spec.n_subcarriers, rng, **kwargs)
        pairs.append((lin.nominal, lin.sensitivity))
    return pairs


def _cell_seed(mc_seed, i_snr, i_sigma, i_bound, real):
    ss = np.random.SeedSequence((int(mc_seed), i_snr, i_sigma, i_bound, real))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _input_cov(ch, power, policy, mc):
    if policy == "optimized":
        return gaussian.optimize_qx(ch, power, objective="linear", mc=mc)
    return InputCovariance.isotropic(ch.dim, power)


def _eval_bound(bound, ch, power, mc, spec):
    """One bound at one realization. Returns
    (rate, stderr, n_samples, q_policy, certified)."""
    if bound == "gaussian_linear":
        q = _input_cov(ch, power, spec.q_policy, mc)
        res = gaussian.rate_gaussian_linear(ch, q)
        return res.rate_nats, 0.0, 0, spec.q_policy, True
    if bound == "gaussian_optimal":
        q = _input_cov(ch, power, spec.q_policy, mc)
        res = gaussian.rate_gaussian_optimal(ch, q, mc)
        return (res.rate_nats, res.stderr_nats, res.n_samples,
                spec.q_policy, True)
    if bound in ("sa_pilot", "sa_superposition"):
        mode = alignment.PILOT if bound == "sa_pilot" \
            else alignment.SUPERPOSITION
        precoder = alignment.build_precoder(ch.F, ch.G)
        rho_grid = np.linspace(0.05, 0.5, spec.rho_grid_points)
        scheme = alignment.optimize_scheme(ch, power, mc, mode=mode,
                                           rho_grid=rho_grid,
                                           precoder=precoder)
        est = alignment.rate_sa(ch, precoder, scheme, mc)
        policy = f"sa-{mode};rho={scheme.power_split:.4g};qd=isotropic"
        return est.mean, est.stderr, est.n_samples, policy, True
    if bound == "ub_logdet":
        res = duality.ub_logdet(ch, power)
        return res.rate_nats, 0.0, 0, f"ub;{res.q_used}", res.certified
    if bound == "ub_dof":
        res = duality.ub_dof(ch, power)
        return res.rate_nats, 0.0, 0, "ub;beta-max;r=inf", res.certified
    if bound == "ub_general":
        res = duality.ub_best(ch, power)
        return (res.rate_nats, 0.0, 0,
                f"ub;min(logdet,dof);pick={res.bound_name}", res.certified)
    raise ValueError(f"unknown bound {bound!r}")


def _run_cell(args):
    (spec, pairs, i_snr, i_sigma, bound_idx) = args
    snr_db = spec.snr_grid_db[i_snr]
    sigma = spec.sigma_list[i_sigma]
    bound = spec.bounds[bound_idx]
    power = spec.power_for(snr_db)
    start = time.perf_counter()
    rates, variances, n_samples, policy, certified = [], [], 0, "", True
    try:
        # Cells run on one BLAS thread in every execution mode: the
        # matrices are small, parallel workers must not oversubscribe the
        # machine, and serial/parallel paths stay numerically identical.
        with threadpool_limits(limits=1):
            for real, (f_mat, g_mat) in enumerate(pairs):
                ch = StructuredChannel(F=f_mat, G=g_mat, sigma2=sigma ** 2)
                mc = MCConfig(
                    n_samples=spec.mc.n_samples,
                    seed=_cell_seed(spec.mc_seed, i_snr, i_sigma, bound_idx,
                                    real),
                    batch_size=spec.mc.batch_size)
                rate, stderr, n_mc, policy, cert = _eval_bound(
                    bound, ch, power, mc, spec)
                rates.append(rate)
                variances.append(stderr ** 2)
                n_samples = max(n_samples, n_mc)
                certified = certified and cert
        rate = float(np.mean(rates))
        stderr = math.sqrt(sum(variances)) / len(variances)
    except Exception as exc:  # error marker row; the sweep continues
        rate, stderr, n_samples = float("nan"), float("nan"), 0
        policy, certified = f"error:{type(exc).__name__}", False
    wall_ms = int(round((time.perf_counter() - start) * 1e3)) \
        if spec.timings else 0
    return ResultRow(
        snr_db=snr_db, sigma=sigma, n=spec.n_subcarriers, bound_name=bound,
        rate_nats=rate, rate_bits=rate / math.log(2), stderr_nats=stderr,
        n_samples=n_samples, tap_seed=spec.tap_seed, mc_seed=spec.mc_seed,
        q_policy=policy, wall_ms=wall_ms, certified=certified)


def run_sweep(spec, workers=1):
    """Evaluate every (snr, sigma, bound) cell; rows come back in grid
    order and are identical for any worker count.

    Workers use the spawn start method: forking a process whose BLAS
    thread pool is already warm can leave children spinning on inherited
    locks (observed with OpenBLAS), and spawned workers are immune.
    """
    pairs = channel_realizations(spec)
    jobs = [(spec, pairs, i_snr, i_sigma, i_bound)
            for i_snr in range(len(spec.snr_grid_db))
            for i_sigma in range(len(spec.sigma_list))
            for i_bound in range(len(spec.bounds))]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_cell(job) for job in jobs]
    ctx = multiprocessing.get_context("spawn")
    # Spawned children inherit this env, so their BLAS pools initialize
    # single-threaded and never busy-wait against each other.
    thread_vars = ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS",
                   "MKL_NUM_THREADS")
    saved = {key: os.environ.get(key) for key in thread_vars}
    os.environ.update({key: "1" for key in thread_vars})
    try:
        with ProcessPoolExecutor(max_workers=workers,
                                 mp_context=ctx) as pool:
            return list(pool.map(_run_cell, jobs))
    finally:
        for key, value in saved.items():
            if value is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = value


def sweep_to_csv(spec, workers=1):
    return rows_to_csv(run_sweep(spec, workers=workers))
