"""Deterministic Monte Carlo expectations and quadrature oracles.

Reproducibility contract: the randomness of sample i is derived solely from
(seed, i) through a counter-based generator (Philox keyed by the seed with
the sample index in the counter block). Estimates are therefore identical
for identical (seed, n_samples) regardless of batch size, evaluation order
or worker count. The final reduction always runs over the fully
materialized per-sample value array (numpy's pairwise summation on a fixed
layout), so it does not depend on how samples were produced.
"""

from dataclasses import dataclass
import math

import numpy as np


@dataclass(frozen=True)
class MCConfig:
    """Sample count, base seed and internal evaluation chunk size."""
    n_samples: int = 10_000
    seed: int = 0
    batch_size: int = 2048

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def with_samples(self, n):
        return MCConfig(n_samples=n, seed=self.seed, batch_size=self.batch_size)


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo result: mean, standard error and provenance."""
    mean: float
    stderr: float
    n_samples: int
    seed: int

    def __add__(self, other):
        if isinstance(other, Estimate):
            return Estimate(
                mean=self.mean + other.mean,
                stderr=math.hypot(self.stderr, other.stderr),
                n_samples=max(self.n_samples, other.n_samples),
                seed=self.seed,
            )
        return Estimate(self.mean + float(other), self.stderr,
                        self.n_samples, self.seed)

    __radd__ = __add__


def exact_estimate(value, seed=0):
    """Wrap a closed-form value as an Estimate with zero stderr."""
    return Estimate(mean=float(value), stderr=0.0, n_samples=0, seed=seed)


def sample_rng(seed, index):
    """Generator for sample `index`: Philox keyed by seed, counter = index.

    Each sample owns a disjoint 2^128-draw counter block, so per-sample
    draws never overlap and depend only on (seed, index).
    """
    return np.random.Generator(
        np.random.Philox(key=np.uint64(seed) & np.uint64(0xFFFFFFFFFFFFFFFF),
                         counter=[0, 0, 0, int(index)]))


def complex_normal(rng, variance, size=None):
    """CN(0, variance) draws: two real normals scaled by sqrt(variance/2)."""
    scale = math.sqrt(variance / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return scale * (re + 1j * im)


def complex_gaussian_samples(seed, n, variance, start=0):
    """Per-sample CN(0, variance) scalars for indices start..start+n-1."""
    out = np.empty(n, dtype=complex)
    for i in range(n):
        out[i] = complex_normal(sample_rng(seed, start + i), variance)
    return out


def mean_stderr(values, seed, n_samples=None):
    """Build an Estimate from a per-sample value array (fixed reduction)."""
    values = np.asarray(values, dtype=float)
    n = values.size if n_samples is None else n_samples
    mean = float(np.sum(values) / values.size)
    if values.size > 1:
        var = float(np.sum((values - mean) ** 2) / (values.size - 1))
        stderr = math.sqrt(max(var, 0.0) / values.size)
    else:
        stderr = 0.0
    return Estimate(mean=mean, stderr=stderr, n_samples=n, seed=seed)


def expect_complex_gaussian(f, variance, mc, vectorized=False):
    """Monte Carlo estimate of E[f(s)] for s ~ CN(0, variance).

    variance = 0 short-circuits to f(0) with zero stderr. With
    `vectorized`, f maps an array of samples to an array of values; the
    result is independent of batch_size either way.
    """
    if variance < 0:
        raise ValueError("variance must be >= 0")
    if variance == 0.0:
        return Estimate(mean=float(f(np.array([0j]))[0] if vectorized else f(0j)),
                        stderr=0.0, n_samples=mc.n_samples, seed=mc.seed)
    n = mc.n_samples
    values = np.empty(n, dtype=float)
    for lo in range(0, n, mc.batch_size):
        hi = min(lo + mc.batch_size, n)
        s = complex_gaussian_samples(mc.seed, hi - lo, variance, start=lo)
        if vectorized:
            values[lo:hi] = np.asarray(f(s), dtype=float)
        else:
            for k, sk in enumerate(s):
                values[lo + k] = float(f(sk))
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise FloatingPointError(
            f"integrand returned a non-finite value at sample index {bad[0]}")
    return mean_stderr(values, mc.seed, n_samples=n)


def gauss_hermite_nodes(nodes):
    """Standard Gauss-Hermite nodes/weights for weight exp(-t^2)."""
    return np.polynomial.hermite.hermgauss(nodes)


def gauss_hermite_2d(f, variance, nodes=64, vectorized=False):
    """Deterministic quadrature of E[f(s)], s ~ CN(0, variance).

    Product Gauss-Hermite rule over (Re s, Im s); each axis is N(0,
    variance/2), so s = sqrt(variance) * (t_i + 1j t_j) with weight
    w_i w_j / pi. Used as the independent oracle for the MC estimators.
    """
    if nodes < 16:
        raise ValueError("use at least 16 nodes per axis")
    if variance == 0.0:
        return float(f(np.array([0j]))[0] if vectorized else f(0j))
    t, w = gauss_hermite_nodes(nodes)
    scale = math.sqrt(variance)
    grid = scale * (t[:, None] + 1j * t[None, :])
    weights = (w[:, None] * w[None, :]) / math.pi
    if vectorized:
        vals = np.asarray(f(grid.ravel()), dtype=float).reshape(grid.shape)
    else:
        vals = np.array([[float(f(grid[i, j])) for j in range(nodes)]
                         for i in range(nodes)])
    return float(np.sum(vals * weights))


def combine_quadrature(*estimates):
    """Sum of estimates with stderrs combined in quadrature."""
    total = estimates[0]
    for est in estimates[1:]:
        total = total + est
    return total
