"""Shared dense linear algebra helpers.

Everything operates on complex128 arrays. Covariances passed around the
package are Hermitian up to roundoff; the helpers here re-symmetrize and
guard factorizations so near-singular matrices at tiny noise levels do not
abort a bound computation.
"""

import numpy as np

# Eigenvalues below this are clamped when a Cholesky factorization fails
# and we fall back to an eigendecomposition.
EIG_CLAMP = 1e-12

# Singular values below RANK_RTOL * sigma_max * n are treated as zero when
# computing numerical ranks, kernels and spans.
RANK_RTOL = 1e-10


def hermitize(a):
    """Return the Hermitian part (a + a^H)/2."""
    return 0.5 * (a + a.conj().T)


def logdet_psd(m):
    """log det of a Hermitian PSD matrix.

    Cholesky first; on failure (non-PSD from roundoff) falls back to an
    eigendecomposition with eigenvalues clamped at EIG_CLAMP.
    """
    m = hermitize(np.asarray(m))
    try:
        chol = np.linalg.cholesky(m)
        return 2.0 * float(np.sum(np.log(np.real(np.diagonal(chol)))))
    except np.linalg.LinAlgError:
        eigs = np.linalg.eigvalsh(m)
        return float(np.sum(np.log(np.maximum(eigs, EIG_CLAMP))))


def logdet_psd_stack(ms):
    """Batched log det for a stack (..., n, n) of Hermitian PSD matrices."""
    ms = 0.5 * (ms + np.conj(np.swapaxes(ms, -1, -2)))
    sign, ld = np.linalg.slogdet(ms)
    ok = np.real(sign) > 0
    if not np.all(ok):
        bad = np.where(~ok)
        for idx in zip(*bad):
            ld[idx] = logdet_psd(ms[idx])
    return np.real(ld)


def psd_sqrt(q, clip=0.0):
    """Factor a Hermitian PSD matrix as A A^H and return A.

    Small negative eigenvalues from roundoff are clipped at `clip`.
    """
    q = hermitize(np.asarray(q))
    eigs, vecs = np.linalg.eigh(q)
    eigs = np.maximum(eigs, clip)
    return vecs * np.sqrt(eigs)


def min_eig_h(m):
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(hermitize(m))[0])


def solve_hpd(m, b):
    """Solve m x = b for Hermitian PD m via Cholesky (eig fallback)."""
    m = hermitize(np.asarray(m))
    try:
        chol = np.linalg.cholesky(m)
        y = np.linalg.solve(chol, b)
        return np.linalg.solve(chol.conj().T, y)
    except np.linalg.LinAlgError:
        eigs, vecs = np.linalg.eigh(m)
        eigs = np.maximum(eigs, EIG_CLAMP)
        return vecs @ ((vecs.conj().T @ b).T / eigs).T


def inv_hpd(m):
    """Inverse of a Hermitian PD matrix, re-symmetrized."""
    return hermitize(solve_hpd(m, np.eye(m.shape[0], dtype=complex)))


def numerical_rank(s, tol_scale=RANK_RTOL):
    """Numerical rank from a vector of singular values."""
    s = np.asarray(s, dtype=float)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol_scale * s[0] * s.size))


def orthonormal_complement(basis):
    """Orthonormal basis of the orthogonal complement of span(columns).

    `basis` is an n x k matrix with orthonormal-ish columns; returns an
    n x (n - k) matrix with orthonormal columns spanning the complement.
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=complex))
    if basis.shape[0] < basis.shape[1]:
        basis = basis.T
    n, k = basis.shape
    if k == 0:
        return np.eye(n, dtype=complex)
    u, _, _ = np.linalg.svd(basis, full_matrices=True)
    return u[:, k:]


def project_trace_ball(q, budget):
    """Euclidean projection of a Hermitian matrix onto {Q >= 0, tr Q <= budget}.

    Projects the eigenvalue vector onto the nonnegative orthant intersected
    with the trace ball (water-level shift when the budget is active).
    """
    q = hermitize(np.asarray(q))
    eigs, vecs = np.linalg.eigh(q)
    lam = np.maximum(eigs, 0.0)
    total = lam.sum()
    if total > budget:
        # Find the shift t >= 0 with sum(max(eigs - t, 0)) == budget.
        srt = np.sort(eigs)[::-1]
        csum = np.cumsum(srt)
        t = 0.0
        for j in range(len(srt)):
            t = (csum[j] - budget) / (j + 1)
            if j + 1 == len(srt) or srt[j + 1] <= t:
                break
        lam = np.maximum(eigs - t, 0.0)
    return hermitize((vecs * lam) @ vecs.conj().T)


def water_filling(gains, budget):
    """Allocate `budget` over channels with power gains g_i maximizing
    sum log(1 + g_i p_i). Returns the optimal allocation vector.

    Zero-gain channels get zero power; exact water level by sorting.
    """
    g = np.asarray(gains, dtype=float)
    p = np.zeros_like(g)
    active = g > 0
    if budget <= 0 or not np.any(active):
        return p
    inv = 1.0 / g[active]
    order = np.argsort(inv)
    inv_sorted = inv[order]
    k = len(inv_sorted)
    # Largest m with water level mu = (budget + sum inv[:m]) / m above inv[m-1].
    m = k
    while m > 0:
        mu = (budget + inv_sorted[:m].sum()) / m
        if mu > inv_sorted[m - 1]:
            break
        m -= 1
    mu = (budget + inv_sorted[:m].sum()) / m
    alloc = np.zeros(k)
    alloc[order[:m]] = mu - inv_sorted[:m]
    p[active] = alloc
    return p
