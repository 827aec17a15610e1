"""Structured-uncertainty channel y = (F + s G) x + z.

F and G are fixed N x N complex matrices known at both ends; s is an
unknown scalar, i.i.d. CN(0, sigma^2) per channel use; z is CN(0, I).
All rates downstream are in nats.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import hermitize, min_eig_h
from .montecarlo import complex_normal

HERMITIAN_TOL = 1e-9


@dataclass(frozen=True)
class StructuredChannel:
    """The triple (F, G, sigma^2) defining H = F + s G."""
    F: np.ndarray
    G: np.ndarray
    sigma2: float
    f_diagonal: bool = False

    def __post_init__(self):
        f = np.asarray(self.F, dtype=complex)
        g = np.asarray(self.G, dtype=complex)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise ValueError("F must be square")
        if g.shape != f.shape:
            raise ValueError("G must match F's shape")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        object.__setattr__(self, "F", f)
        object.__setattr__(self, "G", g)

    @property
    def dim(self):
        return self.F.shape[0]

    @classmethod
    def from_linearization(cls, lin, sigma2):
        """Wrap an OFDM linearization (nominal, sensitivity) as a channel."""
        return cls(F=lin.nominal, G=lin.sensitivity, sigma2=float(sigma2),
                   f_diagonal=True)

    def with_sigma(self, sigma):
        return StructuredChannel(F=self.F, G=self.G, sigma2=float(sigma) ** 2,
                                 f_diagonal=self.f_diagonal)


@dataclass(frozen=True)
class InputCovariance:
    """Hermitian PSD input covariance with trace = transmit power."""
    Q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.Q, dtype=complex)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("Q must be square")
        scale = max(1.0, float(np.linalg.norm(q)))
        if np.linalg.norm(q - q.conj().T) > HERMITIAN_TOL * scale:
            raise ValueError("Q must be Hermitian")
        if min_eig_h(q) < -HERMITIAN_TOL * scale:
            raise ValueError("Q must be positive semidefinite")
        object.__setattr__(self, "Q", hermitize(q))

    @property
    def power(self):
        return float(np.real(np.trace(self.Q)))

    @property
    def dim(self):
        return self.Q.shape[0]

    @classmethod
    def isotropic(cls, n, power):
        """Equal power allocation Q = (P/N) I."""
        return cls(Q=(power / n) * np.eye(n, dtype=complex))


@dataclass(frozen=True)
class ChannelSample:
    """One raw channel use: input x, uncertainty draw s, output y."""
    s: complex
    y: np.ndarray
    x: np.ndarray


def _check_dim(ch, x):
    x = np.asarray(x, dtype=complex).reshape(-1)
    if x.size != ch.dim:
        raise ValueError(f"input dimension {x.size} != channel dimension {ch.dim}")
    return x


def cond_output_cov(ch, x):
    """Covariance of y given x: I + sigma^2 (Gx)(Gx)^H (rank-one update)."""
    x = _check_dim(ch, x)
    gx = ch.G @ x
    return np.eye(ch.dim, dtype=complex) + ch.sigma2 * np.outer(gx, gx.conj())


def h_y_given_x(ch, x):
    """Differential entropy of y given a fixed x, in nats:
    N log(pi e) + log(1 + sigma^2 ||Gx||^2)."""
    x = _check_dim(ch, x)
    gx = ch.G @ x
    return ch.dim * np.log(np.pi * np.e) \
        + float(np.log1p(ch.sigma2 * np.real(np.vdot(gx, gx))))


def cond_cov_given_s(ch, q, s):
    """Output covariance for Gaussian input at a fixed uncertainty draw:
    I + (F + sG) Q (F + sG)^H."""
    qm = q.Q if isinstance(q, InputCovariance) else np.asarray(q, dtype=complex)
    if qm.shape != ch.F.shape:
        raise ValueError("Q dimension mismatch")
    h = ch.F + s * ch.G
    return hermitize(np.eye(ch.dim, dtype=complex) + h @ qm @ h.conj().T)


def output_cov(ch, q):
    """Unconditional output covariance I + F Q F^H + sigma^2 G Q G^H."""
    qm = q.Q if isinstance(q, InputCovariance) else np.asarray(q, dtype=complex)
    if qm.shape != ch.F.shape:
        raise ValueError("Q dimension mismatch")
    return hermitize(np.eye(ch.dim, dtype=complex)
                     + ch.F @ qm @ ch.F.conj().T
                     + ch.sigma2 * (ch.G @ qm @ ch.G.conj().T))


def sample_output(ch, x, rng, zero_noise=False):
    """Draw s ~ CN(0, sigma^2), z ~ CN(0, I) and return y = (F+sG)x + z.

    zero_noise suppresses z (debug aid for exercising the mean path).
    """
    x = _check_dim(ch, x)
    s = complex_normal(rng, ch.sigma2) if ch.sigma2 > 0 else 0j
    y = (ch.F + s * ch.G) @ x
    if not zero_noise:
        y = y + complex_normal(rng, 1.0, size=ch.dim)
    return ChannelSample(s=s, y=y, x=x)
