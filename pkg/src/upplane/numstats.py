"""Numeric core: sample arrays, SPD algebra, special functions and Gaussian closed forms.

Everything that involves a determinant is carried in log-space; with 9x9 patches
(d = 81) a plain determinant of a pixel-scale covariance underflows long before
anything interesting happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    EntropyOverflow,
    NonFinite,
    NotPositiveSemidefinite,
    NotSymmetric,
    TooFewSamples,
)

LOG_2PI_E = math.log(2.0 * math.pi * math.e)
EULER_GAMMA = 0.57721566490153286061

# The exponent range of an IEEE double.
_MAX_EXP = math.log(np.finfo(float).max)

_SYMMETRY_RTOL = 1e-10
_NEGATIVE_RTOL = 1e-10
_FLOOR_RTOL = 1e-12


def as_samples(data) -> np.ndarray:
    """Validate ``data`` as an n x d sample array and return it as float64.

    One-dimensional input is read as n scalar samples (d = 1).
    """
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise DimensionMismatch(f"samples must be 1-D or 2-D, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise TooFewSamples(f"empty sample set of shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFinite("sample set contains non-finite entries")
    return x


def eps_floor(lam_max: float) -> float:
    return _FLOOR_RTOL * max(float(lam_max), 1.0)


@dataclass(frozen=True)
class SpdMatrix:
    """Symmetric positive (semi)definite matrix with a cached eigendecomposition.

    Build instances with :meth:`from_array`; eigenvalues below
    ``eps_floor(lambda_max)`` are raised to that floor so the log-determinant
    is always finite.
    """

    entries: np.ndarray
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns match ``eigenvalues``
    logdet: float
    floor: float = field(default=0.0)

    @classmethod
    def from_array(cls, a, *, clamp: bool = True) -> "SpdMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NonFinite("matrix contains non-finite entries")
        scale = np.max(np.abs(a)) if a.size else 0.0
        if np.max(np.abs(a - a.T)) > _SYMMETRY_RTOL * scale:
            raise NotSymmetric("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        w, v = np.linalg.eigh(a)
        w, v = w[::-1], v[:, ::-1]
        lam_max = max(float(w[0]), 0.0)
        if w[-1] < -_NEGATIVE_RTOL * max(lam_max, scale):
            raise NotPositiveSemidefinite(f"smallest eigenvalue {w[-1]:.3e} is negative")
        floor = eps_floor(lam_max) if clamp else 0.0
        if np.any(w < floor):
            w = np.maximum(w, floor)
            a = (v * w) @ v.T
            a = 0.5 * (a + a.T)
        if np.any(w <= 0):
            raise NotPositiveSemidefinite("matrix is singular and clamping is disabled")
        logdet = math.fsum(np.log(w))
        return cls(entries=a, eigenvalues=w, eigenvectors=v, logdet=logdet, floor=floor)

    @classmethod
    def identity(cls, d: int, scale: float = 1.0) -> "SpdMatrix":
        return cls.from_array(scale * np.eye(d))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def det_root(self) -> float:
        """``det(A) ** (1/d)``, the geometric mean of the eigenvalues."""
        return math.exp(self.logdet / self.dim)

    def solve(self, b) -> np.ndarray:
        v, w = self.eigenvectors, self.eigenvalues
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            return v @ ((v.T @ b) / w)
        return v @ ((v.T @ b) / w[:, None])

    def inverse(self) -> np.ndarray:
        v, w = self.eigenvectors, self.eigenvalues
        inv = (v / w) @ v.T
        return 0.5 * (inv + inv.T)

    def sqrt_factor(self) -> np.ndarray:
        """A matrix ``L`` with ``L @ L.T == A`` (symmetric square root)."""
        v, w = self.eigenvectors, self.eigenvalues
        return (v * np.sqrt(w)) @ v.T

    def __add__(self, other: "SpdMatrix") -> "SpdMatrix":
        return SpdMatrix.from_array(self.entries + other.entries)

    def scaled(self, c: float) -> "SpdMatrix":
        return SpdMatrix.from_array(c * self.entries)


@dataclass(frozen=True)
class GaussianModel:
    mean: np.ndarray
    cov: SpdMatrix

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "mean", mean)
        if mean.shape != (self.cov.dim,):
            raise DimensionMismatch(
                f"mean has shape {mean.shape} but covariance is {self.cov.dim}x{self.cov.dim}"
            )

    @property
    def dim(self) -> int:
        return self.cov.dim

    @classmethod
    def centered(cls, cov) -> "GaussianModel":
        cov = cov if isinstance(cov, SpdMatrix) else SpdMatrix.from_array(cov)
        return cls(np.zeros(cov.dim), cov)


def sample_covariance(samples, ridge: float = 0.0) -> SpdMatrix:
    """Unbiased sample covariance plus ``ridge * I``.

    Raises
    ------
    TooFewSamples
        With fewer than two samples.
    NonFinite
        If any entry is NaN or infinite.
    """
    if ridge < 0:
        raise DomainError("ridge must be nonnegative")
    x = as_samples(samples)
    n, d = x.shape
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples for a covariance, got {n}")
    xc = x - x.mean(axis=0)
    cov = (xc.T @ xc) / (n - 1)
    if ridge:
        cov = cov + ridge * np.eye(d)
    return SpdMatrix.from_array(cov)


def gaussian_entropy(cov: SpdMatrix) -> float:
    """Differential entropy (nats) of N(mu, cov): 0.5 * ln((2 pi e)^d det cov)."""
    return 0.5 * (cov.dim * LOG_2PI_E + cov.logdet)


def entropy_power(h: float, d: int) -> float:
    """Entropy power ``exp(2h/d) / (2 pi e)`` of an entropy ``h`` in ``d`` dimensions."""
    if d < 1:
        raise DomainError(f"dimension must be positive, got {d}")
    expo = 2.0 * h / d - LOG_2PI_E
    if expo > _MAX_EXP:
        raise EntropyOverflow(f"entropy power overflows for h={h}, d={d}")
    return math.exp(expo)


def gaussian_renyi_half(p: GaussianModel, q: GaussianModel) -> float:
    """Rényi divergence of order 1/2 between two Gaussians.

    Quadratic mean term ``(1/4) dmu^T ((Sp + Sq)/2)^-1 dmu`` plus the
    log-determinant term ``ln det((Sp+Sq)/2) - (ln det Sp + ln det Sq)/2``.
    """
    if p.dim != q.dim:
        raise DimensionMismatch(f"dimensions differ: {p.dim} vs {q.dim}")
    if np.array_equal(p.mean, q.mean) and np.array_equal(p.cov.entries, q.cov.entries):
        return 0.0
    avg = SpdMatrix.from_array(0.5 * (p.cov.entries + q.cov.entries))
    dmu = p.mean - q.mean
    quad = 0.25 * float(dmu @ avg.solve(dmu)) if np.any(dmu) else 0.0
    logterm = avg.logdet - 0.5 * (p.cov.logdet + q.cov.logdet)
    return max(quad + logterm, 0.0)


def gaussian_kl(p: GaussianModel, q: GaussianModel) -> float:
    """KL(p || q) between Gaussians; used for the symmetric-KL perception axis."""
    if p.dim != q.dim:
        raise DimensionMismatch(f"dimensions differ: {p.dim} vs {q.dim}")
    d = p.dim
    dmu = q.mean - p.mean
    tr = float(np.trace(q.cov.solve(p.cov.entries)))
    quad = float(dmu @ q.cov.solve(dmu))
    return max(0.5 * (tr + quad - d + q.cov.logdet - p.cov.logdet), 0.0)


def gaussian_skl(p: GaussianModel, q: GaussianModel) -> float:
    """Symmetric (Jeffreys) KL divergence, KL(p||q) + KL(q||p)."""
    return gaussian_kl(p, q) + gaussian_kl(q, p)


_ASYMPTOTIC_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)


def digamma(x: float) -> float:
    """Digamma function psi(x) for x > 0.

    Shifts the argument up to x >= 6 with psi(x) = psi(x+1) - 1/x, then sums
    six terms of the Bernoulli asymptotic series. Absolute error < 1e-10.
    """
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"digamma is only defined here for finite x > 0, got {x}")
    shift = 0.0
    while x < 6.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for c in _ASYMPTOTIC_COEFFS:
        series += c * power
        power *= inv2
    return shift + math.log(x) - 0.5 / x - series


def log_unit_ball_volume(d: int) -> float:
    """ln of the volume of the Euclidean unit ball in R^d."""
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)
