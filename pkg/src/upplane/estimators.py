"""Sample-based estimators of entropy, entropy power and divergences.

Entropy uses the Kozachenko-Leonenko k-nearest-neighbour estimator; divergences
use Gaussian-kernel density estimates plugged into an empirical expectation of
the Bhattacharyya coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .errors import (
    BandwidthError,
    DegenerateSamples,
    DimensionMismatch,
    DomainError,
    EmptyInput,
    OrderError,
    TooFewSamples,
    ZeroWeight,
)
from .numstats import as_samples, digamma, entropy_power, log_unit_ball_volume

# Above this dimension a kd-tree degrades to brute force anyway.
TREE_MAX_DIM = 16

_JITTER_RTOL = 1e-12
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class KnnConfig:
    k: int = 3
    search: str = "auto"  # "auto", "tree" or "brute"

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        if self.search not in ("auto", "tree", "brute"):
            raise DomainError(f"unknown neighbour search {self.search!r}")


@dataclass(frozen=True)
class KdeConfig:
    """Kernel density settings.

    ``bandwidth`` is ``"silverman"``, ``"scott"`` or a positive float used as a
    fixed bandwidth in every dimension.
    """

    bandwidth: Union[str, float] = "silverman"
    density_floor: float = 1e-30

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth not in ("silverman", "scott"):
                raise BandwidthError(f"unknown bandwidth rule {self.bandwidth!r}")
        elif not float(self.bandwidth) > 0:
            raise BandwidthError(f"fixed bandwidth must be > 0, got {self.bandwidth}")
        if not self.density_floor > 0:
            raise DomainError("density_floor must be > 0")


def break_ties(x: np.ndarray) -> np.ndarray:
    """Deterministically jitter repeated rows so no two samples coincide.

    The first occurrence of a row is left untouched; each later copy is moved by
    at most ``1e-12 * range`` using a generator seeded with the row index.
    """
    _, first, inverse = np.unique(x, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    dup = np.flatnonzero(first[inverse] != np.arange(len(x)))
    if dup.size == 0:
        return x
    span = float(np.max(np.ptp(x, axis=0)))
    scale = _JITTER_RTOL * (span if span > 0 else 1.0)
    out = x.copy()
    for i in dup:
        rng = np.random.default_rng(int(i))
        out[i] += scale * rng.uniform(-1.0, 1.0, size=x.shape[1])
    return out


def _brute_kth_distance(x: np.ndarray, k: int) -> np.ndarray:
    n, d = x.shape
    chunk = max(1, _CHUNK_ELEMENTS // max(n * d, 1))
    out = np.empty(n)
    for start in range(0, n, chunk):
        block = x[start:start + chunk]
        diff = block[:, None, :] - x[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        # column k of the sorted row, since the zero self-distance sits at 0
        out[start:start + chunk] = np.partition(dist, k, axis=1)[:, k]
    return out


def kth_neighbor_distances(samples, k: int = 3, search: str = "auto") -> np.ndarray:
    """Exact Euclidean distance from every sample to its k-th nearest other sample."""
    x = as_samples(samples)
    n, d = x.shape
    if n < k + 1:
        raise TooFewSamples(f"need at least k+1={k + 1} samples, got {n}")
    if search == "auto":
        search = "tree" if d <= TREE_MAX_DIM else "brute"
    if search == "tree":
        dist, _ = cKDTree(x).query(x, k=k + 1)
        return dist[:, k]
    return _brute_kth_distance(x, k)


def knn_entropy(samples, cfg: KnnConfig = KnnConfig()) -> float:
    """Kozachenko-Leonenko differential entropy estimate in nats.

    ``psi(n) - psi(k) + ln c_d + (d/n) sum_i ln r_i`` where ``r_i`` is the
    distance to the k-th neighbour and ``c_d`` the unit-ball volume.
    """
    x = as_samples(samples)
    n, d = x.shape
    if n < cfg.k + 1:
        raise TooFewSamples(f"need at least k+1={cfg.k + 1} samples, got {n}")
    x = break_ties(x)
    r = kth_neighbor_distances(x, cfg.k, cfg.search)
    if np.any(r <= 0):
        raise DegenerateSamples("zero neighbour distance survived tie breaking")
    mean_log_r = math.fsum(np.log(r)) / n
    return digamma(n) - digamma(cfg.k) + log_unit_ball_volume(d) + d * mean_log_r


def sample_entropy_power(samples, cfg: KnnConfig = KnnConfig()) -> float:
    x = as_samples(samples)
    return entropy_power(knn_entropy(x, cfg), x.shape[1])


def kde_bandwidth(samples, cfg: KdeConfig) -> np.ndarray:
    """Per-dimension Gaussian kernel bandwidths for ``samples``."""
    x = as_samples(samples)
    n, d = x.shape
    if not isinstance(cfg.bandwidth, str):
        return np.full(d, float(cfg.bandwidth))
    sigma = x.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
    if cfg.bandwidth == "silverman":
        factor = (4.0 / (d + 2.0)) ** (1.0 / (d + 4.0)) * n ** (-1.0 / (d + 4.0))
    else:
        factor = n ** (-1.0 / (d + 4.0))
    h = factor * sigma
    if not np.all(h > 0):
        raise BandwidthError("bandwidth rule produced h <= 0 (a constant coordinate?)")
    return h


def kde_log_density(points, centers, h, *, leave_one_out: bool = False) -> np.ndarray:
    """Log of a Gaussian-kernel density fitted on ``centers``, evaluated at ``points``.

    With ``leave_one_out`` the two arrays must be the same sample set and each
    point's own kernel is dropped.
    """
    z = np.asarray(points, dtype=float) / h
    c = np.asarray(centers, dtype=float) / h
    m, d = c.shape
    if leave_one_out:
        if z.shape != c.shape:
            raise DimensionMismatch("leave-one-out needs points == centers")
        if m < 2:
            raise TooFewSamples("leave-one-out needs at least two centers")
    c_sq = np.einsum("ij,ij->i", c, c)
    chunk = max(1, _CHUNK_ELEMENTS // max(m, 1))
    out = np.empty(len(z))
    for start in range(0, len(z), chunk):
        block = z[start:start + chunk]
        sq = np.einsum("ij,ij->i", block, block)[:, None] + c_sq[None, :] - 2.0 * (block @ c.T)
        logk = -0.5 * np.maximum(sq, 0.0)
        if leave_one_out:
            rows = np.arange(len(block))
            logk[rows, start + rows] = -np.inf
        out[start:start + chunk] = logsumexp(logk, axis=1)
    count = m - 1 if leave_one_out else m
    norm = math.log(count) + float(np.sum(np.log(h))) + 0.5 * d * math.log(2.0 * math.pi)
    return out - norm


def _check_pair(p, q, min_n: int = 10):
    x, y = as_samples(p), as_samples(q)
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"dimensions differ: {x.shape[1]} vs {y.shape[1]}")
    if len(x) < min_n or len(y) < min_n:
        raise TooFewSamples(f"need at least {min_n} samples in each set")
    return x, y


def log_bhattacharyya(p, q, cfg: KdeConfig = KdeConfig()) -> float:
    """ln of the estimated Bhattacharyya coefficient E_{x~p} sqrt(q(x)/p(x)).

    p-hat at the p samples is leave-one-out; q-hat is fitted on all q samples.
    """
    x, y = _check_pair(p, q)
    log_p = kde_log_density(x, x, kde_bandwidth(x, cfg), leave_one_out=True)
    log_q = kde_log_density(x, y, kde_bandwidth(y, cfg))
    log_p = np.maximum(log_p, math.log(cfg.density_floor))
    return float(logsumexp(0.5 * (log_q - log_p)) - math.log(len(x)))


def kde_renyi_half(p, q, cfg: KdeConfig = KdeConfig()) -> float:
    """Rényi-1/2 divergence estimate ``-2 ln BC``, clipped at zero."""
    return max(0.0, -2.0 * log_bhattacharyya(p, q, cfg))


def hellinger_from_renyi_half(divergence: float) -> float:
    bc = math.exp(-0.5 * divergence)
    return math.sqrt(max(0.0, 1.0 - bc))


def hellinger_distance(p, q, cfg: KdeConfig = KdeConfig()) -> float:
    """Hellinger distance ``sqrt(1 - BC)`` sharing the BC estimate of :func:`kde_renyi_half`."""
    return hellinger_from_renyi_half(kde_renyi_half(p, q, cfg))


def renyi_order_interval(value_t: float, r: float, t: float) -> tuple[float, float]:
    """Interval containing D_r given D_t, for 0 < r <= t < 1.

    Orders in (0, 1) bound each other: ``(r/t)((1-t)/(1-r)) D_t <= D_r <= D_t``.
    """
    if not (0.0 < r < 1.0 and 0.0 < t < 1.0):
        raise DomainError(f"orders must lie in (0, 1), got r={r}, t={t}")
    if r > t:
        raise OrderError(f"need r <= t, got r={r}, t={t}")
    if value_t < 0:
        raise DomainError("divergence must be nonnegative")
    return (r / t) * ((1.0 - t) / (1.0 - r)) * value_t, float(value_t)


def conditional_pool(values: Sequence[float], weights: Sequence[float]) -> float:
    """Weighted average of per-observation estimates (an expectation over y)."""
    v = np.asarray(values, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if v.size == 0:
        raise EmptyInput("no values to pool")
    if v.shape != w.shape:
        raise DimensionMismatch(f"{v.size} values but {w.size} weights")
    if np.any(w < 0):
        raise DomainError("weights must be nonnegative")
    total = math.fsum(w)
    if total <= 0:
        raise ZeroWeight("weights sum to zero")
    return math.fsum(v * w) / total
