"""Closed-form uncertainty-perception bounds and plane classification."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DomainError, OrderViolation

DEFAULT_REGION_TOL = 0.02

# Beyond this exponent 2a - 1 overflows; gamma ~ exp(-x) / 4 is exact to double precision.
_LARGE_EXPONENT = 700.0


class DivergenceKind(str, enum.Enum):
    RENYI_HALF = "renyi-half"
    HELLINGER = "hellinger"


class Region(str, enum.Enum):
    IMPOSSIBLE = "impossible"
    OPTIMAL = "optimal"
    SUBOPTIMAL = "suboptimal"


def _gamma_from_exponent(x: float) -> float:
    """gamma = 1 / (b + sqrt(b^2 - 1)) with b = 2 e^x - 1.

    Rationalised form of ``b - sqrt(b^2 - 1)``: no cancellation for large x,
    and ``b^2 - 1 = 4 e^x (e^x - 1)`` keeps small x accurate through expm1.
    """
    if x < 0:
        raise DomainError(f"exponent must be nonnegative, got {x}")
    if x > _LARGE_EXPONENT:
        return math.exp(-x - math.log(4.0))
    a = math.exp(x)
    b = 2.0 * a - 1.0
    return 1.0 / (b + 2.0 * math.sqrt(a * math.expm1(x)))


def gamma_opt(P: float, d: int) -> float:
    """Optimal scale gamma(P) of the minimiser ``Sigma_hat = gamma * Sigma_post``."""
    if P < 0:
        raise DomainError(f"perception index must be nonnegative, got {P}")
    if math.isinf(P):
        return 0.0
    return _gamma_from_exponent(2.0 * P / d)


def eta(P: float, d: int) -> float:
    """Uncertainty multiplier for Rényi-1/2 perception: 2 at P=0, decreasing to 1."""
    return 1.0 + gamma_opt(P, d)


def gamma_residual(gamma: float, P: float, d: int) -> float:
    """Residual of the optimality condition ``gamma^2 + 2 gamma + 1 = 4 gamma e^(2P/d)``."""
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return gamma * gamma + 2.0 * gamma + 1.0 - 4.0 * gamma * math.exp(2.0 * P / d)


def eta_hellinger(P: float, d: int) -> float:
    """Uncertainty multiplier when perception is measured by the Hellinger distance.

    Same closed form as :func:`eta` with ``e^(2P/d)`` replaced by ``(1-P)^(-4/d)``.
    """
    if P < 0 or P > 1 or math.isnan(P):
        raise DomainError(f"Hellinger perception must lie in [0, 1], got {P}")
    if P == 1.0:
        return 1.0
    return 1.0 + _gamma_from_exponent(-4.0 * math.log1p(-P) / d)


def eta_for(kind: DivergenceKind, P: float, d: int) -> float:
    if DivergenceKind(kind) is DivergenceKind.HELLINGER:
        return eta_hellinger(P, d)
    return eta(P, d)


@dataclass(frozen=True)
class PlaneContext:
    """What a point on the uncertainty-perception plane is judged against.

    ``n_xy`` is the inherent uncertainty N(X|Y), ``n_xgy`` its Gaussian
    envelope N(X_G|Y) (the entropy power of the Gaussian with the same
    conditional covariance).
    """

    d: int
    n_xy: float
    n_xgy: float
    divergence_kind: DivergenceKind = DivergenceKind.RENYI_HALF

    def __post_init__(self):
        object.__setattr__(self, "divergence_kind", DivergenceKind(self.divergence_kind))
        if self.d < 1:
            raise DomainError(f"dimension must be positive, got {self.d}")
        if self.n_xy < 0 or self.n_xgy < 0:
            raise DomainError("entropy powers must be nonnegative")
        if self.n_xy > self.n_xgy:
            raise OrderViolation(
                f"inherent uncertainty {self.n_xy} exceeds its Gaussian envelope {self.n_xgy}"
            )


@dataclass(frozen=True)
class UpPoint:
    perception: float
    uncertainty: float
    label: str = ""
    divergence_kind: DivergenceKind = DivergenceKind.RENYI_HALF

    def __post_init__(self):
        object.__setattr__(self, "divergence_kind", DivergenceKind(self.divergence_kind))
        if not math.isfinite(self.perception) or self.perception < 0:
            raise DomainError(f"perception must be finite and >= 0, got {self.perception}")
        if self.divergence_kind is DivergenceKind.HELLINGER and self.perception > 1:
            raise DomainError("Hellinger perception must lie in [0, 1]")
        if self.uncertainty < 0:
            raise DomainError("uncertainty must be nonnegative")


@dataclass(frozen=True)
class RegionVerdict:
    region: Region
    lower: float
    upper: float
    slack: float


def up_region_bounds(P: float, ctx: PlaneContext) -> tuple[float, float]:
    """Lower and upper limits of the optimal band at perception ``P``."""
    k = eta_for(ctx.divergence_kind, P, ctx.d)
    return k * ctx.n_xy, k * ctx.n_xgy


def classify_point(pt: UpPoint, ctx: PlaneContext, tol: float = DEFAULT_REGION_TOL) -> RegionVerdict:
    """Place ``pt`` in the impossible, optimal or suboptimal region.

    The band ``[lower*(1-tol), upper*(1+tol)]`` counts as optimal. ``slack`` is
    the signed distance ``uncertainty - bound`` to the violated bound, or to
    the nearer one inside the band.
    """
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    if pt.divergence_kind is not ctx.divergence_kind:
        raise DomainError(
            f"point measured with {pt.divergence_kind.value}, plane uses {ctx.divergence_kind.value}"
        )
    lower, upper = up_region_bounds(pt.perception, ctx)
    u = pt.uncertainty
    if u < lower * (1.0 - tol):
        return RegionVerdict(Region.IMPOSSIBLE, lower, upper, u - lower)
    if u > upper * (1.0 + tol):
        return RegionVerdict(Region.SUBOPTIMAL, lower, upper, u - upper)
    to_lower, to_upper = u - lower, u - upper
    slack = to_lower if abs(to_lower) <= abs(to_upper) else to_upper
    return RegionVerdict(Region.OPTIMAL, lower, upper, slack)


def _example1_root(P: float) -> float:
    """``P + 1 - sqrt((P+1)^2 - 1)``, rationalised for large P."""
    c = P + 1.0
    return 1.0 / (c + math.sqrt(P * (P + 2.0)))


def example1_up(P: float, sigma2: float) -> tuple[float, float]:
    """Closed-form UP function for scalar Gaussian denoising.

    ``Y = X + W`` with X ~ N(0, 1), W ~ N(0, sigma2) and estimators
    ``E[X|Y] + Z``, Z ~ N(0, sigma_z^2), under the symmetric-KL constraint.

    Returns
    -------
    U : float
        ``sigma_q^2 * (1 + root^2)`` where ``sigma_q^2 = sigma2 / (1 + sigma2)``.
    sigma_z_star : float
        The optimal injected noise level ``sigma_q * root``.
    """
    if P < 0:
        raise DomainError("perception index must be nonnegative")
    if sigma2 <= 0:
        raise DomainError("noise variance must be positive")
    var_q = sigma2 / (1.0 + sigma2)
    root = 0.0 if math.isinf(P) else _example1_root(P)
    return var_q * (1.0 + root * root), math.sqrt(var_q) * root


def example1_divergence(sigma_z, sigma_q):
    """Symmetric-KL perception of ``E[X|Y] + Z`` in the scalar denoising example:
    ``(sigma_q^2 + sigma_z^2) / (2 sigma_z sigma_q) - 1``."""
    return (sigma_q * sigma_q + sigma_z * sigma_z) / (2.0 * sigma_z * sigma_q) - 1.0


def check_distortion_bound(mse_per_dim: float, error_entropy_power: float, tol: float = 0.0) -> tuple[bool, float]:
    """Per-dimension MSE must dominate the error entropy power."""
    if not (math.isfinite(mse_per_dim) and math.isfinite(error_entropy_power)):
        raise DomainError("inputs must be finite")
    holds = mse_per_dim >= error_entropy_power * (1.0 - tol)
    return holds, mse_per_dim - error_entropy_power


def gaussianity_gap(n_xy: float, dkl_to_gaussian: float, d: int) -> float:
    """Gaussian envelope ``n_xy * exp(2 D_KL / d)`` from the inherent uncertainty."""
    if n_xy < 0 or dkl_to_gaussian < 0:
        raise DomainError("inputs must be nonnegative")
    return n_xy * math.exp(2.0 * dkl_to_gaussian / d)


def theorem1_bounds(n_xy: float, n_xgy: float) -> tuple[float, float]:
    """Bounds on U(P) valid for every perception level: ``[n_xy, 2 n_xgy]``."""
    if n_xy > n_xgy:
        raise OrderViolation(f"n_xy={n_xy} exceeds n_xgy={n_xgy}")
    return float(n_xy), 2.0 * n_xgy


def linear_grid(p_min: float, p_max: float, num: int) -> list[float]:
    if num < 1 or p_max < p_min or p_min < 0:
        raise DomainError(f"invalid grid [{p_min}, {p_max}] with {num} points")
    if num == 1:
        return [float(p_min)]
    step = (p_max - p_min) / (num - 1)
    return [p_min + i * step for i in range(num)]


def curve_rows(ctx: PlaneContext, grid: Iterable[float]) -> list[tuple[float, float, float, float]]:
    rows = []
    for P in grid:
        k = eta_for(ctx.divergence_kind, P, ctx.d)
        rows.append((P, k, k * ctx.n_xy, k * ctx.n_xgy))
    return rows


def curves_csv(contexts: Sequence[PlaneContext], grid: Sequence[float]) -> str:
    """CSV text with columns d, P, eta, lower, upper for every context."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "P", "eta", "lower", "upper"])
    for ctx in contexts:
        for P, k, lo, hi in curve_rows(ctx, grid):
            w.writerow([ctx.d, repr(P), repr(k), repr(lo), repr(hi)])
    return buf.getvalue()
