"""Linear-Gaussian inverse problems: posteriors, the numerically solved UP
problem, and Monte Carlo runs of the ``E[X|Y] + Z`` estimator family."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from . import bounds
from .errors import DimensionMismatch, DomainError, SingularInnovation, TooFewSamples
from .numstats import GaussianModel, SpdMatrix, gaussian_renyi_half, gaussian_skl

log = logging.getLogger(__name__)


def _spd(a) -> SpdMatrix:
    return a if isinstance(a, SpdMatrix) else SpdMatrix.from_array(a)


@dataclass(frozen=True)
class LinearGaussianProblem:
    """``Y = H X + W`` with X ~ N(0, sigma_x) and W ~ N(0, sigma_w)."""

    sigma_x: SpdMatrix
    H: np.ndarray
    sigma_w: SpdMatrix
    posterior_cov: SpdMatrix
    gain: np.ndarray  # E[X|Y] = gain @ y

    @property
    def d(self) -> int:
        return self.sigma_x.dim

    def standard_posterior(self) -> np.ndarray:
        """``Sx - Sx H^T (H Sx H^T + Sw)^-1 H Sx``, recomputed without caching."""
        sx, h = self.sigma_x.entries, self.H
        innovation = h @ sx @ h.T + self.sigma_w.entries
        return sx - sx @ h.T @ np.linalg.solve(innovation, h @ sx)


def build_problem(sigma_x, H, sigma_w) -> LinearGaussianProblem:
    """Assemble a problem and cache its posterior covariance.

    The posterior is formed in Joseph form, ``(I-KH) Sx (I-KH)^T + K Sw K^T``,
    which stays positive semidefinite under rounding even when the
    observation is (nearly) noiseless.
    """
    sx, sw = _spd(sigma_x), _spd(sigma_w)
    h = np.atleast_2d(np.asarray(H, dtype=float))
    d = sx.dim
    if h.shape[1] != d or h.shape[0] != sw.dim:
        raise DimensionMismatch(
            f"H has shape {h.shape}; expected ({sw.dim}, {d}) for the given covariances"
        )
    innovation = SpdMatrix.from_array(h @ sx.entries @ h.T + sw.entries)
    if innovation.floor > 0 and innovation.eigenvalues[-1] <= innovation.floor:
        raise SingularInnovation("H Sx H^T + Sw is singular")
    gain = innovation.solve(h @ sx.entries).T
    i_kh = np.eye(d) - gain @ h
    post = i_kh @ sx.entries @ i_kh.T + gain @ sw.entries @ gain.T
    return LinearGaussianProblem(sx, h, sw, SpdMatrix.from_array(0.5 * (post + post.T)), gain)


def scalar_denoising(sigma2: float) -> LinearGaussianProblem:
    """``Y = X + W`` with X ~ N(0, 1) and W ~ N(0, sigma2)."""
    return build_problem([[1.0]], [[1.0]], [[sigma2]])


def inherent_uncertainty(problem: LinearGaussianProblem) -> float:
    """N(X|Y) = det(posterior_cov)^(1/d)."""
    return problem.posterior_cov.det_root()


def random_spd(rng: np.random.Generator, d: int, cond: float = 10.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues log-uniform in [1/sqrt(cond), sqrt(cond)]."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    w = np.exp(rng.uniform(-0.5, 0.5, size=d) * math.log(cond))
    a = (q * w) @ q.T
    return 0.5 * (a + a.T)


def random_problem(rng: np.random.Generator, d: int) -> LinearGaussianProblem:
    """A random well-posed but non-invertible problem: fewer or noisy observations."""
    n_obs = max(1, d - 1) if d > 1 else 1
    sigma_x = random_spd(rng, d)
    H = rng.standard_normal((n_obs, d))
    sigma_w = 0.5 * random_spd(rng, n_obs, cond=4.0)
    return build_problem(sigma_x, H, sigma_w)


# --------------------------------------------------------------------------
# numerical solution of the constrained Gaussian UP problem


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 100_000
    max_outer: int = 60
    max_inner: int = 200
    rho0: float = 10.0
    rho_max: float = 1e10
    obj_rtol: float = 1e-10
    feas_tol: float = 1e-8
    grad_tol: float = 1e-13


@dataclass(frozen=True)
class UpSolution:
    U: float
    sigma_hat: np.ndarray
    constraint_activity: float
    iterations: int
    converged: bool
    multiplier: float
    logdet_sigma_hat: float


class _Problem:
    """Objective and constraint over the log-Cholesky parameters of Sigma_hat.

    With ``excess = ln det(I + Sq^-1 Sh)`` the error entropy power is
    ``U = det(Sq)^(1/d) * exp(excess / d)``. The search minimises
    ``ln(excess)``, a monotone transform of U that stays well scaled even when
    the optimum sits many orders of magnitude below ``Sq``. The constraint is
    ``ln det((Sh + Sq)/2) - (ln det Sh + ln det Sq)/2 - P <= 0``.
    """

    def __init__(self, post: SpdMatrix, P: float):
        self.sq = post.entries
        self.chol_sq = np.linalg.cholesky(post.entries)
        self.logdet_sq = post.logdet
        self.d = post.dim
        self.P = P
        self.rows, self.cols = np.tril_indices(self.d)
        self.is_diag = self.rows == self.cols

    def unpack(self, theta: np.ndarray) -> np.ndarray:
        """``L = U diag(exp(t))`` with U unit lower-triangular; scaling Sh only shifts t."""
        scale = np.exp(theta[self.is_diag])
        U = np.eye(self.d)
        off = ~self.is_diag
        U[self.rows[off], self.cols[off]] = theta[off]
        return U * scale

    def pack(self, L: np.ndarray) -> np.ndarray:
        diag = np.diag(L)
        theta = L[self.rows, self.cols] / diag[self.cols]
        theta[self.is_diag] = np.log(diag)
        return theta

    def logdet_hat(self, theta: np.ndarray) -> float:
        return 2.0 * float(np.sum(theta[self.is_diag]))

    def excess(self, theta: np.ndarray) -> float:
        m = solve_triangular(self.chol_sq, self.unpack(theta), lower=True)
        w = np.maximum(np.linalg.eigvalsh(m @ m.T), 0.0)
        return float(np.sum(np.log1p(w)))

    def constraint(self, theta: np.ndarray, excess: float) -> float:
        return (excess - self.d * math.log(2.0)
                + 0.5 * (self.logdet_sq - self.logdet_hat(theta)) - self.P)

    def evaluate(self, theta: np.ndarray):
        L = self.unpack(theta)
        e = self.excess(theta)
        if not 0.0 < e < math.inf:
            raise FloatingPointError("Sigma_hat left the representable range")
        c = cho_factor(L @ L.T + self.sq, lower=True)
        # d/dL ln det(L L^T + Sq) = 2 (L L^T + Sq)^-1 L, chained through exp on the diagonal
        dL = 2.0 * cho_solve(c, L)
        d_excess = np.empty_like(theta)
        off = ~self.is_diag
        # off-diagonal unit entries act through L_ij = U_ij exp(t_j); t_j scales column j
        d_excess[off] = dL[self.rows[off], self.cols[off]] * np.exp(theta[self.is_diag])[self.cols[off]]
        d_excess[self.is_diag] = np.sum(dL * L, axis=0)
        return math.log(e), self.constraint(theta, e), d_excess / e, d_excess - self.is_diag


def _merit(prob: _Problem, mu: float, rho: float):
    def fun(theta):
        f, g, gf, gg = prob.evaluate(theta)
        shifted = max(0.0, g + mu / rho)
        val = f + 0.5 * rho * shifted * shifted - mu * mu / (2.0 * rho)
        return val, gf + rho * shifted * gg

    return fun


def _fd_hessian(grad, theta: np.ndarray) -> np.ndarray:
    n = theta.size
    H = np.empty((n, n))
    for i in range(n):
        h = 1e-6 * max(1.0, abs(theta[i]))
        e = np.zeros(n)
        e[i] = h
        H[:, i] = (grad(theta + e) - grad(theta - e)) / (2.0 * h)
    return 0.5 * (H + H.T)


# Longest Newton step in parameter (log-scale) units; the merit is nearly
# linear in the diagonal log-scales while the constraint is slack.
_MAX_STEP = 4.0
_STATIONARY_TOL = 1e-5


def _newton(fun, theta: np.ndarray, max_iters: int, grad_tol: float):
    """Damped Newton with backtracking; negative curvature is mirrored to keep descent.

    Returns the final point, the iteration count and the final gradient.
    """
    grad = lambda t: fun(t)[1]  # noqa: E731
    iters = 0
    val, g = fun(theta)
    while iters < max_iters:
        if np.max(np.abs(g)) < grad_tol:
            break
        w, V = np.linalg.eigh(_fd_hessian(grad, theta))
        w = np.maximum(np.abs(w), 1e-8 * max(np.max(np.abs(w)), 1.0))
        step = -V @ ((V.T @ g) / w)
        longest = np.max(np.abs(step))
        if longest > _MAX_STEP:
            step *= _MAX_STEP / longest
        slope = float(g @ step)
        if slope >= 0:
            step, slope = -g, -float(g @ g)
        t = 1.0
        accepted = False
        for _ in range(60):
            cand = theta + t * step
            try:
                cval, cg = fun(cand)
            except (np.linalg.LinAlgError, FloatingPointError):
                cval = math.inf
            if math.isfinite(cval) and cval <= val + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        iters += 1
        if not accepted:
            break
        moved = np.max(np.abs(cand - theta))
        theta, val, g = cand, cval, cg
        if moved < 1e-15 * max(1.0, np.max(np.abs(theta))):
            break
    return theta, iters, g


def solve_up_gaussian(problem, P: float, opts: Optional[SolverOptions] = None) -> UpSolution:
    """Minimise ``det(Sh + Sq)^(1/d)`` over PSD ``Sh`` subject to the Rényi-1/2
    divergence between N(0, Sq) and N(0, Sh) being at most ``P``.

    ``problem`` is a :class:`LinearGaussianProblem` or directly the posterior
    covariance ``Sq``. The search runs an augmented Lagrangian over the
    log-Cholesky factor of ``Sh`` starting from ``Sh = Sq``.

    The divergence vanishes only for identical distributions, so at ``P = 0``
    the feasible set is the single point ``Sh = Sq`` and is returned directly.
    """
    opts = opts or SolverOptions()
    if P < 0 or math.isnan(P):
        raise DomainError(f"perception budget must be nonnegative, got {P}")
    post = problem.posterior_cov if isinstance(problem, LinearGaussianProblem) else _spd(problem)
    prob = _Problem(post, P)
    theta = prob.pack(np.linalg.cholesky(post.entries))
    if P == 0:
        return UpSolution(math.exp(post.logdet / prob.d + math.log(2.0)), post.entries.copy(),
                          0.0, 0, True, math.inf, post.logdet)

    mu, rho = 0.0, opts.rho0
    total = 0
    converged = False
    f_prev, viol_prev = math.inf, math.inf
    for _ in range(opts.max_outer):
        budget = min(opts.max_inner, opts.max_iters - total)
        theta, its, merit_grad = _newton(_merit(prob, mu, rho), theta, budget, opts.grad_tol)
        total += its
        f, g, _, _ = prob.evaluate(theta)
        viol = abs(max(g, -mu / rho))
        mu = max(0.0, mu + rho * g)
        rel_change = abs(f - f_prev) / max(abs(f), 1.0)
        stationary = np.max(np.abs(merit_grad)) < _STATIONARY_TOL
        if viol < opts.feas_tol and rel_change < opts.obj_rtol and stationary:
            converged = True
            break
        if viol >= opts.feas_tol and viol > 0.25 * viol_prev:
            rho = min(rho * 10.0, opts.rho_max)
        f_prev, viol_prev = f, viol
        if total >= opts.max_iters:
            break
    if not converged:
        log.warning("UP solver stopped without convergence at P=%g (violation %.2e)", P, viol)
    e = prob.excess(theta)
    L = prob.unpack(theta)
    # everything below is evaluated in log-space, so it stays meaningful as Sh -> 0
    return UpSolution(
        U=math.exp((post.logdet + e) / prob.d),
        sigma_hat=L @ L.T,
        constraint_activity=abs(prob.constraint(theta, e)),
        iterations=total,
        converged=converged,
        multiplier=mu * prob.d,
        logdet_sigma_hat=prob.logdet_hat(theta),
    )


def proportionality_error(sigma_hat: np.ndarray, post: SpdMatrix, gamma: float) -> float:
    """``||Sh - gamma Sq||_F / ||gamma Sq||_F``."""
    target = gamma * post.entries
    return float(np.linalg.norm(sigma_hat - target) / np.linalg.norm(target))


def commutator_error(sigma_hat: np.ndarray, post: SpdMatrix) -> float:
    """``||Sh Sq - Sq Sh||_F / (||Sh|| ||Sq||)``; zero iff the two share eigenvectors."""
    sq = post.entries
    num = np.linalg.norm(sigma_hat @ sq - sq @ sigma_hat)
    return float(num / (np.linalg.norm(sigma_hat) * np.linalg.norm(sq)))


@dataclass(frozen=True)
class SweepRow:
    d: int
    seed: int
    P: float
    U_numeric: float
    U_analytic: float
    inherent: float
    constraint_activity: float
    iterations: int
    converged: bool

    @property
    def rel_error(self) -> float:
        return abs(self.U_numeric - self.U_analytic) / self.U_analytic


def sweep(problem: LinearGaussianProblem, grid: Sequence[float], seed: int = 0,
          opts: Optional[SolverOptions] = None) -> list[SweepRow]:
    n_xy = inherent_uncertainty(problem)
    rows = []
    for P in grid:
        sol = solve_up_gaussian(problem, P, opts)
        rows.append(SweepRow(problem.d, seed, float(P), sol.U, bounds.eta(P, problem.d) * n_xy,
                             n_xy, sol.constraint_activity, sol.iterations, sol.converged))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "seed", "P", "U_numeric", "U_analytic", "U_over_inherent", "rel_error",
                "constraint_activity", "iterations", "converged"])
    for r in rows:
        w.writerow([r.d, r.seed, repr(r.P), repr(r.U_numeric), repr(r.U_analytic),
                    f"{r.U_numeric / r.inherent:.6f}", f"{r.rel_error:.3e}",
                    f"{r.constraint_activity:.3e}", r.iterations, int(r.converged)])
    return buf.getvalue()


# --------------------------------------------------------------------------
# Monte Carlo of the estimator family X_hat = E[X|Y] + Z


@dataclass(frozen=True)
class EstimatorFamilySpec:
    sigma_z: SpdMatrix
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sigma_z", _spd(self.sigma_z))
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class FamilyRun:
    errors: np.ndarray  # n x d samples of X_hat - X
    per_y_divergence: float
    mse_per_dim: float


def _cholesky(cov: SpdMatrix) -> np.ndarray:
    return np.linalg.cholesky(cov.entries)


def family_divergence(problem: LinearGaussianProblem, sigma_z: SpdMatrix, kind: str = "renyi-half") -> float:
    """Conditional divergence between X|Y and X_hat|Y; both share the mean E[X|Y]."""
    p = GaussianModel.centered(problem.posterior_cov)
    q = GaussianModel.centered(sigma_z)
    if kind == "renyi-half":
        return gaussian_renyi_half(p, q)
    if kind == "skl":
        return gaussian_skl(p, q)
    raise DomainError(f"unknown divergence kind {kind!r}")


def family_error_entropy_power(problem: LinearGaussianProblem, sigma_z: SpdMatrix) -> float:
    """Closed-form N(X_hat - X | Y) = det(Sq + Sz)^(1/d)."""
    return (problem.posterior_cov + _spd(sigma_z)).det_root()


def simulate_family(problem: LinearGaussianProblem, spec: EstimatorFamilySpec, n: int,
                    kind: str = "renyi-half") -> FamilyRun:
    """Draw (X, Y) jointly and return the errors of ``E[X|Y] + Z``.

    Deterministic for a fixed ``spec.seed`` (PCG64 via ``numpy.random.default_rng``).
    """
    if n < 100:
        raise TooFewSamples(f"need n >= 100 draws, got {n}")
    if spec.sigma_z.dim != problem.d:
        raise DimensionMismatch(f"sigma_z is {spec.sigma_z.dim}-dimensional, problem is {problem.d}")
    rng = np.random.default_rng(spec.seed)
    d, m = problem.d, problem.sigma_w.dim
    x = rng.standard_normal((n, d)) @ _cholesky(problem.sigma_x).T
    w = rng.standard_normal((n, m)) @ _cholesky(problem.sigma_w).T
    z = rng.standard_normal((n, d)) @ _cholesky(spec.sigma_z).T
    y = x @ problem.H.T + w
    xhat = y @ problem.gain.T + z
    err = xhat - x
    mse = float(np.mean(np.einsum("ij,ij->i", err, err))) / d
    return FamilyRun(err, family_divergence(problem, spec.sigma_z, kind), mse)


def example1_oracle(P: float, sigma2: float, grid: int = 300_000) -> float:
    """Brute-force scalar-denoising UP value.

    Scans ``sigma_z`` over ``k * 3 sigma_q / grid`` (k = 1..grid) plus
    ``sigma_q`` itself and keeps the smallest ``sigma_q^2 + sigma_z^2`` whose
    symmetric-KL divergence is <= P.
    """
    if grid < 1000:
        raise DomainError("grid must have at least 1000 points")
    if P < 0 or sigma2 <= 0:
        raise DomainError("need P >= 0 and sigma2 > 0")
    var_q = sigma2 / (1.0 + sigma2)
    sq = math.sqrt(var_q)
    # sigma_z = sigma_q (zero divergence) is always feasible, grid or not
    sz = np.append(sq * (3.0 * np.arange(1, grid + 1) / grid), sq)
    feasible = bounds.example1_divergence(sz, sq) <= P + 1e-12
    if not np.any(feasible):
        raise DomainError("no feasible grid point; refine the grid")
    objective = var_q + sz * sz
    return float(np.min(objective[feasible]))
