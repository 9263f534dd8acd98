import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from upplane import bounds, gaussianlab
from upplane.errors import DimensionMismatch, DomainError, SingularInnovation, TooFewSamples
from upplane.estimators import sample_entropy_power
from upplane.gaussianlab import (
    EstimatorFamilySpec,
    SolverOptions,
    build_problem,
    commutator_error,
    example1_oracle,
    family_divergence,
    family_error_entropy_power,
    inherent_uncertainty,
    proportionality_error,
    random_problem,
    scalar_denoising,
    simulate_family,
    solve_up_gaussian,
)
from upplane.numstats import SpdMatrix

from conftest import random_spd


def joint_conditional_cov(sx, H, sw):
    """Posterior covariance as the Schur complement of the joint (X, Y) covariance."""
    sxy = sx @ H.T
    syy = H @ sx @ H.T + sw
    return sx - sxy @ np.linalg.inv(syy) @ sxy.T


def slsqp_up(sq, P):
    """Independent numeric route: SLSQP over the raw Cholesky entries of Sigma_hat."""
    d = sq.shape[0]
    rows, cols = np.tril_indices(d)
    logdet_sq = np.linalg.slogdet(sq)[1]

    def unpack(v):
        L = np.zeros((d, d))
        L[rows, cols] = v
        return L @ L.T

    def objective(v):
        return np.linalg.slogdet(unpack(v) + sq)[1]

    def slack(v):
        sh = unpack(v)
        div = np.linalg.slogdet(0.5 * (sh + sq))[1] - 0.5 * (np.linalg.slogdet(sh)[1] + logdet_sq)
        return P - div

    start = np.linalg.cholesky(0.5 * sq)[rows, cols]
    res = minimize(objective, start, method="SLSQP", constraints=[{"type": "ineq", "fun": slack}],
                   options={"ftol": 1e-14, "maxiter": 1000})
    return math.exp(res.fun / d)


class TestProblem:
    def test_scalar(self):
        p = scalar_denoising(1.0)
        assert p.posterior_cov.entries[0, 0] == pytest.approx(0.5)
        assert inherent_uncertainty(p) == pytest.approx(0.5)

    def test_partial_observation(self):
        p = build_problem(np.eye(2), [[1.0, 0.0]], [[1.0]])
        assert np.allclose(p.posterior_cov.entries, np.diag([0.5, 1.0]))
        assert inherent_uncertainty(p) == pytest.approx(math.sqrt(0.5))

    def test_noiseless_identity(self):
        p = build_problem(np.eye(3), np.eye(3), 1e-14 * np.eye(3))
        # the posterior is clamped up to the eigenvalue floor 1e-12
        assert inherent_uncertainty(p) <= 1e-12 * (1 + 1e-9)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 6), m=st.integers(1, 6))
    def test_matches_joint_conditioning(self, seed, d, m):
        r = np.random.default_rng(seed)
        sx, sw = random_spd(r, d), random_spd(r, m)
        H = r.standard_normal((m, d))
        p = build_problem(sx, H, sw)
        ref = joint_conditional_cov(sx, H, sw)
        scale = np.max(np.abs(sx))
        assert np.max(np.abs(p.posterior_cov.entries - ref)) <= 1e-10 * scale
        assert np.max(np.abs(p.posterior_cov.entries - p.standard_posterior())) <= 1e-10 * scale
        # observing never increases uncertainty
        assert p.posterior_cov.eigenvalues[0] <= np.linalg.eigvalsh(sx)[-1] * (1 + 1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            build_problem(np.eye(2), np.ones((1, 3)), [[1.0]])

    def test_singular_innovation(self):
        with pytest.raises(SingularInnovation):
            build_problem(np.eye(2), np.zeros((1, 2)), [[0.0]])


class TestSolver:
    def test_zero_perception(self, rng):
        p = random_problem(rng, 3)
        sol = solve_up_gaussian(p, 0.0)
        n = inherent_uncertainty(p)
        assert sol.U / n == pytest.approx(2.0, rel=1e-12)
        assert np.allclose(sol.sigma_hat, p.posterior_cov.entries)

    @pytest.mark.parametrize("d", [1, 2, 4])
    @pytest.mark.parametrize("P", [0.01, 0.3, 1.0, 4.0])
    def test_matches_closed_form(self, d, P):
        p = random_problem(np.random.default_rng(100 + d), d)
        sol = solve_up_gaussian(p, P)
        n = inherent_uncertainty(p)
        assert sol.converged
        assert sol.U == pytest.approx(bounds.eta(P, d) * n, rel=1e-6)
        assert proportionality_error(sol.sigma_hat, p.posterior_cov, bounds.gamma_opt(P, d)) <= 1e-6
        assert commutator_error(sol.sigma_hat, p.posterior_cov) <= 1e-6
        assert sol.constraint_activity <= 1e-6
        # the multiplier is positive on an active constraint
        assert sol.multiplier > 0

    @pytest.mark.parametrize("d", [1, 2, 4, 8])
    def test_unconstrained_limit(self, d):
        p = random_problem(np.random.default_rng(d), d)
        sol = solve_up_gaussian(p, 50.0 * d)
        assert sol.U == pytest.approx(inherent_uncertainty(p), rel=1e-3)
        assert sol.converged and sol.constraint_activity <= 1e-6

    def test_against_slsqp(self):
        # two independent numeric routes agree with each other and with the closed form
        p = random_problem(np.random.default_rng(3), 2)
        for P in (0.2, 1.0):
            ours = solve_up_gaussian(p, P).U
            theirs = slsqp_up(p.posterior_cov.entries, P)
            assert ours == pytest.approx(theirs, rel=1e-5)
            assert ours <= theirs * (1 + 1e-9)

    def test_monotone_in_P(self):
        p = random_problem(np.random.default_rng(9), 3)
        us = [solve_up_gaussian(p, P).U for P in (0.0, 0.05, 0.2, 1.0, 3.0, 10.0)]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(us, us[1:]))

    def test_accepts_bare_covariance(self, rng):
        a = random_spd(rng, 2)
        sol = solve_up_gaussian(a, 0.5)
        assert sol.U == pytest.approx(bounds.eta(0.5, 2) * math.exp(np.linalg.slogdet(a)[1] / 2), rel=1e-6)

    def test_negative_P(self, rng):
        with pytest.raises(DomainError):
            solve_up_gaussian(random_problem(rng, 1), -0.5)

    def test_iteration_cap_reports_nonconvergence(self, rng, caplog):
        sol = solve_up_gaussian(random_problem(rng, 3), 1.0, SolverOptions(max_iters=1))
        assert not sol.converged
        assert "without convergence" in caplog.text

    def test_sweep_csv(self):
        p = random_problem(np.random.default_rng(0), 2)
        rows = gaussianlab.sweep(p, [0.0, 1.0], seed=0)
        text = gaussianlab.sweep_csv(rows)
        lines = text.splitlines()
        assert lines[0].startswith("d,seed,P,U_numeric,U_analytic")
        assert lines[1].split(",")[5] == "2.000000"
        assert all(r.rel_error < 1e-6 for r in rows)


class TestFamily:
    def test_scalar_matched_noise(self):
        p = scalar_denoising(1.0)
        run = simulate_family(p, EstimatorFamilySpec([[0.5]], seed=1), 100_000, kind="skl")
        assert run.per_y_divergence == 0.0
        assert run.mse_per_dim == pytest.approx(1.0, rel=0.03)

    def test_posterior_mean(self):
        p = scalar_denoising(1.0)
        run = simulate_family(p, EstimatorFamilySpec([[0.0]], seed=2), 100_000)
        assert run.mse_per_dim == pytest.approx(0.5, rel=0.03)

    def test_distortion_bound_on_errors(self):
        p = random_problem(np.random.default_rng(4), 2)
        run = simulate_family(p, EstimatorFamilySpec(0.3 * np.eye(2), seed=3), 10_000)
        assert run.mse_per_dim >= sample_entropy_power(run.errors) * 0.95

    def test_error_entropy_power_closed_form(self):
        p = scalar_denoising(1.0)
        assert family_error_entropy_power(p, SpdMatrix.from_array([[0.5]])) == pytest.approx(1.0)

    def test_skl_matches_example1_formula(self):
        # Jeffreys symmetric KL for variances a, b is (a^2 + b^2) / (2ab) - 1
        p = scalar_denoising(1.0)
        vq, vz = 0.5, 0.2
        expected = (vq * vq + vz * vz) / (2 * vq * vz) - 1.0
        assert family_divergence(p, SpdMatrix.from_array([[vz]]), "skl") == pytest.approx(expected, rel=1e-12)

    def test_deterministic(self):
        p = random_problem(np.random.default_rng(5), 2)
        spec = EstimatorFamilySpec(0.1 * np.eye(2), seed=77)
        a, b = simulate_family(p, spec, 500), simulate_family(p, spec, 500)
        assert np.array_equal(a.errors, b.errors)

    def test_errors(self):
        p = scalar_denoising(1.0)
        with pytest.raises(TooFewSamples):
            simulate_family(p, EstimatorFamilySpec([[0.1]]), 50)
        with pytest.raises(DimensionMismatch):
            simulate_family(p, EstimatorFamilySpec(np.eye(2)), 500)
        with pytest.raises(DomainError):
            family_divergence(p, SpdMatrix.from_array([[0.1]]), "tv")
        with pytest.raises(DomainError):
            EstimatorFamilySpec([[0.1]], seed=-1)


class TestExample1Oracle:
    @pytest.mark.parametrize("sigma2", [0.25, 1.0, 4.0])
    @pytest.mark.parametrize("P", [0.0, 0.1, 1.0, 5.0])
    def test_matches_closed_form(self, P, sigma2):
        assert example1_oracle(P, sigma2) == pytest.approx(bounds.example1_up(P, sigma2)[0], abs=1e-4)

    def test_zero(self):
        assert example1_oracle(0.0, 1.0) == pytest.approx(1.0, abs=1e-4)

    def test_monotone(self):
        us = [example1_oracle(P, 1.0, 20_000) for P in (0.0, 0.1, 0.5, 2.0)]
        assert all(b <= a for a, b in zip(us, us[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            example1_oracle(1.0, 1.0, grid=10)
        with pytest.raises(DomainError):
            example1_oracle(-1.0, 1.0)
