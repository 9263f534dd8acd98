import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from upplane.errors import (
    DimensionMismatch,
    DomainError,
    EntropyOverflow,
    NonFinite,
    NotPositiveSemidefinite,
    NotSymmetric,
    TooFewSamples,
)
from upplane.numstats import (
    LOG_2PI_E,
    GaussianModel,
    SpdMatrix,
    as_samples,
    digamma,
    entropy_power,
    eps_floor,
    gaussian_entropy,
    gaussian_kl,
    gaussian_renyi_half,
    gaussian_skl,
    log_unit_ball_volume,
    sample_covariance,
)

from conftest import random_spd


def _renyi_half_by_quadrature(m1, s1, m2, s2):
    """-2 ln of the Bhattacharyya integral, evaluated numerically in 1-D."""
    f = lambda x: math.sqrt(stats.norm.pdf(x, m1, s1) * stats.norm.pdf(x, m2, s2))  # noqa: E731
    bc, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12)
    return -2.0 * math.log(bc)


class TestSamples:
    def test_vector_becomes_column(self):
        assert as_samples([1.0, 2.0, 3.0]).shape == (3, 1)

    def test_rejects_nan(self):
        with pytest.raises(NonFinite):
            as_samples([[0.0, np.nan]])

    def test_rejects_3d(self):
        with pytest.raises(DimensionMismatch):
            as_samples(np.zeros((2, 2, 2)))


class TestSpdMatrix:
    def test_eigenvalues_descending_and_logdet(self, rng):
        a = random_spd(rng, 6)
        m = SpdMatrix.from_array(a)
        assert np.all(np.diff(m.eigenvalues) <= 0)
        _, ref = np.linalg.slogdet(a)
        assert m.logdet == pytest.approx(ref, rel=1e-8)

    def test_logdet_survives_d81(self):
        # det(0.001 I_81) = 1e-243 is still representable but 1e-4 I_81 is not
        m = SpdMatrix.identity(81, 1e-4)
        assert m.logdet == pytest.approx(81 * math.log(1e-4), rel=1e-12)
        assert m.det_root() == pytest.approx(1e-4, rel=1e-12)

    def test_rejects_asymmetric(self):
        with pytest.raises(NotSymmetric):
            SpdMatrix.from_array([[1.0, 0.5], [0.0, 1.0]])

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(NotPositiveSemidefinite):
            SpdMatrix.from_array([[1.0, 0.0], [0.0, -0.1]])

    def test_tiny_negative_eigenvalue_is_clamped(self):
        m = SpdMatrix.from_array([[1.0, 0.0], [0.0, -1e-14]])
        assert m.eigenvalues[-1] == eps_floor(1.0)

    def test_floor_scales_with_lambda_max(self):
        assert eps_floor(0.5) == 1e-12
        assert eps_floor(1e6) == pytest.approx(1e-6)

    def test_solve_and_inverse(self, rng):
        a = random_spd(rng, 4)
        m = SpdMatrix.from_array(a)
        b = rng.standard_normal(4)
        assert np.allclose(a @ m.solve(b), b)
        assert np.allclose(m.inverse() @ a, np.eye(4), atol=1e-12)
        L = m.sqrt_factor()
        assert np.allclose(L @ L.T, a)

    def test_non_square(self):
        with pytest.raises(DimensionMismatch):
            SpdMatrix.from_array(np.zeros((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 8))
    def test_entropy_power_of_gaussian_entropy_is_det_root(self, seed, d):
        a = random_spd(np.random.default_rng(seed), d, cond=100.0)
        m = SpdMatrix.from_array(a)
        expected = math.exp(np.linalg.slogdet(a)[1] / d)
        assert entropy_power(gaussian_entropy(m), d) == pytest.approx(expected, rel=1e-10)


class TestSampleCovariance:
    def test_two_points(self):
        c = sample_covariance([[0.0, 0.0], [2.0, 0.0]])
        assert c.entries[0, 0] == pytest.approx(2.0)
        assert c.eigenvalues[-1] == eps_floor(2.0)

    def test_matches_numpy(self, rng):
        x = rng.standard_normal((50, 3))
        assert np.allclose(sample_covariance(x).entries, np.cov(x, rowvar=False))

    def test_identical_samples_clamp_to_floor(self):
        c = sample_covariance(np.ones((5, 3)))
        assert np.allclose(c.entries, 1e-12 * np.eye(3))

    def test_law_of_large_numbers(self):
        x = np.random.default_rng(7).standard_normal((10_000, 2))
        w = sample_covariance(x).eigenvalues
        assert np.all(np.abs(w - 1.0) < 0.1)

    def test_ridge(self):
        c = sample_covariance([[0.0], [2.0]], ridge=0.5)
        assert c.entries[0, 0] == pytest.approx(2.5)

    def test_errors(self):
        with pytest.raises(TooFewSamples):
            sample_covariance([[1.0, 2.0]])
        with pytest.raises(NonFinite):
            sample_covariance([[1.0], [np.inf]])
        with pytest.raises(DomainError):
            sample_covariance([[1.0], [2.0]], ridge=-1.0)


class TestEntropy:
    # 0.5*ln(2*pi*e) evaluated with mpmath at 30 digits
    H_STD_NORMAL = float(mpmath.mpf("0.5") * mpmath.log(2 * mpmath.pi * mpmath.e))

    def test_standard_normal(self):
        assert gaussian_entropy(SpdMatrix.identity(1)) == pytest.approx(1.4189385332046727, abs=1e-12)
        assert gaussian_entropy(SpdMatrix.identity(1)) == pytest.approx(self.H_STD_NORMAL, abs=1e-14)

    def test_identity_2d(self):
        assert gaussian_entropy(SpdMatrix.identity(2)) == pytest.approx(2.8378770664093453, abs=1e-12)

    def test_scaling_adds_log2(self):
        h1 = gaussian_entropy(SpdMatrix.identity(1))
        h4 = gaussian_entropy(SpdMatrix.identity(1, 4.0))
        assert h4 - h1 == pytest.approx(math.log(2.0), abs=1e-14)

    def test_matches_scipy(self, rng):
        a = random_spd(rng, 5)
        assert gaussian_entropy(SpdMatrix.from_array(a)) == pytest.approx(
            stats.multivariate_normal(cov=a).entropy(), rel=1e-12)

    def test_entropy_power_values(self):
        assert entropy_power(0.5 * LOG_2PI_E, 1) == pytest.approx(1.0, rel=1e-15)
        assert entropy_power(0.0, 1) == pytest.approx(0.05854983152431917, rel=1e-12)

    def test_entropy_power_overflow(self):
        with pytest.raises(EntropyOverflow):
            entropy_power(1e6, 1)

    def test_entropy_power_bad_dimension(self):
        with pytest.raises(DomainError):
            entropy_power(0.0, 0)

    @given(h1=st.floats(-50, 50), h2=st.floats(-50, 50), d=st.integers(1, 100))
    def test_entropy_power_increasing(self, h1, h2, d):
        if h1 < h2:
            assert entropy_power(h1, d) <= entropy_power(h2, d)


class TestGaussianDivergences:
    def test_identical_is_zero(self):
        p = GaussianModel.centered(np.eye(3))
        assert gaussian_renyi_half(p, p) == 0.0

    def test_mean_shift(self):
        p = GaussianModel(np.zeros(1), SpdMatrix.identity(1))
        q = GaussianModel(np.array([1.5]), SpdMatrix.identity(1))
        assert gaussian_renyi_half(p, q) == pytest.approx(1.5 ** 2 / 4, rel=1e-14)

    def test_scale(self):
        p = GaussianModel.centered([[1.0]])
        q = GaussianModel.centered([[4.0]])
        assert gaussian_renyi_half(p, q) == pytest.approx(0.22314355131420976, rel=1e-13)

    @pytest.mark.parametrize("m2,s2", [(0.0, 2.0), (1.0, 1.0), (0.7, 0.4), (-2.0, 3.0)])
    def test_matches_quadrature(self, m2, s2):
        p = GaussianModel([0.0], SpdMatrix.identity(1))
        q = GaussianModel([m2], SpdMatrix.identity(1, s2 * s2))
        assert gaussian_renyi_half(p, q) == pytest.approx(_renyi_half_by_quadrature(0, 1, m2, s2), rel=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            gaussian_renyi_half(GaussianModel.centered(np.eye(2)), GaussianModel.centered(np.eye(3)))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 6))
    def test_symmetric_and_positive(self, seed, d):
        r = np.random.default_rng(seed)
        p = GaussianModel(r.standard_normal(d), SpdMatrix.from_array(random_spd(r, d)))
        q = GaussianModel(r.standard_normal(d), SpdMatrix.from_array(random_spd(r, d)))
        a, b = gaussian_renyi_half(p, q), gaussian_renyi_half(q, p)
        assert a == pytest.approx(b, rel=1e-10, abs=1e-13)
        assert a > 0

    def test_kl_matches_closed_form_1d(self):
        p = GaussianModel.centered([[1.0]])
        q = GaussianModel([0.5], SpdMatrix.identity(1, 4.0))
        expected = math.log(2.0) + (1.0 + 0.25) / 8.0 - 0.5
        assert gaussian_kl(p, q) == pytest.approx(expected, rel=1e-13)

    def test_skl_is_sum(self):
        p = GaussianModel.centered([[1.0]])
        q = GaussianModel.centered([[3.0]])
        assert gaussian_skl(p, q) == pytest.approx(gaussian_kl(p, q) + gaussian_kl(q, p))


class TestSpecialFunctions:
    @pytest.mark.parametrize("x,expected", [
        (1.0, -0.5772156649015329),
        (2.0, 0.4227843350984671),
        (0.5, -1.9635100260214235),
    ])
    def test_reference_values(self, x, expected):
        assert digamma(x) == pytest.approx(expected, abs=1e-10)

    @settings(max_examples=200)
    @given(x=st.floats(1e-3, 1e6))
    def test_matches_scipy(self, x):
        assert digamma(x) == pytest.approx(float(special.digamma(x)), abs=1e-10, rel=1e-12)

    def test_matches_mpmath_at_integers(self):
        for n in (3, 10, 10_000):
            assert digamma(n) == pytest.approx(float(mpmath.digamma(n)), abs=1e-12)

    @pytest.mark.parametrize("x", [0.0, -1.0, math.inf, math.nan])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            digamma(x)

    def test_unit_ball(self):
        assert math.exp(log_unit_ball_volume(1)) == pytest.approx(2.0)
        assert math.exp(log_unit_ball_volume(2)) == pytest.approx(math.pi)
        assert math.exp(log_unit_ball_volume(3)) == pytest.approx(4.0 * math.pi / 3.0)
