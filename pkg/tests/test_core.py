import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from cklcopula.core import (BasisSet, DomainError, GaussianCopulaParams, UnitPoint,
                            UnnormalizedLogDensity, gaussian_copula_log_density,
                            gaussian_normalizing_function, register_basis, rho_to_theta,
                            std_normal_cdf, std_normal_quantile, theta_to_rho)

# reference quantiles: bisection on mpmath's erfc at 40 digits, evaluated at
# the exact binary value of each float p
REF_QUANTILES = {
    0.975: 1.9599639845400538556,
    0.01: -2.3263478740408410931,
    0.3: -0.52440051270804081597,
    0.9: 1.2815515655446005935,
    1e-10: -6.3613409024040561991,
    0.999999: 4.7534243088170877657,
}


def _mp_quantile(p):
    mp.mp.dps = 30
    lo, hi = mp.mpf(-40), mp.mpf(40)
    target = mp.mpf(float(p))
    for _ in range(120):
        mid = (lo + hi) / 2
        if mp.erfc(-mid / mp.sqrt(2)) / 2 < target:
            lo = mid
        else:
            hi = mid
    return float(lo)


def test_unit_point_rejects_outside():
    UnitPoint(0.0, 1.0)
    with pytest.raises(DomainError):
        UnitPoint(1.2, 0.5)
    with pytest.raises(DomainError):
        UnitPoint(0.5, -1e-9)


class TestQuantile:
    def test_median(self):
        assert std_normal_quantile(0.5) == 0.0

    @pytest.mark.parametrize("p, z", sorted(REF_QUANTILES.items()))
    def test_reference_values(self, p, z):
        assert std_normal_quantile(p) == pytest.approx(z, rel=1e-14, abs=1e-15)

    def test_reference_oracle_live(self):
        for p in (0.123, 0.5 + 1e-7, 0.987654):
            assert std_normal_quantile(p) == pytest.approx(_mp_quantile(p), rel=1e-13)

    @pytest.mark.parametrize("p", [0.01, 0.3, 0.9])
    def test_inverse_identity(self, p):
        assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-12

    def test_grid_inverse_and_monotone(self):
        p = np.linspace(0, 1, 1002)[1:-1]
        z = std_normal_quantile(p)
        assert np.max(np.abs(std_normal_cdf(z) - p)) <= 1e-12
        assert np.all(np.diff(z) > 0)

    def test_symmetry(self):
        p = np.linspace(0.001, 0.499, 200)
        np.testing.assert_allclose(std_normal_quantile(p), -std_normal_quantile(1 - p), atol=1e-12)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            std_normal_quantile(p)

    @given(st.floats(1e-300, 1.0, exclude_max=True))
    def test_hypothesis_cdf_roundtrip(self, p):
        assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-12


class TestThetaRho:
    def test_reference_value(self):
        assert round(rho_to_theta(0.7), 6) == 1.372549

    def test_inverse_reference_value(self):
        assert theta_to_rho(1.372549) == pytest.approx(0.7, abs=1e-6)

    def test_zero(self):
        assert rho_to_theta(0.0) == 0.0
        assert theta_to_rho(0.0) == 0.0

    @pytest.mark.parametrize("t", [-3.0, 0.5, 10.0])
    def test_roundtrip_theta(self, t):
        assert abs(rho_to_theta(theta_to_rho(t)) - t) <= 1e-12 * max(1.0, abs(t))

    def test_asymptote(self):
        assert theta_to_rho(1e12) > 0.999999
        assert theta_to_rho(-1e200) < -0.999999

    @pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
    def test_rho_domain(self, rho):
        with pytest.raises(DomainError):
            rho_to_theta(rho)

    @pytest.mark.parametrize("t", [math.inf, -math.inf, math.nan])
    def test_theta_domain(self, t):
        with pytest.raises(DomainError):
            theta_to_rho(t)

    @given(st.floats(-0.999, 0.999))
    def test_bijection_property(self, rho):
        assert abs(theta_to_rho(rho_to_theta(rho)) - rho) <= 1e-12

    @given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99))
    def test_monotone_odd(self, r1, r2):
        assert rho_to_theta(-r1) == -rho_to_theta(r1)
        if r1 < r2:
            assert rho_to_theta(r1) < rho_to_theta(r2)


class TestGaussianCopula:
    def test_independence(self):
        p = GaussianCopulaParams(0.0)
        rng = np.random.default_rng(0)
        x, y = rng.uniform(0.01, 0.99, (2, 50))
        np.testing.assert_allclose(gaussian_copula_log_density(p, x, y), 0.0, atol=1e-15)

    def test_center_value(self):
        # xi = eta = 0: only the 1/sqrt(1 - rho^2) factor remains
        assert gaussian_copula_log_density(GaussianCopulaParams(0.7), 0.5, 0.5) == pytest.approx(
            0.3366722766318828, abs=1e-14)

    def test_against_scipy_density(self):
        from scipy.stats import multivariate_normal, norm
        rho = -0.4
        p = GaussianCopulaParams(rho)
        rng = np.random.default_rng(1)
        x, y = rng.uniform(0.001, 0.999, (2, 30))
        xi, eta = norm.ppf(x), norm.ppf(y)
        ref = (multivariate_normal(cov=[[1, rho], [rho, 1]]).logpdf(np.column_stack([xi, eta]))
               - norm.logpdf(xi) - norm.logpdf(eta))
        np.testing.assert_allclose(gaussian_copula_log_density(p, x, y), ref, atol=1e-10)

    @pytest.mark.parametrize("rho", [-0.9, 0.0, 0.7])
    @pytest.mark.parametrize("x", [0.1, 0.3, 0.5, 0.9])
    def test_marginal_integrates_to_one(self, rho, x):
        p = GaussianCopulaParams(rho)
        val, _ = integrate.quad(lambda y: math.exp(gaussian_copula_log_density(p, x, y)),
                                0, 1, epsabs=1e-12, epsrel=1e-12, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("pt", [(0.0, 0.5), (0.5, 1.0), (1.0, 1.0)])
    def test_boundary_is_error(self, pt):
        with pytest.raises(DomainError):
            gaussian_copula_log_density(GaussianCopulaParams(0.5), *pt)

    def test_normalizing_center_value(self):
        assert gaussian_normalizing_function(GaussianCopulaParams(0.7), 0.5) == pytest.approx(
            0.1683361383159414, abs=1e-14)

    def test_normalizing_independence(self):
        p = GaussianCopulaParams(0.0)
        x = np.linspace(0.05, 0.95, 19)
        np.testing.assert_allclose(gaussian_normalizing_function(p, x), 0.0, atol=1e-14)

    @pytest.mark.parametrize("rho", [0.7, -0.95, 0.3])
    def test_reconstruction(self, rho):
        p = GaussianCopulaParams(rho)
        rng = np.random.default_rng(2)
        x, y = rng.uniform(1e-6, 1 - 1e-6, (2, 100))
        h = std_normal_quantile(x) * std_normal_quantile(y)
        recon = p.theta * h + gaussian_normalizing_function(p, x) + gaussian_normalizing_function(p, y)
        assert np.max(np.abs(recon - gaussian_copula_log_density(p, x, y))) <= 1e-10

    def test_normalizing_boundary(self):
        with pytest.raises(DomainError):
            gaussian_normalizing_function(GaussianCopulaParams(0.2), 0.0)


class TestBasis:
    def test_catalog_tags(self):
        b = BasisSet.from_tags(["gauss", "xy", "x2y"])
        assert b.k == 3 and b.tags == ["gauss", "xy", "x2y"]
        assert BasisSet.from_tags("xy,x2y").tags == ["xy", "x2y"]
        assert b.is_product

    def test_evaluate_shape_and_values(self):
        b = BasisSet.from_tags("xy,x2y")
        out = b.evaluate(np.array([0.2, 0.7]), np.array([0.3, 0.8]))
        np.testing.assert_allclose(out, [[0.06, 0.012], [0.56, 0.392]])

    def test_unknown_tag(self):
        with pytest.raises(KeyError, match="unknown basis tag"):
            BasisSet.from_tags("nope")

    def test_empty_basis(self):
        with pytest.raises(ValueError):
            BasisSet(())

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_basis_rejected(self):
        bf = register_basis("test-bad", lambda x, y: np.log(np.abs(x - 0.5)), overwrite=True)
        with pytest.raises(ValueError, match="not finite"):
            BasisSet((bf,))

    def test_register_duplicate(self):
        register_basis("test-dup", lambda x, y: x - y, overwrite=True)
        with pytest.raises(KeyError):
            register_basis("test-dup", lambda x, y: x - y)
        assert BasisSet.from_tags("test-dup").evaluate(0.75, 0.25)[0] == 0.5

    def test_unnormalized_log_density(self):
        b = BasisSet.from_tags("xy")
        q = UnnormalizedLogDensity(b, [2.0], additive_x=lambda x: x ** 2, additive_y=np.sin)
        assert q(0.5, 0.25) == pytest.approx(2 * 0.125 + 0.25 + math.sin(0.25))
        with pytest.raises(ValueError):
            UnnormalizedLogDensity(b, [1.0, 2.0])
        with pytest.raises(ValueError):
            UnnormalizedLogDensity(b, [math.nan])
