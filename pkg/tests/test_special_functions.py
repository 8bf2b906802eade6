"""Tests for elliptic integrals, Phi and the decay integral J."""

import math

import numpy as np
import pytest
from scipy.special import ellipe, ellipk, ellipkm1

from src.app.core.special_functions import (
    Modulus,
    complete_elliptic_E,
    complete_elliptic_K,
    complete_elliptic_KE,
    delta_consistency,
    delta_constant,
    e_minus_one_bound,
    graded_quadrature,
    j_asymptotic,
    j_integral,
    j_l,
    j_l_direct,
    k_comparison,
    phi_inverse,
    psi_derivative,
    psi_ratio,
)
from src.app.shared.errors import DomainError


class TestModulus:
    """Test the validated modulus type."""

    def test_accepts_unit_interval(self):
        assert Modulus(0.0) == 0.0
        assert Modulus(1.0) == 1.0
        assert isinstance(Modulus(0.3) * 2.0, float)

    @pytest.mark.parametrize("bad", [-0.1, 1.0000001, float("nan")])
    def test_rejects_outside(self, bad):
        with pytest.raises(DomainError):
            Modulus(bad)

    def test_from_parameter(self):
        assert Modulus.from_parameter(0.25) == pytest.approx(0.5)

    def test_complement(self):
        k = Modulus(0.6)
        assert k.complement == pytest.approx(0.8, rel=1e-15)


class TestEllipticIntegrals:
    """Test K and E against scipy (which uses the parameter m = k^2)."""

    def setup_method(self):
        self.k = np.linspace(0.0, 0.9999, 101)

    def test_zero_modulus(self):
        assert complete_elliptic_K(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
        assert complete_elliptic_E(0.0) == pytest.approx(math.pi / 2, rel=1e-15)

    def test_matches_scipy(self):
        np.testing.assert_allclose(complete_elliptic_K(self.k), ellipk(self.k ** 2), rtol=1e-13)
        np.testing.assert_allclose(complete_elliptic_E(self.k), ellipe(self.k ** 2), rtol=1e-13)

    def test_near_unit_modulus_sweep(self):
        # a and b stall one ulp apart for many of these
        k = np.linspace(0.97, 0.999999, 20001)
        K, E = complete_elliptic_KE(k)
        # 1 - k^2 formed as (1 - k)(1 + k) keeps the reference accurate near k = 1
        np.testing.assert_allclose(K, ellipkm1((1.0 - k) * (1.0 + k)), rtol=1e-13)
        np.testing.assert_allclose(E, ellipe(k ** 2), rtol=1e-13)

    @pytest.mark.parametrize("k", [0.97029903, 0.97049903])
    def test_stalled_scalar(self, k):
        assert complete_elliptic_K(k) == pytest.approx(float(ellipkm1((1.0 - k) * (1.0 + k))), rel=1e-13)

    def test_single_pass_matches(self):
        K, E = complete_elliptic_KE(0.7)
        assert K == complete_elliptic_K(0.7)
        assert E == complete_elliptic_E(0.7)

    def test_scalar_in_scalar_out(self):
        assert isinstance(complete_elliptic_K(0.5), float)
        assert isinstance(complete_elliptic_E(np.array([0.5])), np.ndarray)

    def test_endpoint(self):
        assert complete_elliptic_E(1.0) == 1.0
        with pytest.raises(DomainError):
            complete_elliptic_K(1.0)

    def test_bounds_and_monotonicity(self):
        K, E = complete_elliptic_KE(self.k)
        assert np.all((E >= 1.0) & (E <= math.pi / 2 + 1e-15))
        assert np.all(K >= math.pi / 2 - 1e-15)
        assert np.all(np.diff(E) < 0.0)
        assert np.all(np.diff(K) > 0.0)
        assert np.all(math.pi / 2 - E <= math.pi * self.k ** 2 / 4 + 1e-15)

    def test_e_minus_one_bounds(self):
        E = complete_elliptic_E(self.k)
        assert np.all(E - 1.0 <= e_minus_one_bound(self.k) + 1e-15)
        assert np.all(k_comparison(self.k) >= -1e-15)

    @pytest.mark.parametrize("bad", [-0.5, 1.5])
    def test_rejects_bad_modulus(self, bad):
        with pytest.raises(DomainError):
            complete_elliptic_E(bad)


class TestPhi:
    """Test Psi(k) = k/E(k) and its inverse."""

    def test_endpoints(self):
        assert psi_ratio(0.0) == 0.0
        assert psi_ratio(1.0) == 1.0
        assert phi_inverse(0.0) == 0.0
        assert phi_inverse(1.0) == 1.0

    def test_scalar_returns_modulus(self):
        assert isinstance(phi_inverse(0.5), Modulus)

    def test_round_trip(self):
        k = np.linspace(0.0, 1.0, 201)
        np.testing.assert_allclose(phi_inverse(psi_ratio(k)), k, atol=1e-12)

    def test_inverse_round_trip(self):
        x = np.linspace(0.01, 0.99, 50)
        np.testing.assert_allclose(psi_ratio(phi_inverse(x)), x, atol=1e-13)

    def test_bracket(self):
        x = np.linspace(0.001, 1.0, 300)
        k = phi_inverse(x)
        assert np.all(k >= x)
        assert np.all(k <= np.minimum(1.0, math.pi * x / 2) * (1.0 + 1e-15))

    def test_slope_bounded(self):
        x = np.linspace(0.05, 0.95, 19)
        h = 1e-6
        slope = (phi_inverse(x + h) - phi_inverse(x - h)) / (2 * h)
        assert np.all(slope >= 0.0)
        assert np.all(slope <= math.pi / 2 + 1e-6)

    def test_derivative_matches_finite_difference(self):
        k, h = 0.6, 1e-6
        fd = (psi_ratio(k + h) - psi_ratio(k - h)) / (2 * h)
        assert psi_derivative(k) == pytest.approx(fd, rel=1e-7)

    @pytest.mark.parametrize("bad", [-0.01, 1.01])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            phi_inverse(bad)


class TestDecayIntegral:
    """Test J and its asymptotic form."""

    @pytest.mark.parametrize("x", [0.5, 0.2, 0.1, 0.05, 0.01])
    def test_asymptotic_error_bound(self, x):
        gap = abs(j_integral(x).value - j_asymptotic(x))
        assert gap <= math.pi ** 2 * x ** 2 / 8

    @pytest.mark.parametrize("x", [1.5, 1.0, 0.5, 0.1, 0.01])
    def test_log_bracket(self, x):
        value = j_integral(x).value
        assert max(0.0, math.log(1 / x)) - 1e-12 <= value
        assert value <= math.pi ** 2 / 4 * math.log(math.pi / (2 * x)) + 1e-12

    def test_vanishes_at_right_end(self):
        assert j_integral(math.pi / 2).value == pytest.approx(0.0, abs=1e-14)

    def test_decreasing(self):
        values = [j_integral(x).value for x in (0.05, 0.2, 0.6, 1.2)]
        assert values == sorted(values, reverse=True)

    def test_error_estimate_reported(self):
        result = j_integral(0.3)
        assert result.x == 0.3
        assert result.quadrature_error_estimate < 1e-10

    @pytest.mark.parametrize("bad", [0.0, -1.0, 1.6])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            j_integral(bad)

    def test_asymptote_value(self):
        assert j_asymptotic(1.0) == pytest.approx(math.log(4.0) - 1.0)
        with pytest.raises(DomainError):
            j_asymptotic(0.0)

    def test_integral_constant(self):
        assert delta_constant() == pytest.approx(2 * math.log(2) - 1, abs=1e-10)

    def test_consistency_limit(self):
        assert delta_consistency(1e-8) == pytest.approx(2 * math.log(2) - 1, abs=1e-6)

    @pytest.mark.parametrize("l,c", [(10.5, 3.0), (40.5, 25.0), (7.0, 8.0)])
    def test_j_l_two_ways(self, l, c):
        assert j_l(l, c) == pytest.approx(j_l_direct(l, c), rel=1e-10)

    def test_j_l_domain(self):
        with pytest.raises(DomainError):
            j_l(2.0, 4.0)


class TestGradedQuadrature:
    """Test the graded composite rule on endpoint singularities."""

    def test_log_singularity(self):
        value, _ = graded_quadrature(lambda t: np.log(1.0 - t), 0.0, 1.0, toward_upper=True)
        assert value == pytest.approx(-1.0, abs=1e-12)

    def test_lower_end(self):
        value, _ = graded_quadrature(lambda t: np.sqrt(t), 0.0, 1.0, toward_upper=False)
        assert value == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_no_node_on_endpoint(self):
        seen = []

        def integrand(t):
            seen.append(np.max(t))
            return np.log(1.0 - t)

        value, err = graded_quadrature(integrand, 0.0, 1.0, toward_upper=True)
        assert math.isfinite(value) and math.isfinite(err)
        assert max(seen) < 1.0

    def test_empty_interval(self):
        assert graded_quadrature(np.exp, 1.0, 1.0) == (0.0, 0.0)
