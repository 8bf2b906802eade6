"""Tests for the closed-form approximations and their bounds."""

import math

import pytest

from src.app.core import spectral_approx
from src.app.core.prolate_oracle import prolate_solve
from src.app.core.spectral_approx import (
    approx_bundle,
    c_n_kappa,
    crude_kappa_lower_bound,
    delta_kappa,
    error_budget,
    envelope_log_factor,
    exponential_decay_margin,
    improved_error_bounds,
    j_l_comparison,
    kappa_condition,
    kappa_proxy,
    kappa_proxy_gap,
    lambda_hat,
    lambda_tilde,
    lambda_widom,
    loglambda_from_mu_abs,
    mu_abs_from_loglambda,
    observed_kappa_delta,
    psi1_sq_bracket,
    psi1_sq_estimate,
    q_tilde,
    small_c_psi1_deviation,
    sqrt_q_tilde,
    tail_integral_bound,
    theorem_constants,
    tilde_bracket,
    tilde_errors,
)
from src.app.shared.errors import DomainError, ValidityError
from src.app.shared.models import SpectralPoint


class TestSqrtQTilde:
    """Test the approximation of sqrt(q) = c / sqrt(chi_n)."""

    @pytest.mark.parametrize(
        "c,n,expected",
        [
            (10.0, 6, 0.9950126961),
            (50.0, 32, 0.99501269),
            (10.0, 15, 0.585651991),
            (25.0, 20, 0.90491661),
            (100.0, 100, 0.80540660),
        ],
    )
    def test_published_values(self, c, n, expected):
        assert sqrt_q_tilde(SpectralPoint(n=n, c=c)) == pytest.approx(expected, abs=1e-8)

    def test_bracket(self):
        for n in range(7, 40):
            point = SpectralPoint(n=n, c=10.0)
            x = point.phi_argument
            assert x <= sqrt_q_tilde(point) <= math.pi * x / 2

    def test_validity(self):
        with pytest.raises(ValidityError) as excinfo:
            sqrt_q_tilde(SpectralPoint(n=3, c=10.0))
        assert "2c/(pi(n+1/2))" in excinfo.value.condition

    def test_large_bandwidth_columns(self):
        point = SpectralPoint(n=179, c=250.0)
        assert q_tilde(point) == pytest.approx(0.924218, rel=1e-5)
        assert kappa_proxy(point) == pytest.approx(19.707014, rel=1e-5)


class TestLogLambdaApproximations:
    """Test lambda~, lambda^, the Widom form and the mu conversion."""

    def setup_method(self):
        self.point = SpectralPoint(n=30, c=10 * math.pi)

    def test_hat_is_twice_tilde(self):
        assert lambda_hat(self.point) - lambda_tilde(self.point) == pytest.approx(math.log(2.0), rel=1e-13)

    def test_tilde_inside_widom_bracket(self):
        lower, upper = tilde_bracket(self.point)
        assert lower <= lambda_tilde(self.point) <= upper

    def test_bracket_rejects_escaped_value(self, monkeypatch):
        monkeypatch.setattr(spectral_approx, "lambda_tilde", lambda point: 0.0)
        with pytest.raises(ValidityError):
            tilde_bracket(self.point)

    def test_bracket_holds_along_sweep(self):
        for c in (1.0, 10.0, 10 * math.pi):
            n0 = int(math.ceil(2 * c / math.pi))
            for n in range(n0, n0 + 60, 7):
                lower, upper = tilde_bracket(SpectralPoint(n=n, c=c))
                assert upper - lower == pytest.approx(0.5 * math.pi ** 2 * c ** 2 / (n + 0.5), abs=1e-10)

    def test_widom_value(self):
        point = SpectralPoint(n=2, c=1.0)
        assert lambda_widom(point) == pytest.approx(5 * math.log(math.e / 10.0))

    def test_mu_round_trip(self):
        log_mu = mu_abs_from_loglambda(10.0, -50.0)
        assert loglambda_from_mu_abs(10.0, log_mu) == pytest.approx(-50.0)
        assert log_mu == pytest.approx(0.5 * (math.log(2 * math.pi / 10.0) - 50.0))

    def test_mu_domain(self):
        with pytest.raises(DomainError):
            mu_abs_from_loglambda(0.0, -1.0)

    @pytest.mark.parametrize(
        "c,n,expected",
        [(250.0, 179, 0.18948e-07), (1000.0, 665, 0.44139e-09), (1e6, 636677, 0.60652e-11)],
    )
    def test_published_mu_hat(self, c, n, expected):
        point = SpectralPoint(n=n, c=c)
        assert math.exp(mu_abs_from_loglambda(c, lambda_hat(point))) == pytest.approx(expected, rel=5e-4)

    def test_bundle_outside_validity(self):
        bundle = approx_bundle(SpectralPoint(n=2, c=10.0))
        assert not bundle.q_valid
        assert bundle.sqrt_q_tilde is None
        assert bundle.log_lambda_hat is None
        assert bundle.log_lambda_widom == lambda_widom(SpectralPoint(n=2, c=10.0))

    def test_bundle_inside_validity(self):
        bundle = approx_bundle(self.point)
        assert bundle.q_valid
        assert bundle.chi_tilde == pytest.approx((self.point.c / bundle.sqrt_q_tilde) ** 2)
        assert bundle.log_lambda_hat == lambda_hat(self.point)
        assert bundle.kappa_proxy == pytest.approx(kappa_proxy(self.point))


class TestKappa:
    """Test delta(kappa), the psi_n(1)^2 bracket and the kappa conditions."""

    def test_delta_values(self):
        assert delta_kappa(4.0) == pytest.approx(77.2, abs=0.1)
        assert delta_kappa(12.0) == pytest.approx(7.6, abs=0.1)
        assert delta_kappa(1e9) == pytest.approx(4.74, abs=0.01)

    def test_typeset_reading(self):
        assert delta_kappa(4.0, typeset=True) < delta_kappa(4.0)

    def test_delta_domain(self):
        with pytest.raises(DomainError):
            delta_kappa(3.9)

    def test_bracket_contains_oracle(self):
        point = SpectralPoint(n=60, c=10.0)
        pair = prolate_solve(point)
        bound = psi1_sq_bracket(point, 12.0, pair=pair)
        assert bound.contains(pair.psi1_sq)
        assert bound.epsilon_n == pytest.approx(1.0 / pair.kappa_observed)

    def test_bracket_requires_condition(self):
        with pytest.raises(ValidityError):
            psi1_sq_bracket(SpectralPoint(n=7, c=10.0), 12.0)

    def test_estimate_tracks_oracle(self):
        point = SpectralPoint(n=60, c=10.0)
        pair = prolate_solve(point)
        assert psi1_sq_estimate(point, pair.sqrt_q) == pytest.approx(pair.psi1_sq, rel=0.05)

    def test_condition_branches(self):
        assert kappa_condition(SpectralPoint(n=40, c=10.0), 12.0).branch == "c <= n - kappa"
        far = kappa_condition(SpectralPoint(n=200, c=250.0), 12.0)
        assert far.satisfied
        close = kappa_condition(SpectralPoint(n=160, c=250.0), 12.0)
        assert not close.satisfied
        assert close.c_n_kappa == pytest.approx(c_n_kappa(160, 12.0))

    def test_condition_domain(self):
        with pytest.raises(DomainError):
            kappa_condition(SpectralPoint(n=2, c=1.0), 12.0)

    def test_crude_bound_below_observed(self):
        for n in (30, 45, 60):
            point = SpectralPoint(n=n, c=20.0)
            assert crude_kappa_lower_bound(point) <= prolate_solve(point).kappa_observed

    def test_observed_at_table_row(self):
        kappa_c, delta_c = observed_kappa_delta(10 * math.pi, 20)
        assert kappa_c == pytest.approx(0.4475, abs=1e-3)
        # the bracket is attained from below at n_c
        assert delta_c == pytest.approx(0.1304, abs=1e-3)

    def test_observed_kappa_decreases_with_c(self):
        values = [observed_kappa_delta(m * math.pi, 2 * m)[0] for m in (10, 20, 30, 40)]
        assert values == sorted(values, reverse=True)
        assert values[-1] == pytest.approx(0.3809, abs=1e-3)

    def test_observed_requires_q_below_one(self):
        with pytest.raises(ValidityError):
            observed_kappa_delta(10.0, 2)


class TestBounds:
    """Test the explicit error bounds."""

    def test_theorem_constants_positive(self):
        constants = theorem_constants(12.0)
        assert constants.delta1 > constants.delta2 > constants.delta3 > 0.0

    def test_error_budget_total(self):
        budget = error_budget(50, 20.0, 12.0)
        assert budget.total == pytest.approx(budget.tail + budget.psi_remainder + budget.j_comparison)
        assert budget.tail == pytest.approx(tail_integral_bound(50, 12.0))

    def test_tail_domain(self):
        with pytest.raises(DomainError):
            tail_integral_bound(10, 12.0)

    def test_envelope_grows_with_n(self):
        assert envelope_log_factor(100, 10.0, 12.0) > envelope_log_factor(50, 10.0, 12.0)

    @pytest.mark.parametrize("n", [4, 10, 25])
    def test_j_l_comparison(self, n):
        for c in (0.5, 1.0, math.pi * n / 2):
            lower, middle, upper = j_l_comparison(n, c)
            assert lower <= middle <= upper

    def test_decay_margin(self):
        for c in (1.0, 10.0, 100.0):
            n = int(1.35 * c) + 1
            assert exponential_decay_margin(n, c) > 0.0
        assert exponential_decay_margin(5, 10.0) < 0.0

    def test_small_bandwidth_deviation(self):
        for n in (0, 1, 4):
            deviation, bound = small_c_psi1_deviation(n, 0.5)
            assert deviation <= bound

    def test_proxy_gap(self):
        point = SpectralPoint(n=40, c=25.0)
        gap, bound = kappa_proxy_gap(point, prolate_solve(point).chi)
        assert gap <= bound

    @pytest.mark.parametrize("c", [10.0, 25.0, 50.0, 100.0])
    def test_tilde_error_guarantees(self, c):
        n0 = int(math.ceil(2 * c / math.pi))
        for n in range(n0, n0 + 41, 5):
            dq, dq_bound, dchi = tilde_errors(SpectralPoint(n=n, c=c))
            assert dq <= dq_bound
            assert dchi <= 0.5

    def test_tilde_errors_need_plunge_end(self):
        with pytest.raises(ValidityError):
            tilde_errors(SpectralPoint(n=6, c=10.0))

    def test_improved_bounds(self):
        point = SpectralPoint(n=80, c=50.0)
        pair = prolate_solve(point)
        dq, dchi = improved_error_bounds(point, pair.kappa_observed, pair=pair)
        assert abs(pair.sqrt_q - sqrt_q_tilde(point)) <= dq
        assert dq > 0.0 and dchi > 0.0
