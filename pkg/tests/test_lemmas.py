import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from milstab.lemmas import (
    BoundKind,
    LogBoundDomain,
    composite_increment_moments,
    gaussian_moment,
    log_lower_surrogate,
    log_upper_surrogate,
    verify_log_sandwich,
    xi_expectation,
    xi_gamma,
)
from milstab.model import ModelParams
from milstab.scheme import gamma_dt
from milstab.stochastics import RngStream, gauss_hermite_rule


class TestXiGamma:
    def test_spot_values(self):
        assert xi_gamma(2.0, -1.0) == pytest.approx(-1.125, abs=1e-15)
        assert xi_gamma(2.0, 1.0) == pytest.approx(-1.0 / 64.0, abs=1e-17)
        assert xi_gamma(2.0, 0.0) == 0.0

    def test_continuous_at_zero(self):
        for g in (0.75, 1.0, 2.0, 10.0):
            assert abs(xi_gamma(g, 1e-12)) < 1e-20
            assert abs(xi_gamma(g, -1e-12)) < 1e-20

    def test_domain_edge(self):
        with pytest.raises(ValueError):
            xi_gamma(3.0, -2.0)
        with pytest.raises(ValueError):
            xi_gamma(3.0, -2.5)
        assert xi_gamma(3.0, -2.0 + 1e-9) < 0.0

    def test_gamma_positive_required(self):
        with pytest.raises(ValueError):
            xi_gamma(0.0, 0.5)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=0.1, max_value=50.0),
        st.floats(min_value=-30.0, max_value=100.0),
    )
    def test_nonpositive_on_domain(self, gamma, x):
        assume(x > -2.0 * gamma / 3.0 * (1.0 - 1e-12))
        assert xi_gamma(gamma, x) <= 0.0


class TestSurrogates:
    def test_upper_spot_value(self):
        want = math.log(2.0) - 0.5 - 0.125 - 1.0 / 24.0
        assert log_upper_surrogate(2.0, -1.0) == pytest.approx(want, abs=1e-15)

    def test_lower_spot_value(self):
        # cubic polynomial part plus xi = -1.125 gives log(2) - 1.75
        want = math.log(2.0) - 1.75
        assert log_lower_surrogate(2.0, -1.0) == pytest.approx(want, abs=1e-15)
        assert want == pytest.approx(-1.0568528194400546, abs=1e-13)

    def test_upper_domain(self):
        with pytest.raises(ValueError):
            log_upper_surrogate(2.0, -2.0)

    def test_sandwich_at_origin(self):
        # both bounds are tight at x = 0
        for g in (0.75, 1.0, 2.0, 10.0):
            assert log_upper_surrogate(g, 0.0) == pytest.approx(math.log(g), abs=1e-15)
            assert log_lower_surrogate(g, 0.0) == pytest.approx(math.log(g), abs=1e-15)

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(min_value=0.1, max_value=50.0),
        st.floats(min_value=-0.6, max_value=10.0),
    )
    def test_pointwise_sandwich(self, gamma, t):
        # t parametrizes x relative to the lower-bound domain edge
        x = t * gamma
        assume(x > -2.0 * gamma / 3.0 * (1.0 - 1e-9))
        log_value = math.log(gamma + x)
        assert log_upper_surrogate(gamma, x) >= log_value - 1e-12
        assert log_lower_surrogate(gamma, x) <= log_value + 1e-12


class TestVerifySandwich:
    def test_reference_gammas_clean(self):
        report = verify_log_sandwich((0.75, 1.0, 2.0, 10.0), n_points=5000, tol=-1e-12)
        assert report.passed
        assert report.upper_violations == 0 and report.lower_violations == 0
        assert report.n_points == 4 * 2 * 5000
        assert report.worst_upper_margin >= -1e-12
        assert report.worst_lower_margin >= -1e-12

    def test_explicit_points(self):
        report = verify_log_sandwich((2.0,), points=np.array([0.0, 0.5, 1.0]))
        assert report.passed
        assert report.n_points == 6

    def test_explicit_points_out_of_domain(self):
        with pytest.raises(ValueError):
            verify_log_sandwich((2.0,), points=np.array([-1.9]))

    def test_domain_edges(self):
        assert LogBoundDomain(gamma=3.0, kind=BoundKind.UPPER).lower_edge() == -3.0
        assert LogBoundDomain(gamma=3.0, kind=BoundKind.LOWER).lower_edge() == -2.0


class TestGaussianMoment:
    def test_low_orders(self):
        dt = 1e-3
        assert gaussian_moment(2, dt) == pytest.approx(dt, rel=1e-15)
        assert gaussian_moment(4, dt) == pytest.approx(3.0 * dt * dt, rel=1e-15)
        assert gaussian_moment(6, dt) == pytest.approx(15.0 * dt**3, rel=1e-15)
        for odd in (1, 3, 5, 7):
            assert gaussian_moment(odd, dt) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            gaussian_moment(0, 1e-3)
        with pytest.raises(ValueError):
            gaussian_moment(2, 0.0)
        with pytest.raises(ValueError):
            gaussian_moment(2.5, 1e-3)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=1, max_value=12), st.floats(min_value=1e-6, max_value=1.0))
    def test_double_factorial_form(self, k, dt):
        order = 2 * k
        want = math.prod(range(1, order, 2)) * dt**k
        assert gaussian_moment(order, dt) == pytest.approx(want, rel=1e-13)


class TestCompositeMoments:
    def test_closed_form(self):
        mean, second = composite_increment_moments(2.0, 1e-3)
        assert mean == pytest.approx(2e-3, rel=1e-15)
        assert second == pytest.approx(4e-3 + 0.75 * 16.0 * 1e-6, rel=1e-15)

    def test_monte_carlo_agreement(self):
        # independent route: sample the composite increment directly
        sigma, dt, n = 2.0, 1e-2, 200_000
        mean_ref, second_ref = composite_increment_moments(sigma, dt)
        dB = math.sqrt(dt) * RngStream(root_seed=7, stream_id=0).normals(n)
        c = sigma * dB + 0.5 * sigma * sigma * dB * dB
        for data, ref in ((c, mean_ref), (c * c, second_ref)):
            se = float(data.std(ddof=1)) / math.sqrt(n)
            assert abs(float(data.mean()) - ref) <= 4.0 * se

    def test_quadrature_agreement(self):
        # third route: integrate the composite increment against the rule
        sigma, dt = 3.0, 1e-3
        mean_ref, second_ref = composite_increment_moments(sigma, dt)
        rule = gauss_hermite_rule(61)
        s = sigma * math.sqrt(dt)
        c = s * rule.nodes + 0.5 * s * s * rule.nodes**2
        assert rule.integrate(c) == pytest.approx(mean_ref, rel=1e-12)
        assert rule.integrate(c * c) == pytest.approx(second_ref, rel=1e-12)


class TestLogIntegralDoubling:
    def test_smooth_integrands_stable_under_doubling(self):
        r1 = gauss_hermite_rule(201)
        r2 = gauss_hermite_rule(402)
        for f in (
            lambda y: np.log(2.0 + y * y),
            lambda y: np.log(2.0 + 0.2 * y + 0.02 * y * y),
        ):
            i1 = r1.integrate(f(r1.nodes))
            i2 = r2.integrate(f(r2.nodes))
            assert abs(i1 - i2) < 1e-12


class TestXiExpectation:
    P = ModelParams(lam=8.0, epsilon=2.0, sigma=4.0)

    def test_zero_noise(self):
        p = ModelParams(lam=1.0, epsilon=0.5, sigma=0.0)
        assert xi_expectation(p, 1e-3) == 0.0

    def test_nonpositive(self):
        for dt in (1e-2, 1e-3, 1e-4):
            assert xi_expectation(self.P, dt) <= 0.0

    def test_node_doubling_stable(self):
        v1 = xi_expectation(self.P, 1e-3, nodes=201)
        v2 = xi_expectation(self.P, 1e-3, nodes=402)
        assert abs(v1 - v2) <= 1e-10 * max(abs(v1), abs(v2))

    def test_small_dt_scaling(self):
        # |E xi| shrinks like dt^(3/2) once sigma*sqrt(dt) is small
        a = abs(xi_expectation(self.P, 4e-6))
        b = abs(xi_expectation(self.P, 1e-6))
        assert a / b == pytest.approx(8.0, rel=0.25)

    def test_gamma_restriction(self):
        bad = ModelParams(lam=-300.0, epsilon=0.0, sigma=1.0)
        with pytest.raises(ValueError):
            xi_expectation(bad, 1e-3)

    def test_monte_carlo_agreement(self):
        # direct sampling of xi_gamma at the composite increment
        p, dt, n = self.P, 1e-3, 400_000
        gamma = gamma_dt(p, dt)
        dB = math.sqrt(dt) * RngStream(root_seed=13, stream_id=0).normals(n)
        comp = p.sigma * dB + 0.5 * p.sigma * p.sigma * dB * dB
        vals = np.where(comp >= 0.0, -(comp**4) / (4.0 * gamma**4), 9.0 * comp**3 / gamma**3)
        se = float(vals.std(ddof=1)) / math.sqrt(n)
        assert abs(float(vals.mean()) - xi_expectation(p, dt)) <= 4.0 * se
