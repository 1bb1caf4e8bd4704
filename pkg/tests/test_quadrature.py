import math

import numpy as np
import pytest

from femkit.quadrature import gauss3_interval, integrate, map_to_interval, triangle_rule


def interval_monomial_integral(k):
    """Integral of x^k over [-1, 1]."""
    return 0.0 if k % 2 else 2.0 / (k + 1)


def triangle_monomial_integral(p, q):
    """Integral of xi^p eta^q over the reference triangle."""
    return math.factorial(p) * math.factorial(q) / math.factorial(p + q + 2)


class TestGauss3:
    def test_constants_integrate_to_measure(self):
        rule = gauss3_interval()
        assert rule.weights.sum() == pytest.approx(2.0, abs=1e-15)

    def test_points_and_weights(self):
        rule = gauss3_interval()
        s = math.sqrt(15.0) / 5.0
        assert np.allclose(rule.points, [-s, 0.0, s])
        assert np.allclose(rule.weights, [5 / 9, 8 / 9, 5 / 9])
        assert rule.exact_degree == 5

    def test_quartic_exact(self):
        rule = gauss3_interval()
        value = float(rule.weights @ rule.points**4)
        assert value == pytest.approx(2.0 / 5.0, abs=1e-15)

    def test_degree_six_not_exact(self):
        rule = gauss3_interval()
        value = float(rule.weights @ rule.points**6)
        assert abs(value - 2.0 / 7.0) > 1e-3

    def test_random_polynomials_exact_to_degree(self):
        rule = gauss3_interval()
        rng = np.random.default_rng(7)
        for _ in range(50):
            coeffs = rng.uniform(-1.0, 1.0, size=6)  # degree 5
            value = sum(w * sum(c * p**k for k, c in enumerate(coeffs)) for p, w in zip(rule.points, rule.weights))
            exact = sum(c * interval_monomial_integral(k) for k, c in enumerate(coeffs))
            assert value == pytest.approx(exact, rel=1e-13, abs=1e-14)

    def test_weights_positive(self):
        assert np.all(gauss3_interval().weights > 0)


class TestMapToInterval:
    def test_identity(self):
        rule = gauss3_interval()
        mapped = map_to_interval(rule, -1.0, 1.0)
        assert np.allclose(mapped.points, rule.points)
        assert np.allclose(mapped.weights, rule.weights)

    def test_unit_interval_quadratic(self):
        mapped = map_to_interval(gauss3_interval(), 0.0, 1.0)
        value = float(mapped.weights @ mapped.points**2)
        assert value == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_weights_scale_with_measure(self):
        mapped = map_to_interval(gauss3_interval(), 0.0, 0.2)
        assert mapped.weights.sum() == pytest.approx(0.2, abs=1e-16)

    def test_rejects_empty_interval(self):
        with pytest.raises(ValueError):
            map_to_interval(gauss3_interval(), 1.0, 1.0)


class TestTriangleRule:
    def test_reference_area(self):
        rule = triangle_rule(5)
        assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)

    def test_linear_moment(self):
        rule = triangle_rule(5)
        assert float(rule.weights @ rule.points[:, 0]) == pytest.approx(1.0 / 6.0, abs=1e-14)

    def test_degree_four_moment(self):
        rule = triangle_rule(5)
        value = float(rule.weights @ (rule.points[:, 0] ** 2 * rule.points[:, 1] ** 2))
        assert value == pytest.approx(1.0 / 180.0, abs=1e-14)

    @pytest.mark.parametrize("p,q", [(p, q) for p in range(6) for q in range(6 - p)])
    def test_all_monomials_to_degree_five(self, p, q):
        rule = triangle_rule(5)
        value = float(rule.weights @ (rule.points[:, 0] ** p * rule.points[:, 1] ** q))
        assert value == pytest.approx(triangle_monomial_integral(p, q), rel=1e-13)

    def test_points_inside_closed_reference_triangle(self):
        rule = triangle_rule(5)
        xi, eta = rule.points[:, 0], rule.points[:, 1]
        assert np.all(xi >= 0) and np.all(eta >= 0) and np.all(xi + eta <= 1 + 1e-15)

    def test_weights_positive(self):
        assert np.all(triangle_rule(5).weights > 0)

    def test_rejects_degree_above_five(self):
        with pytest.raises(ValueError):
            triangle_rule(6)

    def test_low_degree_request_uses_same_rule(self):
        assert triangle_rule(1).exact_degree == 5


class TestIntegrate:
    def test_constant_on_triangle_gives_area(self):
        verts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
        assert integrate(triangle_rule(5), verts, lambda x, y: 1.0) == pytest.approx(2.0, abs=1e-14)

    def test_linear_on_reference_triangle(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert integrate(triangle_rule(5), verts, lambda x, y: x) == pytest.approx(1.0 / 6.0, abs=1e-15)

    def test_constant_on_interval(self):
        assert integrate(gauss3_interval(), (0.0, 0.2), lambda x: 1.0) == pytest.approx(0.2, abs=1e-16)

    def test_random_quintic_on_random_interval(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = rng.uniform(-2, 1)
            b = a + rng.uniform(0.1, 2)
            coeffs = rng.uniform(-1, 1, size=6)
            value = integrate(gauss3_interval(), (a, b), lambda x: sum(c * x**k for k, c in enumerate(coeffs)))
            exact = sum(c * (b ** (k + 1) - a ** (k + 1)) / (k + 1) for k, c in enumerate(coeffs))
            assert value == pytest.approx(exact, rel=1e-13, abs=1e-13)
