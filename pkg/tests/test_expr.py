import numpy as np
import pytest

from indefsl.errors import InvalidInputError
from indefsl.expr import domain_half_width, parse_potential, polynomial_potential


class TestPolynomials:
    def test_derivatives(self):
        u = polynomial_potential("x1^3 - 3*x1*x2^2/2", 2)
        x = np.array([0.5, -0.3])
        assert u.value(x) == pytest.approx(0.125 - 1.5 * 0.5 * 0.09)
        np.testing.assert_allclose(u.grad(x), [3 * 0.25 - 1.5 * 0.09, -3 * 0.5 * -0.3])
        np.testing.assert_allclose(u.hess(x), [[3.0, 0.9], [0.9, -1.5]])
        assert u.d3(x)[0, 0, 0] == 6.0 and u.d3(x)[0, 1, 1] == -3.0

    def test_constant_shapes(self):
        u = polynomial_potential("2", 3)
        assert u.grad(np.zeros(3)).shape == (3,) and u.d3(np.zeros(3)).shape == (3, 3, 3)

    def test_power_operators_equivalent(self):
        a, b = polynomial_potential("x1**2*x2", 2), polynomial_potential("x1^2*x2", 2)
        x = np.array([1.3, 0.7])
        assert a.value(x) == b.value(x)

    @pytest.mark.parametrize("text", ["sin(x1)", "x4", "x1^(1/2)", "", "1/x1", "x1;import os",
                                      "__import__('os')", "x1^x2"])
    def test_rejects(self, text):
        with pytest.raises(InvalidInputError):
            polynomial_potential(text, 2)


class TestWave:
    def test_polynomial_pair(self):
        u, desc = parse_potential("wave:F=s^2/4,G=0", 2)
        assert desc == {"kind": "wave", "text": "wave:F=s^2/4,G=0"}
        np.testing.assert_allclose(u.hess(np.array([0.3, 0.1])), [[0.5, 0.5], [0.5, 0.5]])

    def test_t_variable(self):
        u, _ = parse_potential("wave:F=t^3,G=t", 2)
        assert u.value(np.array([1.0, 0.0])) == pytest.approx(2.0)

    def test_spline_reproducible(self):
        a, _ = parse_potential("wave:spline,seed=4,knots=6", 2)
        b, desc = parse_potential("wave:spline,seed=4,knots=6", 2)
        x = np.array([0.2, 0.4])
        assert a.value(x) == b.value(x)
        assert domain_half_width(desc, 10.0) == 3.0

    @pytest.mark.parametrize("text", ["wave:F=s", "wave:F=s,G=s,H=s", "wave:spline",
                                      "wave:spline,seed=1,colour=2", "wave:F=x1,G=0"])
    def test_rejects(self, text):
        with pytest.raises(InvalidInputError):
            parse_potential(text, 2)

    def test_needs_m2(self):
        with pytest.raises(InvalidInputError):
            parse_potential("wave:F=s,G=s", 3)
