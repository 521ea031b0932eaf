"""Tests for integration module."""

import numpy as np
import pytest
from scipy.special import gamma


@pytest.fixture
def line():
    from src.algebra_core import make_algebra

    return make_algebra("symr", 1)


@pytest.fixture
def symr2():
    from src.algebra_core import make_algebra

    return make_algebra("symr", 2)


@pytest.mark.unit
def test_half_line_gaussian_moments(line):
    """Test int_0^inf x^s exp(-x^2/2) dx = 2^{(s-1)/2} Gamma((s+1)/2) by quadrature."""
    from src.integration import METHOD_DIRECT_QUADRATURE, TestFunction, integrate_orbits

    f = TestFunction.gaussian(line)
    exponents = [0.5, 2.0]
    result = integrate_orbits(line, f, exponents, np.array([[1.0, 1.0], [0.0, 0.0]]))
    expected = [2 ** ((s - 1) / 2) * gamma((s + 1) / 2) for s in exponents]
    assert np.allclose(result.mean[0], expected, rtol=1e-8)
    assert result.method == METHOD_DIRECT_QUADRATURE
    assert result.value(output=1).value == pytest.approx(expected[1], rel=1e-8)


@pytest.mark.unit
def test_monte_carlo_total_mass_is_exact(symr2):
    """Test that a constant integrand over all orbits returns the Gaussian mass."""
    from src.integration import Budget, TestFunction, integrate_orbits

    f = TestFunction.gaussian(symr2, width=0.8)
    result = integrate_orbits(symr2, f, [0.0], np.ones((3, 1)), budget=Budget(samples=500, seed=1, chunk_size=200))
    assert result.mean[0, 0].real == pytest.approx(f.normalization, rel=1e-12)
    assert result.samples == 500


@pytest.mark.unit
def test_monte_carlo_is_deterministic(symr2):
    """Test that the same seed reproduces the estimate, independent of threads."""
    from src.integration import Budget, TestFunction, integrate_orbits

    f = TestFunction.gaussian(symr2, center=symr2.unit_coords * 0.5)
    weights = np.array([[1.0], [0.0], [0.0]])
    first = integrate_orbits(symr2, f, [0.7], weights, budget=Budget(samples=3000, seed=9, chunk_size=1000, threads=1))
    second = integrate_orbits(symr2, f, [0.7], weights, budget=Budget(samples=3000, seed=9, chunk_size=1000, threads=3))
    other = integrate_orbits(symr2, f, [0.7], weights, budget=Budget(samples=3000, seed=10, chunk_size=1000))
    assert np.allclose(first.mean, second.mean, rtol=1e-12)
    assert not np.allclose(first.mean, other.mean, rtol=1e-12)
    assert first.stderr[0, 0] > 0


@pytest.mark.unit
def test_budget_target_miss_raises(symr2):
    """Test QuadratureBudgetError with the partial estimate attached."""
    from src.integration import Budget, QuadratureBudgetError, TestFunction, integrate_orbits

    f = TestFunction.gaussian(symr2)
    budget = Budget(samples=200, seed=2, target_relative_error=1e-9)
    with pytest.raises(QuadratureBudgetError) as info:
        integrate_orbits(symr2, f, [0.5], np.ones((3, 1)), budget=budget)
    assert info.value.partial.samples == 200
    assert info.value.partial.abs_error_estimate > 0


@pytest.mark.unit
def test_negative_exponent_rejected(line):
    """Test that direct integration refuses Re e < 0."""
    from src.algebra_core import ParameterError
    from src.integration import TestFunction, integrate_orbits

    with pytest.raises(ParameterError):
        integrate_orbits(line, TestFunction.gaussian(line), [-0.5], np.ones((2, 1)))


@pytest.mark.unit
@pytest.mark.parametrize("kwargs", [{"samples": 1}, {"chunk_size": 0}, {"threads": 0}])
def test_budget_validation(kwargs):
    """Test invalid budgets."""
    from src.algebra_core import ParameterError
    from src.integration import Budget

    with pytest.raises(ParameterError):
        Budget(**kwargs)


@pytest.mark.unit
def test_test_function_validation(symr2):
    """Test width and precision checks."""
    from src.algebra_core import ParameterError
    from src.integration import TestFunction
    from src.polynomials import Polynomial

    with pytest.raises(ParameterError):
        TestFunction.gaussian(symr2, width=0.0)
    with pytest.raises(ParameterError):
        TestFunction(symr2, Polynomial.constant(3, 1.0), np.zeros(3), -np.eye(3))
    with pytest.raises(ParameterError):
        TestFunction.gaussian(symr2).det_dop(-1)


@pytest.mark.unit
def test_derivative_matches_finite_difference(symr2):
    """Test d/dx_i of a polynomial times Gaussian."""
    from src.integration import TestFunction
    from src.polynomials import Polynomial

    poly = Polynomial.constant(3, 1.0) + Polynomial.variable(3, 0) * Polynomial.variable(3, 2)
    f = TestFunction.gaussian(symr2, center=[0.2, -0.1, 0.4], width=0.9, poly=poly)
    x = np.array([[0.3, 0.5, -0.2]])
    h = 1e-6
    for i in range(3):
        step = np.zeros(3)
        step[i] = h
        numeric = (f.evaluate(x + step) - f.evaluate(x - step)) / (2 * h)
        assert f.derivative(i).evaluate(x)[0] == pytest.approx(numeric[0], rel=1e-6, abs=1e-9)


@pytest.mark.unit
def test_pullback_and_scaling(symr2):
    """Test phi_g(g x) = phi(x) and phi_lambda(lambda x) = phi(x)."""
    from src.integration import TestFunction
    from src.polynomials import Polynomial
    from src.polyrep import random_group_element

    f = TestFunction.gaussian(symr2, center=[0.5, 0.1, 0.0], poly=Polynomial.linear([1.0, -2.0, 0.5], 0.3))
    g = random_group_element(symr2, seed=4)
    x = np.random.default_rng(5).normal(size=(4, 3))
    assert np.allclose(f.pullback(g).evaluate(g.act(x)), f.evaluate(x), rtol=1e-9, atol=1e-12)
    assert np.allclose(f.scaled(2.0).evaluate(2.0 * x), f.evaluate(x), rtol=1e-9, atol=1e-12)


@pytest.mark.unit
def test_fourier_of_gaussian(symr2):
    """Test F exp(-|x|^2/2) = (2 pi)^{n/2} exp(-|y|^2/2) and F[x_0 phi] = i d_0 F phi."""
    from src.integration import TestFunction
    from src.polynomials import Polynomial

    f = TestFunction.gaussian(symr2)
    y = np.array([[0.4, -0.3, 1.1]])
    mass = (2 * np.pi) ** 1.5
    expected = mass * np.exp(-0.5 * np.sum(y ** 2))
    assert f.fourier().evaluate(y)[0] == pytest.approx(expected, rel=1e-10)
    moment = f.times_polynomial(Polynomial.variable(3, 0)).fourier()
    assert complex(moment.evaluate(y)[0]) == pytest.approx(-1j * y[0, 0] * expected, rel=1e-10)


@pytest.mark.unit
def test_fourier_needs_centred_function(symr2):
    """Test that a shifted Gaussian has no Fourier transform in the class."""
    from src.algebra_core import ParameterError
    from src.integration import TestFunction

    with pytest.raises(ParameterError):
        TestFunction.gaussian(symr2, center=[1.0, 0.0, 0.0]).fourier()


@pytest.mark.unit
def test_det_dop_on_line(line):
    """Test det(d) = d/dx on the real line."""
    from src.integration import TestFunction

    f = TestFunction.gaussian(line)
    x = np.array([[0.7]])
    assert f.det_dop(1).evaluate(x)[0] == pytest.approx(-0.7 * np.exp(-0.245))
    assert f.det_dop(2).evaluate(x)[0] == pytest.approx((0.49 - 1.0) * np.exp(-0.245))
