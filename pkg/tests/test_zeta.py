"""Tests for zeta module."""

import dataclasses
from fractions import Fraction

import numpy as np
import pytest
import sympy
from scipy.special import gamma


@pytest.fixture
def line():
    from src.algebra_core import make_algebra

    return make_algebra("symr", 1)


@pytest.fixture
def symr2():
    from src.algebra_core import make_algebra

    return make_algebra("symr", 2)


@pytest.fixture
def hermc2():
    from src.algebra_core import make_algebra

    return make_algebra("hermc", 2)


def half_line_moment(s):
    """int_0^inf x^s exp(-x^2/2) dx, continued in s."""
    return 2 ** ((s - 1) / 2) * gamma((s + 1) / 2)


@pytest.mark.unit
def test_as_fraction():
    """Test exact reading of rationals, strings and complex input."""
    from src.zeta import as_fraction

    assert as_fraction("-3/2") == Fraction(-3, 2)
    assert as_fraction(-1.5) == Fraction(-3, 2)
    assert as_fraction("0.5+0i") == Fraction(1, 2)
    assert as_fraction(0.5 + 0.2j) is None


@pytest.mark.unit
@pytest.mark.parametrize("s0,expected", [(-1, 1), ("-3/2", 1), (-2, 1), (0.3, 0), (0, 0)])
def test_o_mult_symr2(symr2, s0, expected):
    """Test the number of polar Gamma factors at s0."""
    from src.zeta import o_mult

    assert o_mult(s0, (0, 0), symr2) == expected


@pytest.mark.unit
def test_critical_set_window(symr2):
    """Test critical points of pi_(2,0) on Sym(2, R), in decreasing order."""
    from src.zeta import critical_set

    points = critical_set((2, 0), symr2, window=(-2, 1))
    assert points == [
        (Fraction(1), 1),
        (Fraction(0), 1),
        (Fraction(-1), 1),
        (Fraction(-3, 2), 1),
        (Fraction(-2), 1),
    ]


@pytest.mark.unit
def test_critical_set_rejects_bad_window(symr2):
    """Test an inverted window."""
    from src.algebra_core import ParameterError
    from src.zeta import critical_set

    with pytest.raises(ParameterError):
        critical_set((0, 0), symr2, window=(1, -1))


@pytest.mark.unit
def test_homogeneity_bounds(symr2):
    """Test s <= -(n/r - d p/2) + m_{r-p} and s <= -n/r + m_r."""
    from src.algebra_core import ParameterError
    from src.zeta import homogeneity_bounds

    assert homogeneity_bounds(1, (0, 0), symr2) == (Fraction(-1), Fraction(-3, 2))
    assert homogeneity_bounds(None, (2, 1), symr2) == (None, Fraction(-1, 2))
    with pytest.raises(ParameterError):
        homogeneity_bounds(2, (0, 0), symr2)


@pytest.mark.unit
def test_gamma_omega_values(line, symr2):
    """Test Gamma_Omega against explicit Gamma products."""
    from src.zeta import gamma_omega, gamma_omega_cone

    assert gamma_omega(2, (0,), line) == pytest.approx(2.0)
    expected = np.sqrt(2 * np.pi) * gamma(0.5 + 1.5) * gamma(0.5 + 1.0)
    assert gamma_omega(0.5, (0, 0), symr2) == pytest.approx(expected)
    assert gamma_omega_cone(3.0, symr2) == pytest.approx(np.sqrt(2 * np.pi) * gamma(3.0) * gamma(2.5))


@pytest.mark.unit
@pytest.mark.parametrize("s,factors", [(-1, (2,)), ("-3/2", (1,)), (-2, (2,))])
def test_gamma_omega_pole_reports_factors(symr2, s, factors):
    """Test PoleError with the indices of the failing factors."""
    from src.zeta import PoleError, gamma_omega

    with pytest.raises(PoleError) as info:
        gamma_omega(s, (0, 0), symr2)
    assert info.value.factors == factors


@pytest.mark.slow
def test_cone_gamma_monte_carlo(symr2):
    """Test the sampled Gamma_Omega(t) within 2 percent."""
    from src.zeta import cone_gamma_mc, gamma_omega_cone

    estimate = cone_gamma_mc(3.0, symr2, samples=200000, seed=3)
    exact = gamma_omega_cone(3.0, symr2).real
    assert abs(estimate.value.real - exact) / exact < 0.02
    assert estimate.samples == 200000


@pytest.mark.unit
def test_cone_gamma_divergent(symr2):
    """Test that t <= (r - 1) d / 2 is rejected."""
    from src.algebra_core import ParameterError
    from src.zeta import cone_gamma_mc

    with pytest.raises(ParameterError):
        cone_gamma_mc(0.5, symr2, samples=10)


@pytest.mark.unit
def test_orbit_sign_conventions():
    """Test the jk and j sign conventions."""
    from src.config import apply_config, config
    from src.zeta import orbit_sign

    assert orbit_sign(1, 1) == -1
    assert orbit_sign(1, 2) == 1
    assert orbit_sign(3, 0) == 1
    original = dataclasses.replace(config)
    try:
        apply_config(dataclasses.replace(config, BERNSTEIN_SIGN_EXPONENT="j"))
        assert orbit_sign(1, 2) == -1
    finally:
        apply_config(original)


@pytest.mark.unit
def test_minimal_shift():
    """Test the smallest k with Re s + k >= 0."""
    from src.algebra_core import ParameterError
    from src.zeta import minimal_shift

    assert minimal_shift([0.3, -0.2]) == 1
    assert minimal_shift([-1.0 + 0.5j]) == 1
    assert minimal_shift([-1.5], forced=3) == 3
    with pytest.raises(ParameterError):
        minimal_shift([-1.5], forced=1)


@pytest.mark.unit
@pytest.mark.parametrize("j", [0, 1])
@pytest.mark.parametrize("s", [0.7, -0.5, -1.5, -2.3])
def test_zeta_continuation_on_line(line, j, s):
    """Test Phi_j(exp(-x^2/2), s) on both half-lines, past the first poles."""
    from src.integration import TestFunction
    from src.zeta import zeta_eval

    value = zeta_eval(j, (0,), TestFunction.gaussian(line), s)
    assert value.value.real == pytest.approx(half_line_moment(s), rel=1e-6)
    assert abs(value.value.imag) < 1e-9
    if s < 0:
        assert value.method.startswith("bernstein_shifted")


@pytest.mark.unit
def test_zeta_eval_at_pole(line):
    """Test PoleError at s = -1 for the half-line integral."""
    from src.integration import TestFunction
    from src.zeta import PoleError, zeta_eval

    with pytest.raises(PoleError):
        zeta_eval(0, (0,), TestFunction.gaussian(line), -1.0)


@pytest.mark.unit
def test_zeta_eval_direct_range(line):
    """Test that direct evaluation refuses Re s < 0."""
    from src.algebra_core import ParameterError
    from src.integration import TestFunction
    from src.zeta import zeta_eval_direct

    with pytest.raises(ParameterError):
        zeta_eval_direct(0, (0,), TestFunction.gaussian(line), -0.5)


@pytest.mark.unit
def test_psi_eval_on_line(line):
    """Test Psi_k(phi, -s) = int_{Omega_k} |x|^{-s} phi for m = 0."""
    from src.integration import TestFunction
    from src.zeta import psi_eval

    value = psi_eval(1, (0,), TestFunction.gaussian(line), 0.5)
    assert value.value.real == pytest.approx(half_line_moment(-0.5), rel=1e-6)


@pytest.mark.unit
def test_laurent_residue_of_half_line(line):
    """Test that x_+^s has a simple pole at -1 with residue f(0)."""
    from src.integration import TestFunction
    from src.zeta import laurent

    f = TestFunction.gaussian(line, width=1.3)
    expansion = laurent([1, 0], (0,), f, -1)
    assert expansion.order == 1
    assert expansion.residue(1).real == pytest.approx(1.0, rel=1e-5)
    assert expansion.radius == pytest.approx(0.25)
    assert expansion.to_json()["order"] == 1


@pytest.mark.unit
def test_laurent_regular_point(line):
    """Test order 0 and C_0 = Phi at a regular point."""
    from src.integration import TestFunction
    from src.zeta import laurent

    expansion = laurent([1, 0], (0,), TestFunction.gaussian(line), "-1/2", radius=0.2)
    assert expansion.order == 0
    assert expansion.coefficients[0].real == pytest.approx(half_line_moment(-0.5), rel=1e-6)


@pytest.mark.unit
def test_laurent_circle_with_other_pole(line):
    """Test GeometryError when the circle reaches the next pole."""
    from src.integration import TestFunction
    from src.zeta import GeometryError, laurent

    with pytest.raises(GeometryError) as info:
        laurent([1, 0], (0,), TestFunction.gaussian(line), -1, radius=1.5)
    assert info.value.pole == Fraction(-2)


@pytest.mark.unit
def test_resolved_laurent_on_line(line):
    """Test that quadrature expansions are returned without doubling."""
    from src.integration import Budget, TestFunction
    from src.zeta import is_resolved, resolved_laurent

    expansion = resolved_laurent([1, 0], (0,), TestFunction.gaussian(line, width=1.3), -1, budget=Budget(samples=1000))
    assert expansion.order == 1
    assert expansion.samples == 0
    assert is_resolved(expansion)


@pytest.mark.unit
def test_resolved_laurent_keeps_indeterminate_on_line(line):
    """Test that an identically vanishing combination still raises on the line."""
    from src.integration import TestFunction
    from src.zeta import IndeterminateOrderError, resolved_laurent

    with pytest.raises(IndeterminateOrderError):
        resolved_laurent([1, -1], (0,), TestFunction.gaussian(line), -2)


@pytest.mark.unit
@pytest.mark.parametrize("s0,expected", [(-1, 1), (-2, 2), (0.5, 0)])
def test_pole_order_hermitian(hermc2, s0, expected):
    """Test pole orders of Phi_0 on Herm(2, C)."""
    from src.zeta import pole_order_predict

    report = pole_order_predict([1, 0, 0], (0, 0), s0, hermc2)
    assert report.predicted_order == expected
    assert report.deg_p == 2


@pytest.mark.unit
@pytest.mark.parametrize(
    "c,s0,expected",
    [([1, 1], -2, 0), ([1, -1], -2, 1), ([1, 1], -1, 1), ([1, 0], -1, 1)],
)
def test_pole_order_on_line(line, c, s0, expected):
    """Test |x|^s, sign(x)|x|^s and x_+^s at negative integers."""
    from src.zeta import pole_order_predict

    assert pole_order_predict(c, (0,), s0, line).predicted_order == expected


@pytest.mark.unit
def test_pole_order_odd_degree_needs_half_integer(symr2):
    """Test UnsupportedPointError off Z/2 for odd d."""
    from src.zeta import UnsupportedPointError, pole_order_predict

    with pytest.raises(UnsupportedPointError):
        pole_order_predict([1, 0, 0], (0, 0), 0.3, symr2)


@pytest.mark.unit
def test_support_rank_predict(symr2, hermc2):
    """Test the support rank of A_h by parity of d."""
    from src.algebra_core import ParameterError, make_algebra
    from src.zeta import support_rank_predict

    symr3 = make_algebra("symr", 3)
    assert support_rank_predict(1, -2, symr3) == 2
    assert support_rank_predict(1, "-3/2", symr3) == 1
    assert support_rank_predict(2, -2, symr3) == 0
    assert support_rank_predict(1, -1, hermc2) == 1
    assert support_rank_predict(2, -2, hermc2) == 0
    with pytest.raises(ParameterError):
        support_rank_predict(0, -1, symr2)


@pytest.mark.unit
def test_critical_coefficients(hermc2):
    """Test c_j = exp(-i pi s0 j) j^power and parity masks."""
    from src.zeta import critical_coefficients

    assert np.allclose(critical_coefficients(-1, hermc2, 1), [0, -1, 2])
    assert np.allclose(critical_coefficients(-1, hermc2, 0, parity="even"), [1, 0, 1])


@pytest.mark.unit
def test_support_coefficients_reach_prescribed_order(hermc2):
    """Test that the constructed coefficients give the announced order."""
    from src.zeta import pole_order_predict, support_coefficients

    construction = support_coefficients(0, -2, hermc2)
    assert construction.order == 2
    report = pole_order_predict(construction.coefficients, (0, 0), -2, hermc2)
    assert report.predicted_order == 2
    assert report.support_rank_by_h[2] == 0


@pytest.mark.unit
def test_support_coefficients_odd_degree(symr2):
    """Test the even-j construction for d odd and an unreachable rank."""
    from src.algebra_core import ParameterError
    from src.zeta import support_coefficients

    construction = support_coefficients(1, -1, symr2)
    assert construction.order == 1
    assert construction.parity == "even"
    assert construction.orbits == (0, 1)
    with pytest.raises(ParameterError):
        support_coefficients(0, -1, symr2)


@pytest.mark.unit
@pytest.mark.parametrize("parity,orbits", [("even", (0,)), ("odd", (1,))])
def test_support_coefficients_half_integer_parity(parity, orbits):
    """Test that at -3/2 on Sym(3, R) the even sum reaches S_{1,0} and the odd sum S_{1,1}."""
    from src.algebra_core import make_algebra
    from src.zeta import pole_order_predict, support_coefficients

    symr3 = make_algebra("symr", 3)
    construction = support_coefficients(1, "-3/2", symr3, parity=parity)
    assert construction.orbits == orbits
    assert construction.order == 1
    report = pole_order_predict(construction.coefficients, (0, 0, 0), "-3/2", symr3)
    assert report.predicted_order == 1
    assert report.support_rank_by_h[1] == 1


@pytest.mark.unit
def test_support_coefficients_parity_without_orbit(symr2):
    """Test ParameterError when the odd sum reaches no orbit of the requested rank."""
    from src.algebra_core import ParameterError
    from src.zeta import support_coefficients

    assert support_coefficients(0, "-3/2", symr2).orbits == (0,)
    with pytest.raises(ParameterError):
        support_coefficients(0, "-3/2", symr2, parity="odd")
    with pytest.raises(ParameterError):
        support_coefficients(0, "-3/2", symr2, parity="both")


@pytest.mark.integration
@pytest.mark.parametrize("m", [(0, 0), (1, 0), (1, 1)])
def test_bernstein_identity_exact(symr2, m):
    """Test det(d)(det^{s+1} Delta_m) = b_m(s) det^s Delta_m symbolically."""
    from src.zeta import bernstein_identity_exact

    identity = bernstein_identity_exact(m, symr2)
    assert identity.holds
    if m == (0, 0):
        s = sympy.Symbol("s")
        assert sympy.expand(identity.b - (s + 1) * (s + sympy.Rational(3, 2))) == 0


@pytest.mark.integration
def test_vector_zeta_matches_scalar_for_trivial_partition(symr2):
    """Test that T_j^0 is the scalar zeta integral."""
    from src.integration import Budget, TestFunction
    from src.polyrep import build_Pm
    from src.zeta import vector_zeta, zeta_eval

    budget = Budget(samples=4000, seed=6)
    space = build_Pm((0, 0), symr2)
    phi = TestFunction.gaussian(symr2, center=0.3 * symr2.unit_coords)
    vector = vector_zeta(0, space, phi, 0.8, budget)
    scalar = zeta_eval(0, (0, 0), phi, 0.8, budget)
    h = complex(space.dual_coefficients[0, 0])
    assert vector[0].value == pytest.approx(h * scalar.value, rel=1e-10)
