"""Tests for verify module."""

import csv
import json

import numpy as np
import pytest


@pytest.fixture
def line():
    from src.algebra_core import make_algebra

    return make_algebra("symr", 1)


@pytest.fixture
def symr2():
    from src.algebra_core import make_algebra

    return make_algebra("symr", 2)


@pytest.fixture
def p10(symr2):
    from src.polyrep import build_Pm

    return build_Pm((1, 0), symr2)


@pytest.mark.unit
def test_check_report_pass_flag():
    """Test passed == (deviation <= tolerance) and JSON conversion of details."""
    from src.verify import CheckReport

    assert CheckReport.from_deviation("x", 0.5, 0.5).passed
    assert not CheckReport.from_deviation("x", 0.6, 0.5).passed
    report = CheckReport.from_deviation("x", 0.1, 1.0, 10, {"value": 1 + 2j, "array": np.arange(2)})
    document = report.to_json()
    assert document["details"] == {"value": [1.0, 2.0], "array": [0, 1]}
    assert document["budget_used"] == 10
    json.dumps(document)


@pytest.mark.unit
def test_make_battery(symr2):
    """Test battery size, determinism and centring."""
    from src.algebra_core import ParameterError
    from src.verify import make_battery

    first = make_battery(symr2, 4, seed=3, degree=2)
    second = make_battery(symr2, 4, seed=3, degree=2)
    assert len(first) == 4
    assert np.allclose(first[2].precision, second[2].precision)
    assert all(np.allclose(f.center, 0.0) for f in make_battery(symr2, 3, seed=3, centred=True))
    with pytest.raises(ParameterError):
        make_battery(symr2, 0)


@pytest.mark.unit
def test_classical_functional_equation_constants(line):
    """Test Phi_0(F phi, s - 1) = Gamma(s)(e^{-i pi s/2} Psi_0 + e^{i pi s/2} Psi_1) on the line."""
    from src.integration import TestFunction
    from src.polynomials import Polynomial
    from src.verify import classical_fourier_coefficients
    from src.zeta import psi_eval, zeta_eval

    phi = TestFunction.gaussian(line, width=0.8, poly=Polynomial.linear([0.6], 1.0))
    s = 0.5
    lhs = zeta_eval(0, (0,), phi.fourier(), s - 1).value
    psi = np.array([psi_eval(k, (0,), phi, s).value for k in range(2)])
    rhs = classical_fourier_coefficients(s) @ psi
    assert abs(lhs - rhs) / abs(lhs) < 1e-6


@pytest.mark.integration
def test_functional_equation_span_on_line(line):
    """Test that the fitted coefficients reproduce the classical constants."""
    from src.verify import check_functional_equation_span, classical_fourier_coefficients, make_battery

    battery = make_battery(line, 6, seed=4, centred=True)
    report = check_functional_equation_span((0,), 0.5, battery)
    assert report.passed
    fitted = np.array(report.details["coefficients"])
    assert np.allclose(fitted[0], classical_fourier_coefficients(0.5), rtol=1e-5)


@pytest.mark.unit
def test_functional_equation_battery_too_small(line):
    """Test BatteryError below 3 (r + 1) functions."""
    from src.verify import BatteryError, check_functional_equation_span, make_battery

    with pytest.raises(BatteryError) as info:
        check_functional_equation_span((0,), 0.5, make_battery(line, 2, centred=True))
    assert info.value.size == 2


@pytest.mark.unit
def test_dimension_probe_battery_too_small(p10, symr2):
    """Test BatteryError when the battery does not exceed r + 1."""
    from src.verify import BatteryError, dimension_probe, make_battery

    with pytest.raises(BatteryError):
        dimension_probe(p10, 0.7, make_battery(symr2, 3))


@pytest.mark.slow
def test_dimension_probe_full_rank(symr2):
    """Test that the r + 1 orbit integrals are linearly independent."""
    from src.integration import Budget
    from src.polyrep import build_Pm
    from src.verify import dimension_probe, make_battery

    space = build_Pm((0, 0), symr2)
    report = dimension_probe(space, 0.7, make_battery(symr2, 6, seed=8), Budget(samples=20000, seed=8))
    assert report.details["rank"] == 3
    assert report.passed


@pytest.mark.slow
def test_homogeneity_random_words_and_negative_control(symr2):
    """Test the law on random words with a dilation and a +0.1 Det exponent as negative control."""
    from src.algebra_core import GroupElement, Operator
    from src.integration import Budget, TestFunction
    from src.polyrep import build_Pm, random_group_element
    from src.verify import check_homogeneity

    space = build_Pm((0, 0), symr2)
    phi = TestFunction.gaussian(symr2)
    budget = Budget(samples=40000, seed=11)
    dilation = GroupElement.from_operator(Operator(1.5 * np.eye(symr2.dim)), ("1.5e",))
    for t in range(2):
        g = (
            random_group_element(symr2, seed=[11, t], style="frobenius")
            .compose(random_group_element(symr2, seed=[11, t], style="automorphism"))
            .compose(dilation)
        )
        for j in range(symr2.rank + 1):
            report = check_homogeneity(j, space, 0.7, g, phi, budget)
            assert report.passed
            assert report.details["relative_sigma"] <= 1e-2
            assert not check_homogeneity(j, space, 0.7, g, phi, budget, exponent_shift=0.1).passed


@pytest.mark.integration
def test_homogeneity_identity(p10, symr2):
    """Test that g = Id agrees exactly."""
    from src.algebra_core import GroupElement
    from src.integration import Budget
    from src.verify import check_homogeneity, make_battery

    phi = make_battery(symr2, 1, seed=5, degree=0)[0]
    report = check_homogeneity(0, p10, 0.7, GroupElement.identity(symr2), phi, Budget(samples=40000, seed=5))
    assert report.passed
    assert report.max_relative_deviation < 1e-8


@pytest.mark.unit
def test_homogeneity_sigma_cap_raises(p10, symr2):
    """Test QuadratureBudgetError when the sigma bound cannot be met within the sample cap."""
    import dataclasses

    from src.config import apply_config, config
    from src.integration import Budget, QuadratureBudgetError
    from src.polyrep import random_group_element
    from src.verify import check_homogeneity, make_battery

    phi = make_battery(symr2, 1, seed=5)[0]
    g = random_group_element(symr2, seed=3, style="frobenius")
    original = dataclasses.replace(config)
    try:
        apply_config(dataclasses.replace(config, HOMOGENEITY_SIGMA_BOUND=1e-12, HOMOGENEITY_MAX_SAMPLES=300))
        with pytest.raises(QuadratureBudgetError) as info:
            check_homogeneity(0, p10, 0.7, g, phi, Budget(samples=200, seed=5))
    finally:
        apply_config(original)
    assert info.value.partial.samples > 0


@pytest.mark.unit
def test_homogeneity_rejects_orbit_index(p10, symr2):
    """Test orbit index validation."""
    from src.algebra_core import GroupElement, ParameterError
    from src.integration import TestFunction
    from src.verify import check_homogeneity

    with pytest.raises(ParameterError):
        check_homogeneity(3, p10, 0.7, GroupElement.identity(symr2), TestFunction.gaussian(symr2))


@pytest.mark.integration
def test_equivariance_hm(p10, symr2):
    """Test h_m(g x) = Det(g)^{r m_1/n} pi_m(g) h_m(x) on random pairs."""
    from src.polyrep import random_group_element
    from src.verify import check_equivariance_hm

    words = [random_group_element(symr2, seed=[1, i]) for i in range(3)]
    points = np.random.default_rng(2).normal(size=(5, symr2.dim)) + symr2.unit_coords
    report = check_equivariance_hm(p10, words, points)
    assert report.passed
    assert report.details["pairs"] == 15


@pytest.mark.unit
def test_quasihomogeneity_on_line(line):
    """Test the log-polynomial scaling law of the Laurent coefficients of x_+^s at -1."""
    from src.integration import TestFunction
    from src.verify import check_quasihomogeneity

    report = check_quasihomogeneity([1, 0], (0,), TestFunction.gaussian(line), -1, scales=(0.8, 1.25))
    assert report.passed
    assert report.details["order"] == 1
    assert report.details["homogeneity_exponent"] == pytest.approx(0.0)


@pytest.mark.unit
def test_quasihomogeneity_bad_grid(line):
    """Test that a grid without a non-trivial scale is rejected."""
    from src.algebra_core import ParameterError
    from src.integration import TestFunction
    from src.verify import check_quasihomogeneity

    with pytest.raises(ParameterError):
        check_quasihomogeneity([1, 0], (0,), TestFunction.gaussian(line), -1, scales=(1.0,))


@pytest.mark.unit
def test_pole_order_on_line(line):
    """Test predicted and observed orders of sign(x)|x|^s at -2."""
    from src.integration import TestFunction
    from src.verify import check_pole_order

    f = TestFunction.gaussian(line, center=[0.4])
    report = check_pole_order([1, -1], (0,), f, -2)
    assert report.passed
    assert report.details["prediction"]["predicted_order"] == 1


@pytest.mark.slow
@pytest.mark.parametrize("family,rank,dim", [("symr", 2, None), ("hermc", 2, None), ("spin", None, 5)])
@pytest.mark.parametrize("m", [(0, 0), (1, 0)])
def test_pole_order_rank_two(family, rank, dim, m):
    """Test the predicted order at the first critical point of each rank-two family."""
    from src.algebra_core import make_algebra
    from src.integration import Budget, TestFunction
    from src.verify import check_pole_order
    from src.zeta import gamma_poles

    algebra = make_algebra(family, rank, dim)
    s0 = gamma_poles(m, algebra, (-3, 0))[0][0]
    report = check_pole_order([1, 0, 0], m, TestFunction.gaussian(algebra), s0, Budget(samples=160000, seed=21))
    assert report.details["prediction"]["predicted_order"] == 1
    assert report.passed


@pytest.mark.unit
def test_support_on_line(line):
    """Test that the residue of x_+^s at -1 sits at the origin and not at e."""
    from src.verify import probe_support
    from src.zeta import support_coefficients

    construction = support_coefficients(0, -1, line)
    report = probe_support(construction.coefficients, (0,), -1, line, 1, p=0, orbits=construction.orbits)
    assert report.passed
    assert report.details["orbits"] == [0]
    assert report.details["on_stratum"][0] > 10 * report.details["off_stratum"]


@pytest.mark.unit
def test_support_deviation_needs_every_orbit():
    """Test that one weak or unresolved orbit fails the support check."""
    from src.verify import _support_deviation

    assert _support_deviation([5.0], [0.01], 0.1) <= 1.0
    assert _support_deviation([5.0, 0.5], [0.01, 0.01], 0.1) > 1.0
    assert _support_deviation([5.0, 0.005], [0.01, 0.01], 0.1) == float("inf")


@pytest.mark.unit
def test_support_rejects_foreign_orbit(line):
    """Test ParameterError for an orbit outside 0..p."""
    from src.algebra_core import ParameterError
    from src.verify import probe_support

    with pytest.raises(ParameterError):
        probe_support([1, 0], (0,), -1, line, 1, p=0, orbits=[1])


@pytest.mark.slow
def test_support_half_integer_rank_two(symr2):
    """Test that A_1 at -3/2 is carried by the origin for the even sum on Sym(2, R)."""
    from src.integration import Budget
    from src.verify import probe_support
    from src.zeta import support_coefficients

    construction = support_coefficients(0, "-3/2", symr2)
    report = probe_support(
        construction.coefficients, (0, 0), "-3/2", symr2, construction.order,
        p=0, orbits=construction.orbits, budget=Budget(samples=160000, seed=9),
    )
    assert report.passed


@pytest.mark.integration
def test_functional_equation_wrong_psi_exponent_fails(line):
    """Test that Psi taken at a shifted point no longer spans the Fourier transform."""
    from src.verify import check_functional_equation_span, make_battery

    battery = make_battery(line, 6, seed=4, centred=True)
    report = check_functional_equation_span((0,), 0.5, battery, exponent_shift=-1.0)
    assert not report.passed
    assert report.details["exponent_shift"] == -1.0


@pytest.mark.integration
def test_dimension_drops_for_even_battery(line):
    """Test that even test functions make Phi_0 and Phi_1 proportional."""
    from src.polyrep import build_Pm
    from src.verify import dimension_probe, make_battery

    space = build_Pm((0,), line)
    full = dimension_probe(space, 0.7, make_battery(line, 4, seed=6))
    even = dimension_probe(space, 0.7, make_battery(line, 4, seed=6, degree=0, centred=True))
    assert full.details["rank"] == 2
    assert even.details["rank"] == 1
    assert not even.passed


@pytest.mark.integration
def test_equivariance_shifted_exponent_fails(p10, symr2):
    """Test that a dilation exposes a wrong Det exponent."""
    from src.algebra_core import GroupElement, Operator
    from src.verify import check_equivariance_hm

    g = GroupElement.from_operator(Operator(2.0 * np.eye(symr2.dim)), ("2e",))
    points = np.random.default_rng(2).normal(size=(5, symr2.dim)) + symr2.unit_coords
    assert check_equivariance_hm(p10, [g], points).passed
    assert not check_equivariance_hm(p10, [g], points, exponent_shift=0.1).passed


@pytest.mark.unit
def test_control_inverts_pass_flag():
    """Test that a control passes exactly when the perturbed check fails."""
    from src.verify import CheckReport, _control

    control = _control(CheckReport.from_deviation("funceq", 0.3, 0.01))
    assert control.name == "funceq_control"
    assert control.passed
    assert control.details["perturbed"]["passed"] is False
    assert not _control(CheckReport.from_deviation("funceq", 0.001, 0.01)).passed


@pytest.mark.slow
def test_chart_recursion(symr2):
    """Test the chart factorization of Phi_1 and a wrong u-exponent as negative control."""
    from src.integration import Budget
    from src.verify import check_chart_recursion

    budget = Budget(samples=200000, seed=12)
    assert check_chart_recursion(symr2, 1, (0, 0), 1.0, budget).passed
    assert not check_chart_recursion(symr2, 1, (0, 0), 1.0, budget, exponent_shift=1.0).passed


@pytest.mark.unit
def test_chart_recursion_needs_rank_two(line):
    """Test ParameterError on a rank-one algebra."""
    from src.algebra_core import ParameterError
    from src.verify import check_chart_recursion

    with pytest.raises(ParameterError):
        check_chart_recursion(line, 0, (0,), 1.0)


@pytest.mark.unit
def test_spherical_gate():
    """Test the gate on even and odd gaps."""
    from src.polyrep import NonSphericalError
    from src.verify import spherical_gate

    assert spherical_gate((0, 2)).partition.parts == (1, 0)
    with pytest.raises(NonSphericalError) as info:
        spherical_gate((0, 1))
    assert info.value.weight == (0, 1)


@pytest.mark.unit
def test_write_reports(tmp_path):
    """Test one sorted-key JSON file per check and the CSV summary."""
    from src.verify import CheckReport, SuiteSettings, write_reports

    reports = [CheckReport.from_deviation("chart", 0.1, 0.2), CheckReport.from_deviation("funceq", 0.3, 0.01)]
    paths = write_reports(reports, tmp_path / "out", SuiteSettings(samples=100))
    assert [p.name for p in paths] == ["00_chart.json", "01_funceq.json", "summary.csv"]

    text = paths[0].read_text()
    document = json.loads(text)
    assert document["schema"] == "jordan-zeta/1"
    assert document["settings"]["samples"] == 100
    assert text == json.dumps(document, sort_keys=True, indent=2)

    with paths[-1].open() as handle:
        rows = list(csv.DictReader(handle))
    assert [row["passed"] for row in rows] == ["True", "False"]


@pytest.mark.unit
def test_write_reports_appends_summary(tmp_path):
    """Test that a second run appends rows under a single header."""
    from src.verify import CheckReport, write_reports

    reports = [CheckReport.from_deviation("chart", 0.1, 0.2), CheckReport.from_deviation("funceq", 0.3, 0.01)]
    write_reports(reports, tmp_path)
    summary = write_reports(reports, tmp_path)[-1]

    lines = summary.read_text().splitlines()
    assert len(lines) == 5
    assert sum(line.startswith("index,") for line in lines) == 1
    with summary.open() as handle:
        assert [row["name"] for row in csv.DictReader(handle)] == ["chart", "funceq", "chart", "funceq"]


@pytest.mark.integration
def test_run_suite_equivariance():
    """Test the runner on the cheapest check."""
    from src.verify import SuiteSettings, run_suite

    reports = run_suite(["equivariance"], SuiteSettings(m=(1, 0), samples=100))
    assert [r.name for r in reports] == ["equivariance", "equivariance_control"]
    assert all(r.passed for r in reports)
    assert reports[1].details["perturbed"]["passed"] is False


@pytest.mark.unit
def test_run_suite_unknown_name():
    """Test that unknown check names are rejected."""
    from src.algebra_core import ParameterError
    from src.verify import run_suite

    with pytest.raises(ParameterError):
        run_suite(["bogus"])
