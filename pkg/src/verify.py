"""Numerical verification harnesses and the suite runner.

Each check returns a CheckReport whose `passed` flag is exactly
`max_relative_deviation <= tolerance`. Monte-Carlo checks take their
tolerance from the propagated standard errors (SIGMA_FACTOR sigma).

Every suite also reports `<check>_control` rows: the same check run on a
deliberately wrong input (shifted exponent, dilated group element, even
battery). A control passes exactly when the perturbed check fails.
"""

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import factorial
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn
from scipy.stats import multivariate_t

from src.config import config
from src.algebra_core import (
    AlgebraDescriptor,
    Element,
    GroupElement,
    JordanError,
    Operator,
    ParameterError,
    det_batch,
    eigenvalues_batch,
    make_algebra,
)
from src.decompositions import (
    chart_inverse_batch,
    chart_tables,
    orbit_indices_batch,
    orbit_point,
    subalgebra_embedding,
)
from src.integration import METHOD_MONTE_CARLO, Budget, QuadratureBudgetError, TestFunction, ZetaValue
from src.polynomials import Polynomial
from src.polyrep import (
    NonSphericalError,
    Partition,
    PolySpace,
    SphericalDecomposition,
    build_Pm,
    delta_power_batch,
    h_m_batch,
    is_spherical,
    pi_m_matrix,
    random_group_element,
)
from src.zeta import (
    IndeterminateOrderError,
    LaurentExpansion,
    is_resolved,
    laurent,
    pole_order_predict,
    psi_eval,
    resolved_laurent,
    support_rank_predict,
    vector_zeta_orbits,
    zeta_eval,
    zeta_eval_direct,
)

logger = logging.getLogger(__name__)


class BatteryError(JordanError):
    """Raised when a test-function battery is too small or ill-conditioned."""

    def __init__(self, message: str, size: int, condition_number: Optional[float] = None) -> None:
        super().__init__(message)
        self.size = size
        self.condition_number = condition_number


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (Fraction, Partition)):
        return str(value)
    return value


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one verification check."""

    name: str
    passed: bool
    max_relative_deviation: float
    tolerance: float
    budget_used: int = 0
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_deviation(
        cls,
        name: str,
        deviation: float,
        tolerance: float,
        budget_used: int = 0,
        details: Optional[Dict[str, Any]] = None,
    ) -> "CheckReport":
        deviation = float(deviation)
        tolerance = float(tolerance)
        return cls(
            name=name,
            passed=bool(deviation <= tolerance),
            max_relative_deviation=deviation,
            tolerance=tolerance,
            budget_used=int(budget_used),
            details=details or {},
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "max_relative_deviation": self.max_relative_deviation,
            "tolerance": self.tolerance,
            "budget_used": self.budget_used,
            "details": _jsonable(self.details),
        }


def _relative(difference: float, scale: float) -> float:
    return float(difference / max(scale, np.finfo(float).tiny))


# ---------------------------------------------------------------------------
# Test-function batteries
# ---------------------------------------------------------------------------

def make_battery(
    algebra: AlgebraDescriptor,
    size: int,
    seed: Optional[int] = None,
    degree: int = 1,
    centred: bool = False,
) -> List[TestFunction]:
    """
    Random polynomial-times-Gaussian test functions.

    Precisions are random positive definite matrices, polynomials are
    1 + random terms up to `degree`, centers are N(0, 0.25) unless `centred`.
    """
    if size < 1:
        raise ParameterError(f"Battery size must be positive, got {size}")
    rng = np.random.default_rng([config.DEFAULT_SEED if seed is None else seed, 1])
    n = algebra.dim
    battery = []
    for _ in range(size):
        a = rng.normal(scale=0.3, size=(n, n))
        precision = a @ a.T + 0.7 * np.eye(n)
        poly = Polynomial.constant(n, 1.0)
        if degree >= 1:
            poly = poly + Polynomial.linear(rng.normal(scale=0.5, size=n))
        if degree >= 2:
            q = Polynomial.linear(rng.normal(scale=0.3, size=n))
            poly = poly + q * q
        center = np.zeros(n) if centred else rng.normal(scale=0.5, size=n)
        battery.append(TestFunction(algebra=algebra, poly=poly, center=center, precision=precision))
    return battery


def classical_fourier_coefficients(s: complex) -> np.ndarray:
    """
    Coefficients v with int_0^inf x^{s-1} F phi(x) dx = v_0 Psi_0(phi, -s) + v_1 Psi_1(phi, -s)
    on the real line: Gamma(s) (e^{-i pi s / 2}, e^{i pi s / 2}).
    """
    s = complex(s)
    return complex(gamma_fn(s)) * np.array([np.exp(-0.5j * np.pi * s), np.exp(0.5j * np.pi * s)])


# ---------------------------------------------------------------------------
# Homogeneity and quasi-homogeneity
# ---------------------------------------------------------------------------

def _homogeneity_residual(
    j: int,
    space: PolySpace,
    s: complex,
    g: GroupElement,
    phi: TestFunction,
    budget: Budget,
    exponent_shift: float,
) -> Tuple[float, float, int]:
    """Relative deviation, relative sigma and samples of one homogeneity comparison."""
    algebra = space.algebra
    base = vector_zeta_orbits(space, phi, s, budget)
    moved = vector_zeta_orbits(space, phi.pullback(g), s, budget)
    exponent = algebra.rank * complex(s) / algebra.dim + 1.0 + exponent_shift
    factor = complex(g.det_v) ** exponent
    pi = pi_m_matrix(g, space)

    predicted = factor * (pi @ base.values[j])
    predicted_err = abs(factor) * np.sqrt((np.abs(pi) ** 2) @ (base.errors[j] ** 2))
    observed = moved.values[j]
    scale = float(np.linalg.norm(observed))
    deviation = _relative(float(np.linalg.norm(observed - predicted)), scale)
    sigma = _relative(float(np.sqrt(np.sum(moved.errors[j] ** 2) + np.sum(predicted_err ** 2))), scale)
    return deviation, sigma, base.samples + moved.samples


def check_homogeneity(
    j: int,
    space: PolySpace,
    s: complex,
    g: GroupElement,
    phi: TestFunction,
    budget: Optional[Budget] = None,
    exponent_shift: float = 0.0,
) -> CheckReport:
    """
    Compare T_j(phi_g, s) with Det(g)^{rs/n + 1} pi_m(g) T_j(phi, s).

    The sample budget is doubled until the relative sigma of the comparison is
    at most HOMOGENEITY_SIGMA_BOUND, so a pass always rests on a tolerance of
    at most SIGMA_FACTOR times that bound.

    Args:
        exponent_shift: added to the Det exponent (negative control)

    Raises:
        PoleError: If s is critical for pi_m
        QuadratureBudgetError: If the bound is not met within HOMOGENEITY_MAX_SAMPLES
    """
    algebra = space.algebra
    if not 0 <= j <= algebra.rank:
        raise ParameterError(f"Orbit index {j} outside 0..{algebra.rank}")
    budget = Budget() if budget is None else budget
    used = 0
    while True:
        deviation, sigma, samples = _homogeneity_residual(j, space, s, g, phi, budget, exponent_shift)
        used += samples
        if sigma <= config.HOMOGENEITY_SIGMA_BOUND:
            break
        if budget.samples * 2 > config.HOMOGENEITY_MAX_SAMPLES:
            raise QuadratureBudgetError(
                f"Homogeneity j={j}: relative sigma {sigma:.3e} above {config.HOMOGENEITY_SIGMA_BOUND:.1e} "
                f"after {budget.samples} samples",
                ZetaValue(value=complex(deviation), abs_error_estimate=sigma, method=METHOD_MONTE_CARLO, samples=used),
            )
        budget = budget.with_samples(budget.samples * 2)
        logger.debug(f"Homogeneity j={j}: sigma {sigma:.3e}, doubling to {budget.samples} samples")
    tolerance = config.SIGMA_FACTOR * sigma + config.RELATIVE_NOISE_FLOOR

    logger.debug(f"Homogeneity j={j}: deviation {deviation:.3e}, sigma {sigma:.3e}")
    return CheckReport.from_deviation(
        "homogeneity",
        deviation,
        tolerance,
        budget_used=used,
        details={
            "j": j,
            "partition": str(space.partition),
            "s": complex(s),
            "det": g.det_v,
            "word": list(g.factored_form),
            "exponent_shift": exponent_shift,
            "relative_sigma": sigma,
            "samples_per_integral": budget.samples,
        },
    )


def _scaling_prediction(base: LaurentExpansion, factor: float, exponent: float, rank: int) -> Dict[int, complex]:
    """C_p(phi_lambda) = lambda^e0 sum_i (r log lambda)^i / i! C_{p-i}(phi)."""
    log_term = rank * np.log(factor)
    powers = sorted(base.coefficients)
    prediction = {}
    for p in powers:
        total = 0j
        for i in range(p - powers[0] + 1):
            total += log_term ** i / factorial(i) * base.coefficients[p - i]
        prediction[p] = factor ** exponent * total
    return prediction


def check_quasihomogeneity(
    coefficients: Sequence[complex],
    m: Union[Partition, Sequence[int], str],
    f: TestFunction,
    s0: Union[float, str, Fraction],
    scales: Sequence[float] = (0.8, 1.25, 1.5),
    budget: Optional[Budget] = None,
    radius: Optional[float] = None,
    n_points: Optional[int] = None,
) -> CheckReport:
    """
    Scaling law of the Laurent coefficients of A(f, s) = sum_j c_j Phi_j^m(f, s) at s0.

    Under f -> f(x / lambda) the coefficient of (s - s0)^p becomes lambda^{e0}
    times a polynomial of degree alpha + p in log lambda, e0 = n + r s0 + |m|.
    The leading coefficient (p = -alpha) is exactly homogeneous.

    Raises:
        ParameterError: If the scale grid has no usable point
    """
    algebra = f.algebra
    grid = sorted({float(x) for x in scales})
    if any(x <= 0 for x in grid):
        raise ParameterError(f"Scales must be positive, got {grid}")
    if not [x for x in grid if x != 1.0]:
        raise ParameterError("Scale grid needs at least one point other than 1")

    partition = Partition.parse(m)
    base = laurent(coefficients, partition, f, s0, radius, n_points, budget)
    exponent = algebra.dim + algebra.rank * base.s0.real + partition.size
    kept = [p for p in sorted(base.coefficients) if p >= -base.order]

    worst, worst_tol, used = 0.0, 0.0, base.samples
    residuals: Dict[str, List[float]] = {}
    for factor in grid:
        scaled = laurent(coefficients, partition, f.scaled(factor), s0, base.radius, base.n_points, budget)
        used += scaled.samples
        prediction = _scaling_prediction(base, factor, exponent, algebra.rank)
        observed = np.array([scaled.coefficients[p] for p in kept])
        predicted = np.array([prediction[p] for p in kept])
        scale = float(np.linalg.norm(observed))
        deviation = _relative(float(np.linalg.norm(observed - predicted)), scale)
        # error of the prediction: each C_{p-i} enters with weight lambda^e0 |r log lambda|^i / i!
        log_term = abs(algebra.rank * np.log(factor))
        pred_var = 0.0
        for p in kept:
            for i in range(p - min(base.coefficients) + 1):
                pred_var += (factor ** exponent * log_term ** i / factorial(i) * base.errors[p - i]) ** 2
        sigma = np.sqrt(sum(scaled.errors[p] ** 2 for p in kept) + pred_var)
        tolerance = config.SIGMA_FACTOR * _relative(float(sigma), scale) + config.CHECK_RELATIVE_FLOOR
        residuals[str(factor)] = [float(abs(o - q)) for o, q in zip(observed, predicted)]
        if deviation - tolerance > worst - worst_tol:
            worst, worst_tol = deviation, tolerance

    return CheckReport.from_deviation(
        "quasihomogeneity",
        worst,
        worst_tol,
        budget_used=used,
        details={
            "s0": str(s0),
            "order": base.order,
            "homogeneity_exponent": exponent,
            "powers": kept,
            "scales": grid,
            "residuals": residuals,
        },
    )


# ---------------------------------------------------------------------------
# Chart recursion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChartFactors:
    """phi(x) = phi_1(u) phi_2(z) phi_3(v) on the chart domain."""

    u_center: float = 0.5
    u_width: float = 1.0
    z_width: float = 0.7
    v_center: float = 0.3
    v_width: float = 1.0


def _chart_lhs(
    algebra: AlgebraDescriptor,
    j: int,
    parts: Sequence[int],
    s: float,
    factors: ChartFactors,
    phi3: TestFunction,
    iota: np.ndarray,
    budget: Budget,
) -> Tuple[float, float, int]:
    """int_{Omega_j} |det x|^s Delta_m(x) phi(x) dx with a Student-t proposal in x."""
    tables = chart_tables(algebra)
    proposal = multivariate_t(loc=np.zeros(algebra.dim), shape=1.5 ** 2 * np.eye(algebra.dim), df=4)
    total, total_sq, count = 0.0, 0.0, 0
    for index, start in enumerate(range(0, budget.samples, budget.chunk_size)):
        size = min(budget.chunk_size, budget.samples - start)
        rng = np.random.default_rng([budget.seed, index])
        x = np.atleast_2d(proposal.rvs(size=size, random_state=rng))
        u, z, v = chart_inverse_batch(tables, x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            phi = (
                np.exp(-0.5 * ((u - factors.u_center) / factors.u_width) ** 2)
                * np.exp(-0.5 * np.sum(z ** 2, axis=1) / factors.z_width ** 2)
                * phi3.evaluate(v @ iota)
            )
            phi = np.where(np.isfinite(phi), phi, 0.0)
            orbit = orbit_indices_batch(eigenvalues_batch(algebra, x))
            integrand = np.abs(det_batch(algebra, x)) ** s * delta_power_batch(algebra, parts, x) * phi
            weights = np.where((orbit == j) & (u != 0), integrand, 0.0) / proposal.pdf(x)
        weights = np.real(weights)
        total += float(np.sum(weights))
        total_sq += float(np.sum(weights ** 2))
        count += size
    mean = total / count
    stderr = float(np.sqrt(max(total_sq / count - mean ** 2, 0.0) / count))
    return mean, stderr, count


def _half_line(exponent: float, center: float, width: float, sign: int) -> float:
    lower, upper = (0.0, np.inf) if sign > 0 else (-np.inf, 0.0)
    value, _ = quad(
        lambda u: abs(u) ** exponent * np.exp(-0.5 * ((u - center) / width) ** 2),
        lower,
        upper,
        limit=config.QUAD_LIMIT,
    )
    return value


def check_chart_recursion(
    algebra: AlgebraDescriptor,
    j: int,
    m: Union[Partition, Sequence[int], str],
    s: float,
    budget: Optional[Budget] = None,
    factors: Optional[ChartFactors] = None,
    exponent_shift: float = 0.0,
) -> CheckReport:
    """
    Restriction of Phi_j^m to the chart x = exp(2 z box e_1)(u e_1 + v):

        int |det|^s Delta_m phi = Z (I_+ Phi'_j(phi_3, s) + (-1)^{m_1} I_- Phi'_{j-1}(phi_3, s))

    with I_+- = int_{+-u > 0} |u|^a phi_1(u) du, a = s + d(r - 1) + m_1,
    Z = int phi_2 and Phi' the zeta integral of V' with partition (m_2, ..., m_r).
    The Phi'_j term is absent for j = r and the Phi'_{j-1} term for j = 0.
    """
    r = algebra.rank
    if r < 2:
        raise ParameterError("Chart recursion needs rank at least 2")
    if not 0 <= j <= r:
        raise ParameterError(f"Orbit index {j} outside 0..{r}")
    s = float(np.real(s))
    if s < 0:
        raise ParameterError(f"Chart recursion is checked in the convergent range, got s = {s}")
    budget = Budget() if budget is None else budget
    factors = ChartFactors() if factors is None else factors
    partition = Partition.parse(m)
    if partition.rank != r:
        raise ParameterError(f"Partition {partition} does not have {r} parts")
    top = partition.parts[0]

    sub, iota = subalgebra_embedding(algebra)
    phi3 = TestFunction.gaussian(sub, center=factors.v_center * sub.unit_coords, width=factors.v_width)
    lhs, lhs_err, used = _chart_lhs(algebra, j, partition.parts, s, factors, phi3, iota, budget)

    w_dim = algebra.degree * (r - 1)
    exponent = s + w_dim + top + exponent_shift
    z_mass = (2 * np.pi) ** (w_dim / 2) * factors.z_width ** w_dim
    sub_parts = partition.shifted
    rhs, rhs_var = 0j, 0.0
    terms = {}
    if j <= r - 1:
        value = zeta_eval_direct(j, sub_parts, phi3, s, budget)
        plus = _half_line(exponent, factors.u_center, factors.u_width, +1)
        rhs += z_mass * plus * value.value
        rhs_var += (z_mass * plus * value.abs_error_estimate) ** 2
        used += value.samples
        terms["plus"] = {"half_line": plus, "sub_zeta": value.to_json()}
    if j >= 1:
        value = zeta_eval_direct(j - 1, sub_parts, phi3, s, budget)
        minus = _half_line(exponent, factors.u_center, factors.u_width, -1)
        rhs += (-1) ** top * z_mass * minus * value.value
        rhs_var += (z_mass * minus * value.abs_error_estimate) ** 2
        used += value.samples
        terms["minus"] = {"half_line": minus, "sub_zeta": value.to_json()}

    scale = abs(lhs)
    deviation = _relative(abs(lhs - rhs), scale)
    tolerance = config.SIGMA_FACTOR * _relative(float(np.sqrt(lhs_err ** 2 + rhs_var)), scale)
    logger.debug(f"Chart recursion j={j}: lhs {lhs:.6g} +- {lhs_err:.2g}, rhs {rhs:.6g}")
    return CheckReport.from_deviation(
        "chart",
        deviation,
        tolerance,
        budget_used=used,
        details={
            "j": j,
            "partition": str(partition),
            "s": s,
            "exponent": exponent,
            "exponent_shift": exponent_shift,
            "lhs": lhs,
            "lhs_error": lhs_err,
            "rhs": rhs,
            "terms": terms,
        },
    )


# ---------------------------------------------------------------------------
# Functional equation and dimension
# ---------------------------------------------------------------------------

def _least_squares(matrix: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, float]:
    solution, *_ = np.linalg.lstsq(matrix, target, rcond=None)
    residual = _relative(float(np.linalg.norm(matrix @ solution - target)), float(np.linalg.norm(target)))
    return solution, residual


def check_functional_equation_span(
    m: Union[Partition, Sequence[int], str],
    s: complex,
    battery: Sequence[TestFunction],
    budget: Optional[Budget] = None,
    exponent_shift: float = 0.0,
) -> CheckReport:
    """
    Fit Phi_j^m(F phi, s - n/r) = sum_k v_jk Psi_k^{-m*}(phi, -s) over a battery.

    With exponent_shift the Psi_k are evaluated at s + exponent_shift in
    place of s (negative control).

    Passes when, for every j, the relative residual and the disagreement of
    the coefficients fitted on the two halves of the battery stay below
    SPAN_TOLERANCE.

    Raises:
        BatteryError: If the battery is too small or the Psi matrix is ill-conditioned
    """
    if not battery:
        raise BatteryError("Empty battery", 0)
    algebra = battery[0].algebra
    r = algebra.rank
    size = len(battery)
    if size < 3 * (r + 1):
        raise BatteryError(f"Battery of {size} functions is below 3 (r + 1) = {3 * (r + 1)}", size)
    partition = Partition.parse(m)
    shifted_s = complex(s) - algebra.dim / algebra.rank

    psi = np.zeros((size, r + 1), dtype=complex)
    lhs = np.zeros((size, r + 1), dtype=complex)
    used = 0
    for i, phi in enumerate(battery):
        transformed = phi.fourier()
        for k in range(r + 1):
            value = psi_eval(k, partition, phi, complex(s) + exponent_shift, budget)
            psi[i, k] = value.value
            used += value.samples
        for j in range(r + 1):
            value = zeta_eval(j, partition, transformed, shifted_s, budget)
            lhs[i, j] = value.value
            used += value.samples

    condition = float(np.linalg.cond(psi))
    if not np.isfinite(condition) or condition > config.CONDITION_LIMIT:
        raise BatteryError(f"Psi matrix is ill-conditioned (cond {condition:.3e})", size, condition)

    half = size // 2
    fitted, residuals, splits = [], [], []
    for j in range(r + 1):
        v, residual = _least_squares(psi, lhs[:, j])
        v_a, _ = _least_squares(psi[:half], lhs[:half, j])
        v_b, _ = _least_squares(psi[half:], lhs[half:, j])
        fitted.append(v)
        residuals.append(residual)
        splits.append(_relative(float(np.linalg.norm(v_a - v_b)), float(np.linalg.norm(v))))
    deviation = max(max(residuals), max(splits))
    return CheckReport.from_deviation(
        "funceq",
        deviation,
        config.SPAN_TOLERANCE,
        budget_used=used,
        details={
            "partition": str(partition),
            "s": complex(s),
            "battery_size": size,
            "condition_number": condition,
            "exponent_shift": exponent_shift,
            "coefficients": np.array(fitted),
            "residuals": residuals,
            "split_half": splits,
        },
    )


def dimension_probe(
    space: PolySpace,
    s: complex,
    battery: Sequence[TestFunction],
    budget: Optional[Budget] = None,
    j_range: Optional[Sequence[int]] = None,
) -> CheckReport:
    """
    Numerical rank of the family {T_j^m(., s)} over a battery.

    Rows are the orbits in `j_range`, columns run over (battery, component).
    Singular values count when above max(DIMENSION_RANK_TOL sigma_max,
    SIGMA_FACTOR * noise); the expected rank is len(j_range) (r + 1 by default).

    Raises:
        BatteryError: If the battery has at most r + 1 functions
    """
    algebra = space.algebra
    r = algebra.rank
    j_range = list(range(r + 1)) if j_range is None else [int(j) for j in j_range]
    if len(battery) <= r + 1:
        raise BatteryError(f"Battery of {len(battery)} functions must exceed r + 1 = {r + 1}", len(battery))
    blocks, noise, used = [], [], 0
    for phi in battery:
        values = vector_zeta_orbits(space, phi, s, budget)
        blocks.append(values.values[j_range])
        noise.append(values.errors[j_range])
        used += values.samples
    matrix = np.concatenate(blocks, axis=1)
    singular = np.linalg.svd(matrix, compute_uv=False)
    threshold = max(config.DIMENSION_RANK_TOL * singular[0], config.SIGMA_FACTOR * float(np.linalg.norm(np.concatenate(noise, axis=1))))
    rank = int(np.sum(singular > threshold))
    expected = len(j_range)
    return CheckReport.from_deviation(
        "dimension",
        abs(rank - expected),
        0.0,
        budget_used=used,
        details={
            "partition": str(space.partition),
            "s": complex(s),
            "rank": rank,
            "expected": expected,
            "singular_values": singular,
            "threshold": threshold,
            "scope": "linear independence only; the upper bound is not checked",
        },
    )


def check_equivariance_hm(
    space: PolySpace,
    g_set: Sequence[GroupElement],
    x_set: Sequence[Union[Element, np.ndarray]],
    exponent_shift: float = 0.0,
) -> CheckReport:
    """max over (g, x) of |h(g x) - Det(g)^{r m_1 / n} pi_m(g) h(x)| / |h(g x)|; exponent_shift perturbs the Det power."""
    algebra = space.algebra
    points = np.array([x.coords if isinstance(x, Element) else np.asarray(x, dtype=float) for x in x_set])
    base = h_m_batch(space, points)
    exponent = algebra.rank * space.partition.parts[0] / algebra.dim + exponent_shift
    worst = 0.0
    for g in g_set:
        moved = h_m_batch(space, g.act(points))
        predicted = (complex(g.det_v) ** exponent).real * (base @ pi_m_matrix(g, space).T)
        norms = np.linalg.norm(moved, axis=1)
        errors = np.linalg.norm(moved - predicted, axis=1)
        worst = max(worst, float(np.max(errors / np.maximum(norms, np.finfo(float).tiny))))
    return CheckReport.from_deviation(
        "equivariance",
        worst,
        config.EQUIVARIANCE_TOLERANCE,
        details={"partition": str(space.partition), "pairs": len(g_set) * len(points), "exponent_shift": exponent_shift},
    )


# ---------------------------------------------------------------------------
# Poles and supports
# ---------------------------------------------------------------------------

def check_pole_order(
    coefficients: Sequence[complex],
    m: Union[Partition, Sequence[int], str],
    f: TestFunction,
    s0: Union[float, str, Fraction],
    budget: Optional[Budget] = None,
    radius: Optional[float] = None,
    max_samples: Optional[int] = None,
) -> CheckReport:
    """
    Predicted pole order against the order read off the Laurent coefficients.

    The budget is doubled until every polar coefficient is resolved (see
    zeta.resolved_laurent); poles of rank-two algebras at integer points
    typically need around a million samples.
    """
    algebra = f.algebra
    report = pole_order_predict(coefficients, m, s0, algebra)
    expansion = resolved_laurent(coefficients, m, f, s0, radius=radius, budget=budget, max_samples=max_samples)
    return CheckReport.from_deviation(
        "pole_order",
        abs(expansion.order - report.predicted_order),
        0.0,
        budget_used=expansion.samples,
        details={
            "prediction": report.to_json(),
            "laurent": expansion.to_json(),
            "resolved": is_resolved(expansion),
        },
    )


def _support_deviation(on: Sequence[float], floors: Sequence[float], off_bound: float) -> float:
    """
    SUPPORT_PROBE_RATIO over the weakest on-stratum ratio, infinite when an
    on-stratum coefficient is not above its noise floor.
    """
    worst = 0.0
    for value, floor in zip(on, floors):
        if value <= floor:
            return float("inf")
        ratio = value / max(off_bound, np.finfo(float).tiny)
        worst = max(worst, config.SUPPORT_PROBE_RATIO / ratio)
    return worst


def probe_support(
    coefficients: Sequence[complex],
    m: Union[Partition, Sequence[int], str],
    s0: Union[float, str, Fraction],
    algebra: AlgebraDescriptor,
    h: int,
    p: Optional[int] = None,
    orbits: Optional[Sequence[int]] = None,
    budget: Optional[Budget] = None,
    width: Optional[float] = None,
) -> CheckReport:
    """
    Compare A_h on narrow Gaussians at the orbit points o_{p,q} with A_h at e.

    The rank p defaults to the predicted support rank and `orbits` (the q
    values claimed inside the support) to every q in 0..p. Passes when, for
    each claimed q, A_h is above its noise floor and SUPPORT_PROBE_RATIO times
    larger than the bound on A_h at e (its modulus or noise floor).
    """
    p = support_rank_predict(h, s0, algebra) if p is None else int(p)
    orbits = list(range(p + 1)) if orbits is None else [int(q) for q in orbits]
    if not orbits or any(not 0 <= q <= p for q in orbits):
        raise ParameterError(f"Orbits {orbits} are not orbits of rank {p}")
    width = config.SUPPORT_PROBE_WIDTH * float(np.linalg.norm(algebra.unit_coords)) if width is None else width

    def response(center: np.ndarray) -> Tuple[float, float, int]:
        f = TestFunction.gaussian(algebra, center=center, width=width)
        try:
            expansion = resolved_laurent(coefficients, m, f, s0, budget=budget)
        except IndeterminateOrderError as e:
            return abs(e.coefficient), e.noise_floor, 0
        return abs(expansion.coefficients.get(-h, 0j)), expansion.noise_floor.get(-h, 0.0), expansion.samples

    on_values, on_floors, used = [], [], 0
    for q in orbits:
        value, floor, samples = response(orbit_point(algebra, p, q).coords)
        on_values.append(value)
        on_floors.append(floor)
        used += samples
    off, off_floor, samples = response(algebra.unit_coords)
    used += samples
    off_bound = max(off, off_floor)
    return CheckReport.from_deviation(
        "support",
        _support_deviation(on_values, on_floors, off_bound),
        1.0,
        budget_used=used,
        details={
            "h": h,
            "rank": p,
            "orbits": orbits,
            "on_stratum": on_values,
            "on_stratum_floor": on_floors,
            "off_stratum": off,
            "off_stratum_floor": off_floor,
        },
    )


def spherical_gate(weight: Sequence[int], algebra: Optional[AlgebraDescriptor] = None) -> SphericalDecomposition:
    """
    Raises:
        NonSphericalError: If some gap of the weight is odd
    """
    decomposition = is_spherical(weight, algebra)
    if not decomposition:
        raise NonSphericalError(f"Weight {tuple(weight)} is not spherical (odd gap)", tuple(int(w) for w in weight))
    return decomposition


# ---------------------------------------------------------------------------
# Suite runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteSettings:
    """Parameters shared by the checks of one suite run."""

    family: str = "symr"
    rank: int = 2
    dim: Optional[int] = None
    m: Tuple[int, ...] = ()
    s: float = 0.7
    seed: int = field(default_factory=lambda: config.DEFAULT_SEED)
    samples: int = field(default_factory=lambda: config.DEFAULT_SAMPLES)
    threads: int = field(default_factory=lambda: config.DEFAULT_THREADS)
    battery_size: int = 12
    group_words: int = 3

    def algebra(self) -> AlgebraDescriptor:
        return make_algebra(self.family, self.rank, self.dim)

    def partition(self, algebra: AlgebraDescriptor) -> Partition:
        return Partition(tuple(self.m)) if self.m else Partition.zero(algebra.rank)

    def budget(self, seed: int) -> Budget:
        return Budget(samples=self.samples, seed=seed, threads=self.threads)

    def to_json(self) -> dict:
        return _jsonable(asdict(self))


def _control(report: CheckReport) -> CheckReport:
    """Wrap a check run on perturbed input: the control passes exactly when that check fails."""
    return CheckReport(
        name=f"{report.name}_control",
        passed=not report.passed,
        max_relative_deviation=report.max_relative_deviation,
        tolerance=report.tolerance,
        budget_used=report.budget_used,
        details={"perturbed": report.to_json()},
    )


def _dilation(algebra: AlgebraDescriptor, factor: float) -> GroupElement:
    return GroupElement.from_operator(Operator(factor * np.eye(algebra.dim)), (f"{factor:g}e",))


def _suite_homogeneity(settings: SuiteSettings, seed: int) -> List[CheckReport]:
    algebra = settings.algebra()
    space = build_Pm(settings.partition(algebra), algebra, seed=seed)
    phi = make_battery(algebra, 1, seed=seed, degree=0)[0]
    reports = []
    for word in range(settings.group_words):
        g = random_group_element(algebra, seed=[seed, word])
        for j in range(algebra.rank + 1):
            reports.append(check_homogeneity(j, space, settings.s, g, phi, settings.budget(seed)))
    g = _dilation(algebra, config.CONTROL_DILATION)
    shifted = check_homogeneity(0, space, settings.s, g, phi, settings.budget(seed), config.CONTROL_EXPONENT_SHIFT)
    reports.append(_control(shifted))
    return reports


def _suite_chart(settings: SuiteSettings, seed: int) -> List[CheckReport]:
    algebra = settings.algebra()
    if algebra.rank < 2:
        logger.info("Skipping chart recursion for a rank-one algebra")
        return []
    s = max(settings.s, 1.0)
    m = settings.partition(algebra)
    reports = [check_chart_recursion(algebra, j, m, s, settings.budget(seed)) for j in range(algebra.rank + 1)]
    shifted = check_chart_recursion(algebra, 0, m, s, settings.budget(seed), exponent_shift=config.CONTROL_CHART_SHIFT)
    reports.append(_control(shifted))
    return reports


def _suite_funceq(settings: SuiteSettings, seed: int) -> List[CheckReport]:
    algebra = settings.algebra()
    size = max(settings.battery_size, 3 * (algebra.rank + 1))
    battery = make_battery(algebra, size, seed=seed, centred=True)
    m = settings.partition(algebra)
    return [
        check_functional_equation_span(m, settings.s, battery, settings.budget(seed)),
        _control(
            check_functional_equation_span(
                m, settings.s, battery, settings.budget(seed), exponent_shift=config.CONTROL_PSI_SHIFT
            )
        ),
    ]


def _suite_dimension(settings: SuiteSettings, seed: int) -> List[CheckReport]:
    algebra = settings.algebra()
    space = build_Pm(settings.partition(algebra), algebra, seed=seed)
    size = max(settings.battery_size, algebra.rank + 2)
    battery = make_battery(algebra, size, seed=seed)
    # Even test functions make T_j and T_{r-j} proportional
    even = make_battery(algebra, size, seed=seed, degree=0, centred=True)
    return [
        dimension_probe(space, settings.s, battery, settings.budget(seed)),
        _control(dimension_probe(space, settings.s, even, settings.budget(seed))),
    ]


def _suite_equivariance(settings: SuiteSettings, seed: int) -> List[CheckReport]:
    algebra = settings.algebra()
    space = build_Pm(settings.partition(algebra), algebra, seed=seed)
    rng = np.random.default_rng([seed, 2])
    points = rng.normal(size=(10, algebra.dim)) + algebra.unit_coords
    words = [random_group_element(algebra, seed=[seed, 3, i]) for i in range(5)]
    g = _dilation(algebra, config.CONTROL_DILATION)
    return [
        check_equivariance_hm(space, words, points),
        _control(check_equivariance_hm(space, [g], points, exponent_shift=config.CONTROL_EXPONENT_SHIFT)),
    ]


_SUITES = {
    "homogeneity": _suite_homogeneity,
    "chart": _suite_chart,
    "funceq": _suite_funceq,
    "dimension": _suite_dimension,
    "equivariance": _suite_equivariance,
}


def run_suite(names: Sequence[str], settings: Optional[SuiteSettings] = None) -> List[CheckReport]:
    """
    Run the named checks ("all" for every check) concurrently.

    Check i uses seed settings.seed + i, so results do not depend on scheduling.
    """
    settings = SuiteSettings() if settings is None else settings
    selected = list(config.VERIFY_SUITES) if "all" in names else list(names)
    unknown = [name for name in selected if name not in _SUITES]
    if unknown:
        raise ParameterError(f"Unknown check(s) {unknown}; expected {list(config.VERIFY_SUITES)} or 'all'")
    logger.info(f"Running checks {selected} on {settings.family} r={settings.rank}")

    def run(item: Tuple[int, str]) -> List[CheckReport]:
        index, name = item
        return _SUITES[name](settings, settings.seed + index)

    with ThreadPoolExecutor(max_workers=max(1, min(settings.threads, len(selected)))) as pool:
        batches = list(pool.map(run, enumerate(selected)))
    reports = [report for batch in batches for report in batch]
    failed = [report.name for report in reports if not report.passed]
    if failed:
        logger.warning(f"{len(failed)} of {len(reports)} checks failed: {failed}")
    else:
        logger.info(f"All {len(reports)} checks passed")
    return reports


def write_reports(
    reports: Sequence[CheckReport],
    out_dir: Union[str, Path],
    settings: Optional[SuiteSettings] = None,
) -> List[Path]:
    """
    One JSON document per check plus a row per check appended to summary.csv;
    returns the written paths.
    """
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for index, report in enumerate(reports):
        path = directory / f"{index:02d}_{report.name}.json"
        document = {"schema": config.SCHEMA_VERSION, "report": report.to_json()}
        if settings is not None:
            document["settings"] = settings.to_json()
        path.write_text(json.dumps(document, sort_keys=True, indent=2))
        paths.append(path)
    summary = directory / "summary.csv"
    fresh = not summary.exists() or summary.stat().st_size == 0
    with summary.open("a", newline="") as handle:
        writer = csv.writer(handle)
        if fresh:
            writer.writerow(["index", "name", "passed", "max_relative_deviation", "tolerance", "budget_used"])
        for index, report in enumerate(reports):
            writer.writerow([
                index,
                report.name,
                report.passed,
                f"{report.max_relative_deviation:.6e}",
                f"{report.tolerance:.6e}",
                report.budget_used,
            ])
    paths.append(summary)
    logger.info(f"Wrote {len(reports)} report(s) to {directory}")
    return paths
