"""Gamma arithmetic, zeta integrals, their continuation and pole analysis.

Phi_j^m(f, s) is the integral of |det x|^s Delta_m(x) f(x) over the orbit
Omega_j (j negative eigenvalues). It is continued to Re s < 0 by the
Bernstein identity

    det(d) (|det x|^{s+1} Delta_m) = (-1)^j b_m(s) |det x|^s Delta_m,
    b_m(s) = prod_j (s + m_j + 1 + (r - j) d / 2),

applied k times after integrating by parts, so that

    Phi_j^m(f, s) = (-1)^{rk} (-1)^{jk} Phi_j^m(det(d)^k f, s + k) / prod_j (a_j)_k.

Pole arithmetic (o_m, critical sets, bounds) is exact, on Fractions.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import ceil
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from numpy.polynomial import polynomial as npoly
from scipy.special import loggamma

from src.config import config
from src.algebra_core import (
    AlgebraDescriptor,
    JordanError,
    ParameterError,
    eigenvalues_batch,
)
from src.integration import (
    Budget,
    IntegrationResult,
    QuadratureBudgetError,
    TestFunction,
    ZetaValue,
    bernstein_method,
    integrate_orbits,
    METHOD_MONTE_CARLO,
)
from src.polyrep import (
    Partition,
    PolySpace,
    coordinate_symbols,
    delta_power_batch,
    delta_power_exact,
    h_m_batch,
    symbolic_minor,
)

__all__ = [
    "Budget",
    "GeometryError",
    "IndeterminateOrderError",
    "LaurentExpansion",
    "PoleError",
    "PoleReport",
    "QuadratureBudgetError",
    "TestFunction",
    "UnsupportedPointError",
    "VectorZeta",
    "ZetaValue",
    "bernstein_identity_exact",
    "combination_eval",
    "cone_gamma_mc",
    "critical_coefficients",
    "critical_multiplicity",
    "critical_set",
    "gamma_omega",
    "homogeneity_bounds",
    "is_resolved",
    "laurent",
    "o_mult",
    "pole_order_predict",
    "psi_eval",
    "resolved_laurent",
    "support_coefficients",
    "support_rank_predict",
    "vector_zeta",
    "vector_zeta_orbits",
    "zeta_eval",
    "zeta_eval_direct",
]

logger = logging.getLogger(__name__)

Scalar = Union[int, float, complex, Fraction, str]


class PoleError(JordanError):
    """Raised when a Gamma factor or a continuation factor is evaluated at a pole."""

    def __init__(self, message: str, factors: Tuple[int, ...], s: Optional[complex] = None) -> None:
        super().__init__(message)
        self.factors = factors
        self.s = s


class UnsupportedPointError(JordanError):
    """Raised for odd d when s0 is not an integer or a half-integer."""

    def __init__(self, message: str, s0: Scalar) -> None:
        super().__init__(message)
        self.s0 = s0


class GeometryError(JordanError):
    """Raised when a Laurent circle encloses another pole."""

    def __init__(self, message: str, pole: Fraction) -> None:
        super().__init__(message)
        self.pole = pole


class IndeterminateOrderError(JordanError):
    """Raised when every Laurent coefficient is below the noise floor."""

    def __init__(self, message: str, noise_floor: float, coefficient: complex) -> None:
        super().__init__(message)
        self.noise_floor = noise_floor
        self.coefficient = coefficient


# ---------------------------------------------------------------------------
# Exact pole arithmetic
# ---------------------------------------------------------------------------

def as_fraction(s: Scalar) -> Optional[Fraction]:
    """Exact rational value of s when s is real and rational with small denominator."""
    if isinstance(s, Fraction):
        return s
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        try:
            return Fraction(s.strip())
        except ValueError:
            s = complex(s.strip().replace("i", "j"))
    value = complex(s)
    if abs(value.imag) > 1e-12:
        return None
    candidate = Fraction(value.real).limit_denominator(1000)
    return candidate if abs(float(candidate) - value.real) <= 1e-9 else None


def _parts(m: Union[Partition, Sequence[int], str], algebra: AlgebraDescriptor) -> Tuple[int, ...]:
    partition = Partition.parse(m)
    if partition.rank != algebra.rank:
        raise ParameterError(f"Partition {partition} has {partition.rank} parts, algebra has rank {algebra.rank}")
    return partition.parts


def _offset(algebra: AlgebraDescriptor, j: int) -> Fraction:
    """1 + (r - j) d / 2 for the 1-based factor index j."""
    return 1 + Fraction(algebra.degree * (algebra.rank - j), 2)


def _pole_count(s: Scalar, parts: Sequence[int], shift: int, algebra: AlgebraDescriptor) -> int:
    value = as_fraction(s)
    if value is None:
        return 0
    count = 0
    for j, part in enumerate(parts, start=1):
        argument = value + shift + part + _offset(algebra, j)
        if argument.denominator == 1 and argument <= 0:
            count += 1
    return count


def _pole_lattice(
    parts: Sequence[int],
    shift: int,
    algebra: AlgebraDescriptor,
    window: Tuple[Scalar, Scalar],
) -> List[Tuple[Fraction, int]]:
    lower, upper = as_fraction(window[0]), as_fraction(window[1])
    if lower is None or upper is None or lower > upper:
        raise ParameterError(f"Invalid window {window}")
    counts: Counter = Counter()
    for j, part in enumerate(parts, start=1):
        pole = -(shift + part + _offset(algebra, j))
        while pole >= lower:
            if pole <= upper:
                counts[pole] += 1
            pole -= 1
    return sorted(counts.items(), key=lambda item: -item[0])


def o_mult(s0: Scalar, m: Union[Partition, Sequence[int], str], algebra: AlgebraDescriptor) -> int:
    """Number of j with s0 + m_j + 1 + (r - j) d / 2 a non-positive integer."""
    return _pole_count(s0, _parts(m, algebra), 0, algebra)


def critical_multiplicity(s0: Scalar, m: Union[Partition, Sequence[int], str], algebra: AlgebraDescriptor) -> int:
    """Number of polar factors Gamma(s + 1 - m_j + (j - 1) d / 2) at s0."""
    partition = Partition.parse(_parts(m, algebra))
    return _pole_count(s0, partition.complement.parts, -partition.parts[0], algebra)


def critical_set(
    m: Union[Partition, Sequence[int], str],
    algebra: AlgebraDescriptor,
    window: Tuple[Scalar, Scalar] = (-5, 2),
) -> List[Tuple[Fraction, int]]:
    """
    Critical points of pi_m in a real window, with multiplicities.

    These are the poles of Gamma_Omega(s + n/r - m*), i.e. of the factors
    Gamma(s + 1 - m_j + (j - 1) d / 2), listed in decreasing order.
    """
    partition = Partition.parse(_parts(m, algebra))
    return _pole_lattice(partition.complement.parts, -partition.parts[0], algebra, window)


def gamma_poles(
    m: Union[Partition, Sequence[int], str],
    algebra: AlgebraDescriptor,
    window: Tuple[Scalar, Scalar],
) -> List[Tuple[Fraction, int]]:
    """Poles of Gamma_Omega(s + m + n/r) in a window, with their orders o_m."""
    return _pole_lattice(_parts(m, algebra), 0, algebra, window)


def homogeneity_bounds(
    p: Optional[int],
    m: Union[Partition, Sequence[int], str],
    algebra: AlgebraDescriptor,
) -> Tuple[Optional[Fraction], Fraction]:
    """
    Upper bounds on s for quasi-homogeneous distributions supported on rank p
    (0 < p < r) and at the origin:

        s <= -(n/r - d p / 2) + m_{r-p}      and      s <= -n/r + m_r.
    """
    parts = _parts(m, algebra)
    r = algebra.rank
    n_over_r = Fraction(algebra.dim, r)
    origin = -n_over_r + parts[-1]
    if p is None:
        return None, origin
    if not 0 < p < r:
        raise ParameterError(f"Rank bound needs 0 < p < {r}, got {p}")
    rank_bound = -(n_over_r - Fraction(algebra.degree * p, 2)) + parts[r - p - 1]
    return rank_bound, origin


def gamma_omega(s: Scalar, m: Union[Partition, Sequence[int], str], algebra: AlgebraDescriptor) -> complex:
    """
    Gamma_Omega(s + m + n/r) = (2 pi)^{(n - r)/2} prod_j Gamma(s + m_j + 1 + (r - j) d / 2).

    Raises:
        PoleError: If some factor sits at a pole (indices of the failing factors)
    """
    parts = _parts(m, algebra)
    exact = as_fraction(s)
    value = complex(float(exact)) if exact is not None else complex(s)
    arguments = [value + part + float(_offset(algebra, j)) for j, part in enumerate(parts, start=1)]
    failing = tuple(
        j for j, a in enumerate(arguments, start=1)
        if abs(a.imag) < 1e-12 and a.real <= 0 and abs(a.real - round(a.real)) < 1e-12
    )
    if failing:
        raise PoleError(f"Gamma_Omega has a pole at s = {s}: factors {failing}", failing, value)
    log_value = 0.5 * (algebra.dim - algebra.rank) * np.log(2 * np.pi) + sum(loggamma(a) for a in arguments)
    return complex(np.exp(log_value))


def gamma_omega_cone(t: float, algebra: AlgebraDescriptor) -> complex:
    """Gamma_Omega(t) = int_Omega exp(-tr x) det(x)^{t - n/r} dx."""
    return gamma_omega(t - algebra.dim / algebra.rank, Partition.zero(algebra.rank), algebra)


def cone_gamma_mc(t: float, algebra: AlgebraDescriptor, samples: int = 100000, seed: Optional[int] = None) -> ZetaValue:
    """
    Monte-Carlo value of Gamma_Omega(t), sampling x = y^2 with y standard normal.

    The density of x sums the Gaussian over the 2^r square roots sum_i eps_i sqrt(lambda_i) e_i,
    each weighted by the inverse Jacobian 2^n |prod v_i prod_{i<j} ((v_i + v_j)/2)^d|.
    """
    r, n, d = algebra.rank, algebra.dim, algebra.degree
    if t <= (r - 1) * d / 2:
        raise ParameterError(f"Gamma_Omega(t) diverges for t <= {(r - 1) * d / 2}")
    seed = config.DEFAULT_SEED if seed is None else seed
    signs = np.array(list(product((1.0, -1.0), repeat=r)))
    pairs = [(i, j) for i in range(r) for j in range(i + 1, r)]
    total, total_sq, count = 0.0, 0.0, 0
    for index, start in enumerate(range(0, samples, config.CHUNK_SIZE)):
        size = min(config.CHUNK_SIZE, samples - start)
        rng = np.random.default_rng([seed, index])
        y = rng.standard_normal((size, n))
        roots = np.abs(eigenvalues_batch(algebra, y))
        lam = roots ** 2
        inverse_jacobians = np.zeros(size)
        for eps in signs:
            v = roots * eps
            jac = 2.0 ** n * np.abs(np.prod(v, axis=1))
            for i, j in pairs:
                jac = jac * np.abs((v[:, i] + v[:, j]) / 2) ** d
            with np.errstate(divide="ignore"):
                inverse_jacobians += np.where(jac > 0, 1.0 / jac, 0.0)
        trace = lam.sum(axis=1)
        values = (
            (2 * np.pi) ** (n / 2)
            * np.exp(-trace / 2)
            * np.prod(lam, axis=1) ** (t - n / r)
            / inverse_jacobians
        )
        total += values.sum()
        total_sq += (values ** 2).sum()
        count += size
    mean = total / count
    stderr = np.sqrt(max(total_sq / count - mean ** 2, 0.0) / max(count - 1, 1))
    return ZetaValue(value=complex(mean), abs_error_estimate=float(stderr), method=METHOD_MONTE_CARLO, samples=count)


# ---------------------------------------------------------------------------
# Bernstein continuation
# ---------------------------------------------------------------------------

def orbit_sign(j: int, k: int) -> int:
    """Sign attached to Omega_j after k Bernstein steps."""
    if k == 0:
        return 1
    if config.BERNSTEIN_SIGN_EXPONENT == "jk":
        return (-1) ** (j * k)
    if config.BERNSTEIN_SIGN_EXPONENT == "j":
        return (-1) ** j
    raise ParameterError(f"Unknown Bernstein sign convention '{config.BERNSTEIN_SIGN_EXPONENT}'")


def minimal_shift(s_points: Sequence[complex], forced: Optional[int] = None) -> int:
    """Smallest k with Re s + k >= 0 for every point (or the forced k)."""
    lowest = min(complex(s).real for s in s_points)
    k = max(0, ceil(-lowest - 1e-12))
    if forced is None:
        return k
    if forced < k:
        raise ParameterError(f"Shift {forced} is too small: Re s = {lowest:.3f} needs k >= {k}")
    return int(forced)


def continuation_factors(
    s_points: Sequence[complex],
    gamma_parts: Sequence[int],
    algebra: AlgebraDescriptor,
    k: int,
) -> np.ndarray:
    """
    R[j, p] = (-1)^{rk} sign(j, k) / prod_i (a_i(s_p))_k for orbits j = 0..r.

    Raises:
        PoleError: If a Pochhammer factor vanishes (a pole of the continuation)
    """
    r = algebra.rank
    factors = np.zeros((r + 1, len(s_points)), dtype=complex)
    for p, s in enumerate(s_points):
        s = complex(s)
        denominator = complex(1.0)
        failing = []
        for i, part in enumerate(gamma_parts, start=1):
            a = s + part + float(_offset(algebra, i))
            for t in range(k):
                if abs(a + t) < 1e-10:
                    failing.append(i)
                denominator *= a + t
        if failing:
            raise PoleError(f"Continuation has a pole at s = {s}: factors {tuple(failing)}", tuple(failing), s)
        for j in range(r + 1):
            factors[j, p] = (-1) ** (r * k) * orbit_sign(j, k) / denominator
    return factors


def _continued(
    f: TestFunction,
    coefficients: np.ndarray,
    gamma_parts: Sequence[int],
    weight,
    s_points: Sequence[complex],
    budget: Optional[Budget],
    shift: Optional[int],
    transform: Optional[np.ndarray] = None,
    orbit_weights: Optional[np.ndarray] = None,
) -> Tuple[IntegrationResult, int]:
    algebra = f.algebra
    s_points = np.atleast_1d(np.asarray(s_points, dtype=complex))
    k = minimal_shift(s_points, shift)
    factors = continuation_factors(s_points, gamma_parts, algebra, k)
    if orbit_weights is None:
        orbit_weights = np.asarray(coefficients, dtype=complex)[:, None] * factors
    else:
        orbit_weights = orbit_weights * factors
    shifted = f.det_dop(k) if k else f
    result = integrate_orbits(algebra, shifted, s_points + k, orbit_weights, weight, transform, budget)
    logger.debug(f"Evaluated {len(s_points)} point(s) with shift k={k}, method {result.method}")
    return result, k


def _method(result: IntegrationResult, k: int) -> str:
    return bernstein_method(k) if k else result.method


def _delta_weight(algebra: AlgebraDescriptor, parts: Sequence[int], dual: bool = False):
    if not any(parts):
        return None
    return lambda coords: delta_power_batch(algebra, parts, coords, dual=dual)


def _orbit_vector(j: int, algebra: AlgebraDescriptor) -> np.ndarray:
    if not 0 <= j <= algebra.rank:
        raise ParameterError(f"Orbit index {j} outside 0..{algebra.rank}")
    c = np.zeros(algebra.rank + 1, dtype=complex)
    c[j] = 1.0
    return c


def combination_eval(
    coefficients: Sequence[complex],
    m: Union[Partition, Sequence[int], str],
    f: TestFunction,
    s: complex,
    budget: Optional[Budget] = None,
    shift: Optional[int] = None,
) -> ZetaValue:
    """A^m(f, s) = sum_j c_j Phi_j^m(f, s), continued to any non-polar s."""
    algebra = f.algebra
    parts = _parts(m, algebra)
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (algebra.rank + 1,):
        raise ParameterError(f"Need {algebra.rank + 1} coefficients, got {c.shape[0]}")
    result, k = _continued(f, c, parts, _delta_weight(algebra, parts), [s], budget, shift)
    return result.value(method=_method(result, k))


def zeta_eval(
    j: int,
    m: Union[Partition, Sequence[int], str],
    f: TestFunction,
    s: complex,
    budget: Optional[Budget] = None,
    shift: Optional[int] = None,
) -> ZetaValue:
    """
    Phi_j^m(f, s) by Bernstein-shifted integration.

    Raises:
        PoleError: If s is a pole of Gamma_Omega(s + m + n/r)
    """
    return combination_eval(_orbit_vector(j, f.algebra), m, f, s, budget, shift)


def zeta_eval_direct(
    j: int,
    m: Union[Partition, Sequence[int], str],
    f: TestFunction,
    s: complex,
    budget: Optional[Budget] = None,
) -> ZetaValue:
    """Phi_j^m(f, s) by direct integration (Re s >= 0 only)."""
    if complex(s).real < 0:
        raise ParameterError(f"Direct evaluation needs Re s >= 0, got {s}")
    return combination_eval(_orbit_vector(j, f.algebra), m, f, s, budget, shift=0)


def psi_eval(
    k_orbit: int,
    m: Union[Partition, Sequence[int], str],
    f: TestFunction,
    s: complex,
    budget: Optional[Budget] = None,
    shift: Optional[int] = None,
) -> ZetaValue:
    """
    Psi_k^{-m*}(f, -s) = (-1)^{k m_1} int_{Omega_k} |det x|^{-s-m_1} Delta*_{m^c}(x) f(x) dx,
    continued with the Bernstein factors of m^c.
    """
    algebra = f.algebra
    partition = Partition.parse(_parts(m, algebra))
    top = partition.parts[0]
    c = _orbit_vector(k_orbit, algebra) * (-1) ** (k_orbit * top)
    gamma = partition.complement.parts
    result, k = _continued(f, c, gamma, _delta_weight(algebra, gamma, dual=True), [-complex(s) - top], budget, shift)
    return result.value(method=_method(result, k))


@dataclass(frozen=True)
class VectorZeta:
    """T_j^m(phi, s) for every orbit j: values and errors of shape (r + 1, dim P_m)."""

    values: np.ndarray
    errors: np.ndarray
    method: str
    samples: int

    def component(self, j: int) -> List[ZetaValue]:
        return [
            ZetaValue(value=complex(v), abs_error_estimate=float(e), method=self.method, samples=self.samples)
            for v, e in zip(self.values[j], self.errors[j])
        ]

    def to_json(self) -> dict:
        return {
            "values": [[[float(v.real), float(v.imag)] for v in row] for row in self.values],
            "errors": self.errors.tolist(),
            "method": self.method,
            "samples": self.samples,
        }


def vector_zeta_orbits(
    space: PolySpace,
    phi: TestFunction,
    s: complex,
    budget: Optional[Budget] = None,
    shift: Optional[int] = None,
) -> VectorZeta:
    """
    T_j^m(phi, s) = int_{Omega_j} |det x|^{s - m_1} h_m(x) phi(x) dx for all j in one pass.

    Raises:
        PoleError: If s is critical for pi_m
    """
    algebra = phi.algebra
    if space.algebra != algebra:
        raise ParameterError("Space and test function live in different algebras")
    r = algebra.rank
    partition = space.partition
    exponent = complex(s) - partition.parts[0]
    try:
        result, k = _continued(
            phi,
            np.ones(r + 1),
            partition.complement.parts,
            lambda coords: h_m_batch(space, coords),
            [exponent] * (r + 1),
            budget,
            shift,
            orbit_weights=np.eye(r + 1, dtype=complex),
        )
    except PoleError as e:
        raise PoleError(
            f"s = {s} is critical for pi_{partition} (multiplicity {critical_multiplicity(s, partition, algebra)})",
            e.factors,
            complex(s),
        )
    return VectorZeta(values=result.mean.T, errors=result.stderr.T, method=_method(result, k), samples=result.samples)


def vector_zeta(
    j: int,
    space: PolySpace,
    phi: TestFunction,
    s: complex,
    budget: Optional[Budget] = None,
    shift: Optional[int] = None,
) -> List[ZetaValue]:
    """T_j^m(phi, s) as a vector in the e_alpha basis."""
    _orbit_vector(j, phi.algebra)
    return vector_zeta_orbits(space, phi, s, budget, shift).component(j)


# ---------------------------------------------------------------------------
# Laurent extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LaurentExpansion:
    """Laurent coefficients C_p of (s - s0)^p for p = -H..h_max, with error and noise floor."""

    s0: complex
    order: int
    coefficients: Dict[int, complex]
    errors: Dict[int, float]
    noise_floor: Dict[int, float]
    radius: float
    n_points: int
    shift: int
    method: str
    samples: int = 0

    def residue(self, h: int) -> complex:
        """A_h, the coefficient of (s - s0)^{-h}."""
        return self.coefficients[-h]

    def to_json(self) -> dict:
        return {
            "s0": [self.s0.real, self.s0.imag],
            "order": self.order,
            "coefficients": {str(p): [c.real, c.imag] for p, c in sorted(self.coefficients.items())},
            "errors": {str(p): e for p, e in sorted(self.errors.items())},
            "noise_floor": {str(p): e for p, e in sorted(self.noise_floor.items())},
            "radius": self.radius,
            "n_points": self.n_points,
            "shift": self.shift,
            "method": self.method,
            "samples": self.samples,
        }


def _nearest_other_pole(
    s0: complex,
    parts: Sequence[int],
    algebra: AlgebraDescriptor,
) -> Optional[Tuple[Fraction, float]]:
    center = as_fraction(s0)
    window = (Fraction(int(np.floor(s0.real)) - 3), Fraction(int(np.ceil(s0.real)) + 3))
    best: Optional[Tuple[Fraction, float]] = None
    for pole, _ in _pole_lattice(parts, 0, algebra, window):
        if center is not None and pole == center:
            continue
        distance = abs(complex(float(pole)) - s0)
        if best is None or distance < best[1]:
            best = (pole, distance)
    return best


def laurent(
    coefficients: Sequence[complex],
    m: Union[Partition, Sequence[int], str],
    f: TestFunction,
    s0: Scalar,
    radius: Optional[float] = None,
    n_points: Optional[int] = None,
    budget: Optional[Budget] = None,
    h_max: Optional[int] = None,
) -> LaurentExpansion:
    """
    Laurent expansion of A^m(f, s) = sum_j c_j Phi_j^m(f, s) at s0.

    A^m is evaluated with common random numbers on the circle |s - s0| = radius
    and each sample is inverted by a discrete Fourier transform, so every
    coefficient carries its own standard error. The order is the largest h
    whose coefficient of (s - s0)^{-h} exceeds NOISE_FLOOR_FACTOR standard errors
    (plus a relative floor).

    Raises:
        GeometryError: If another pole lies in the closed disk
        IndeterminateOrderError: If every coefficient is below the noise floor
    """
    algebra = f.algebra
    parts = _parts(m, algebra)
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (algebra.rank + 1,):
        raise ParameterError(f"Need {algebra.rank + 1} coefficients, got {c.shape[0]}")
    exact = as_fraction(s0)
    center = complex(float(exact)) if exact is not None else complex(s0)
    n_points = config.CIRCLE_POINTS if n_points is None else int(n_points)
    h_max = config.LAURENT_POSITIVE_TERMS if h_max is None else int(h_max)
    depth = algebra.rank
    if n_points < depth + h_max + 2:
        raise ParameterError(f"{n_points} circle points cannot resolve {depth + h_max + 1} coefficients")

    nearest = _nearest_other_pole(center, parts, algebra)
    if radius is None:
        radius = config.MAX_RADIUS if nearest is None else min(config.MAX_RADIUS, nearest[1] / 2)
    elif nearest is not None and nearest[1] <= radius:
        raise GeometryError(
            f"Pole {nearest[0]} lies within radius {radius} of s0 = {s0}",
            nearest[0],
        )
    if radius <= 0:
        raise ParameterError(f"Radius must be positive, got {radius}")

    angles = 2 * np.pi * np.arange(n_points) / n_points
    points = center + radius * np.exp(1j * angles)
    powers = np.arange(-depth, h_max + 1)
    transform = np.exp(-1j * np.outer(angles, powers)) * radius ** (-powers.astype(float))[None, :] / n_points

    result, k = _continued(f, c, parts, _delta_weight(algebra, parts), points, budget, None, transform=transform)
    values = result.mean[0]
    errors = result.stderr[0]
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    floors = config.NOISE_FLOOR_FACTOR * errors + config.RELATIVE_NOISE_FLOOR * scale

    above = np.abs(values) > floors
    if not np.any(above):
        worst = int(np.argmax(np.abs(values)))
        raise IndeterminateOrderError(
            f"All Laurent coefficients at s0 = {s0} are below the noise floor",
            float(floors[worst]),
            complex(values[worst]),
        )
    order = 0
    for h in range(depth, 0, -1):
        if above[depth - h]:
            order = h
            break

    expansion = LaurentExpansion(
        s0=center,
        order=order,
        coefficients={int(p): complex(v) for p, v in zip(powers, values)},
        errors={int(p): float(e) for p, e in zip(powers, errors)},
        noise_floor={int(p): float(fl) for p, fl in zip(powers, floors)},
        radius=float(radius),
        n_points=n_points,
        shift=k,
        method=_method(result, k),
        samples=result.samples,
    )
    logger.info(f"Laurent expansion at s0 = {s0}: order {order} (radius {radius:.3f}, shift {k})")
    return expansion


def is_resolved(expansion: LaurentExpansion, resolution: Optional[float] = None) -> bool:
    """
    True when every polar coefficient is either above its noise floor or known
    to vanish: its floor is below `resolution` times the largest coefficient.
    """
    resolution = config.POLE_RESOLUTION if resolution is None else resolution
    scale = max(abs(c) for c in expansion.coefficients.values())
    for p, value in expansion.coefficients.items():
        if p >= 0:
            continue
        floor = expansion.noise_floor[p]
        if abs(value) <= floor and floor > resolution * scale:
            return False
    return True


def resolved_laurent(
    coefficients: Sequence[complex],
    m: Union[Partition, Sequence[int], str],
    f: TestFunction,
    s0: Scalar,
    radius: Optional[float] = None,
    budget: Optional[Budget] = None,
    max_samples: Optional[int] = None,
) -> LaurentExpansion:
    """
    laurent() with the sample budget doubled until the expansion is resolved.

    Quadrature on the real line is resolved at once. Above max_samples
    (LAURENT_MAX_SAMPLES) the last expansion is returned unresolved.

    Raises:
        IndeterminateOrderError: If every coefficient is still below the noise floor at the cap
    """
    budget = Budget() if budget is None else budget
    cap = config.LAURENT_MAX_SAMPLES if max_samples is None else int(max_samples)
    while True:
        try:
            expansion = laurent(coefficients, m, f, s0, radius=radius, budget=budget)
        except IndeterminateOrderError:
            if f.algebra.dim == 1 or budget.samples * 2 > cap:
                raise
            budget = budget.with_samples(budget.samples * 2)
            logger.info(f"Laurent order indeterminate at s0 = {s0}; retrying with {budget.samples} samples")
            continue
        if expansion.samples == 0 or is_resolved(expansion):
            return expansion
        if budget.samples * 2 > cap:
            logger.warning(f"Laurent expansion at s0 = {s0} unresolved after {budget.samples} samples")
            return expansion
        budget = budget.with_samples(budget.samples * 2)
        logger.info(f"Laurent expansion at s0 = {s0} unresolved; retrying with {budget.samples} samples")


# ---------------------------------------------------------------------------
# Pole-order and support predictions
# ---------------------------------------------------------------------------

def newton_divided_differences(nodes: Sequence[float], values: Sequence[complex]) -> np.ndarray:
    """Newton coefficients [y_0], [y_0, y_1], ... of the interpolant."""
    x = np.asarray(nodes, dtype=float)
    table = np.asarray(values, dtype=complex).copy()
    coefficients = [table[0]]
    for level in range(1, len(x)):
        table = (table[1:] - table[:-1]) / (x[level:] - x[:-level])
        coefficients.append(table[0])
    return np.array(coefficients)


def _newton_degree(coefficients: np.ndarray, scale: float, tol: float) -> int:
    degree = -1
    for i, c in enumerate(coefficients):
        if abs(c) > tol * scale:
            degree = i
    return degree


def _newton_to_monomial(nodes: Sequence[float], coefficients: np.ndarray) -> np.ndarray:
    result = np.zeros(1, dtype=complex)
    basis = np.ones(1, dtype=complex)
    for node, c in zip(nodes, coefficients):
        result = npoly.polyadd(result, c * basis)
        basis = npoly.polymul(basis, [-node, 1.0])
    return result


@dataclass(frozen=True)
class PoleReport:
    """Predicted pole order of A^m at s0 and the support ranks of its coefficients."""

    s0: str
    o_mult: int
    predicted_order: int
    deg_p: Optional[int] = None
    deg_p0: Optional[int] = None
    deg_p1: Optional[int] = None
    epsilon: Optional[int] = None
    support_rank_by_h: Dict[int, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "s0": self.s0,
            "o_mult": self.o_mult,
            "predicted_order": self.predicted_order,
            "deg_p": self.deg_p,
            "deg_p0": self.deg_p0,
            "deg_p1": self.deg_p1,
            "epsilon": self.epsilon,
            "support_rank_by_h": {str(h): rank for h, rank in sorted(self.support_rank_by_h.items())},
        }


def _half_integer_kind(s0: Scalar) -> Tuple[Fraction, bool]:
    """(s0, is_integer) for s0 in Z/2."""
    value = as_fraction(s0)
    if value is None or value.denominator not in (1, 2):
        raise UnsupportedPointError(f"s0 = {s0} is neither an integer nor a half-integer", s0)
    return value, value.denominator == 1


def pole_order_predict(
    coefficients: Sequence[complex],
    m: Union[Partition, Sequence[int], str],
    s0: Scalar,
    algebra: AlgebraDescriptor,
    tol: Optional[float] = None,
) -> PoleReport:
    """
    Order of the pole of sum_j c_j Phi_j^m at s0 from the interpolants of
    c_j exp(i pi s0 j).

    d even: min(deg P, o_m(s0)). d odd, with P_0 through even j and P_1 through
    odd j: min(max(deg P_0, deg P_1), o_m(s0)) at half-integers and
    min(max(deg P_0, deg P_1) + eps, o_m(s0)) at integers, eps = 1 iff
    deg(P_0 - P_1) = max(deg P_0, deg P_1).

    Raises:
        UnsupportedPointError: If d is odd and s0 is not in Z/2
    """
    tol = config.NEWTON_TOLERANCE if tol is None else tol
    r = algebra.rank
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (r + 1,):
        raise ParameterError(f"Need {r + 1} coefficients, got {c.shape[0]}")
    exact = as_fraction(s0)
    phase_point = float(exact) if exact is not None else complex(s0)
    j = np.arange(r + 1)
    values = c * np.exp(1j * np.pi * phase_point * j)
    scale = float(np.max(np.abs(values))) if np.any(values) else 1.0
    o = o_mult(s0, m, algebra)
    label = str(exact) if exact is not None else str(complex(s0))

    if algebra.degree % 2 == 0:
        degree = _newton_degree(newton_divided_differences(j, values), scale, tol)
        order = max(0, min(degree, o))
        report = dict(deg_p=degree)
    else:
        _, is_integer = _half_integer_kind(s0)
        even, odd = j[::2], j[1::2]
        dd0 = newton_divided_differences(even, values[::2])
        deg0 = _newton_degree(dd0, scale, tol)
        if len(odd):
            dd1 = newton_divided_differences(odd, values[1::2])
            deg1 = _newton_degree(dd1, scale, tol)
            p1 = _newton_to_monomial(odd, dd1)
        else:
            deg1, p1 = -1, np.zeros(1, dtype=complex)
        difference = npoly.polysub(_newton_to_monomial(even, dd0), p1)
        diff_scale = max(scale, float(np.max(np.abs(difference))) if difference.size else 0.0)
        deg_diff = -1
        for i, coefficient in enumerate(difference):
            if abs(coefficient) > tol * diff_scale:
                deg_diff = i
        top = max(deg0, deg1)
        epsilon = 1 if deg_diff == top else 0
        order = max(0, min(top + epsilon if is_integer else top, o))
        report = dict(deg_p0=deg0, deg_p1=deg1, epsilon=epsilon)

    supports = {h: support_rank_predict(h, s0, algebra) for h in range(1, order + 1)}
    return PoleReport(s0=label, o_mult=o, predicted_order=order, support_rank_by_h=supports, **report)


def support_rank_predict(h: int, s0: Scalar, algebra: AlgebraDescriptor) -> int:
    """
    Rank of the support of the coefficient A_h at a pole s0.

    d even: r - h. d odd: r + 1 - 2h at integers, r - 2h at half-integers. Never below 0.
    """
    if h < 1:
        raise ParameterError(f"Support rank needs h >= 1, got {h}")
    r = algebra.rank
    if algebra.degree % 2 == 0:
        return max(0, r - h)
    _, is_integer = _half_integer_kind(s0)
    return max(0, r + 1 - 2 * h if is_integer else r - 2 * h)


def critical_coefficients(
    s0: Scalar,
    algebra: AlgebraDescriptor,
    power: int,
    parity: Optional[str] = None,
) -> np.ndarray:
    """
    c_j = exp(-i pi s0 j) j^power, restricted to even or odd j when parity is given,
    so that c_j exp(i pi s0 j) interpolates j^power exactly.
    """
    if power < 0:
        raise ParameterError(f"Power must be non-negative, got {power}")
    if parity not in (None, "even", "odd"):
        raise ParameterError(f"Parity must be even, odd or None, got {parity}")
    exact = as_fraction(s0)
    point = float(exact) if exact is not None else complex(s0)
    j = np.arange(algebra.rank + 1)
    c = np.exp(-1j * np.pi * point * j) * j.astype(float) ** power
    if parity == "even":
        c[1::2] = 0
    elif parity == "odd":
        c[::2] = 0
    return c


@dataclass(frozen=True)
class SupportConstruction:
    """Coefficients whose top Laurent coefficient is supported in rank `rank`."""

    coefficients: np.ndarray
    order: int
    rank: int
    power: int
    parity: Optional[str]
    orbits: Tuple[int, ...] = ()  # q of the orbits S_{rank, q} inside the support


def support_coefficients(
    p: int,
    s0: Scalar,
    algebra: AlgebraDescriptor,
    parity: str = "even",
) -> SupportConstruction:
    """
    Coefficients c for which the pole at s0 has order h with A_h supported on rank p.

    For odd d the sum runs over even j (parity "even") or odd j ("odd"). At
    integers both reach every orbit S_{p,q}; at half-integers the even sum
    reaches the orbits with q even and the odd sum those with q odd. The
    construction reaches order h only when o_m(s0) >= h.
    """
    r = algebra.rank
    if not 0 <= p < r:
        raise ParameterError(f"Support rank must satisfy 0 <= p < {r}, got {p}")
    if parity not in ("even", "odd"):
        raise ParameterError(f"Parity must be even or odd, got {parity}")
    if algebra.degree % 2 == 0:
        h = r - p
        return SupportConstruction(critical_coefficients(s0, algebra, h), h, p, h, None, tuple(range(p + 1)))
    _, is_integer = _half_integer_kind(s0)
    gap = r + 1 - p if is_integer else r - p
    if gap % 2 or gap < 2:
        raise ParameterError(f"Rank {p} is not reachable at s0 = {s0} for odd d")
    h = gap // 2
    power = h - 1 if is_integer else h
    if is_integer:
        orbits = tuple(range(p + 1))
    else:
        orbits = tuple(q for q in range(p + 1) if q % 2 == (parity == "odd"))
        if not orbits:
            raise ParameterError(f"No orbit of rank {p} is reached by the {parity} sum at s0 = {s0}")
    return SupportConstruction(critical_coefficients(s0, algebra, power, parity), h, p, power, parity, orbits)


# ---------------------------------------------------------------------------
# Exact Bernstein identity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BernsteinIdentity:
    """Outcome of the exact check det(d)(det^{s+1} Delta_m) = b(s) det^s Delta_m."""

    holds: bool
    b: sympy.Expr
    residual: sympy.Expr


def bernstein_identity_exact(m: Union[Partition, Sequence[int], str], algebra: AlgebraDescriptor) -> BernsteinIdentity:
    """
    Check the Bernstein identity symbolically.

    Terms are kept as D^{s+1-l} Q(x) with D = det, so that d_i(D^a Q) = D^{a-1}(a d_i D Q + D d_i Q).
    After the r derivatives of det(d), l = r and the identity reads
    Q = b(s) D^{r-1} Delta_m.
    """
    parts = _parts(m, algebra)
    r = algebra.rank
    xs = coordinate_symbols(algebra.dim)
    s = sympy.Symbol("s")
    det_expr = symbolic_minor(algebra, r)
    delta = delta_power_exact(algebra, parts).to_sympy(xs)
    gradient = [sympy.diff(det_expr, x) for x in xs]
    operator = sympy.Poly(det_expr, *xs)

    total = sympy.Integer(0)
    for monomial, coeff in operator.terms():
        current = delta
        level = 0
        for index, count in enumerate(monomial):
            for _ in range(count):
                a = s + 1 - level
                current = sympy.expand(a * gradient[index] * current + det_expr * sympy.diff(current, xs[index]))
                level += 1
        total += coeff * current
    b = sympy.Integer(1)
    for j, part in enumerate(parts, start=1):
        b *= s + part + sympy.Rational(1) + sympy.Rational(algebra.degree * (r - j), 2)
    residual = sympy.expand(total - b * det_expr ** (r - 1) * delta)
    return BernsteinIdentity(holds=residual == 0, b=sympy.factor(b), residual=residual)
