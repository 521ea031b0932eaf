"""Test functions and the orbit integration engine.

Test functions are polynomial times Gaussian:

    phi(x) = p(x) exp(-1/2 (x - c)^T Q (x - c))

The class is closed under coordinate derivatives, constant-coefficient
differential operators, linear substitutions and multiplication by
polynomials, so the Bernstein shift never leaves it.

Integrals over the open orbits are computed as

    sum_j W[j, p] * int_{Omega_j} |det x|^{e_p} w(x) phi(x) dx

for several exponents e_p at once (common random numbers), by adaptive
quadrature on the real line and by Gaussian importance sampling otherwise.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from src.config import config
from src.algebra_core import (
    AlgebraDescriptor,
    Element,
    GroupElement,
    JordanError,
    ParameterError,
    det_batch,
    eigenvalues_batch,
)
from src.decompositions import orbit_indices_batch
from src.polynomials import Exponent, Polynomial
from src.polyrep import det_polynomial

logger = logging.getLogger(__name__)

METHOD_DIRECT_QUADRATURE = "direct_quadrature"
METHOD_MONTE_CARLO = "monte_carlo"


def bernstein_method(k: int) -> str:
    return f"bernstein_shifted({k})"


@dataclass(frozen=True)
class ZetaValue:
    """A numerical value with its absolute error estimate and the method used."""

    value: complex
    abs_error_estimate: float
    method: str
    samples: int = 0

    def to_json(self) -> dict:
        return {
            "value": [float(np.real(self.value)), float(np.imag(self.value))],
            "abs_error_estimate": float(self.abs_error_estimate),
            "method": self.method,
            "samples": int(self.samples),
        }


class QuadratureBudgetError(JordanError):
    """Raised when the sample budget ends with the relative error above target."""

    def __init__(self, message: str, partial: ZetaValue) -> None:
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Budget:
    """Sampling budget: sample count, seed, chunking, threads and optional error target."""

    samples: int = field(default_factory=lambda: config.DEFAULT_SAMPLES)
    seed: int = field(default_factory=lambda: config.DEFAULT_SEED)
    chunk_size: int = field(default_factory=lambda: config.CHUNK_SIZE)
    threads: int = field(default_factory=lambda: config.DEFAULT_THREADS)
    target_relative_error: Optional[float] = None

    def __post_init__(self) -> None:
        if self.samples < 2 or self.chunk_size < 1 or self.threads < 1:
            raise ParameterError(f"Invalid budget {self}")

    def with_seed(self, seed: int) -> "Budget":
        return Budget(self.samples, seed, self.chunk_size, self.threads, self.target_relative_error)

    def with_samples(self, samples: int) -> "Budget":
        return Budget(int(samples), self.seed, self.chunk_size, self.threads, self.target_relative_error)


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TestFunction:
    """phi(x) = poly(x) exp(-1/2 (x - center)^T precision (x - center))."""

    __test__ = False  # not a pytest class

    algebra: AlgebraDescriptor
    poly: Polynomial
    center: np.ndarray
    precision: np.ndarray

    def __post_init__(self) -> None:
        n = self.algebra.dim
        center = np.asarray(self.center, dtype=float).reshape(-1)
        precision = np.asarray(self.precision, dtype=float)
        if center.shape != (n,) or precision.shape != (n, n) or self.poly.n_vars != n:
            raise ParameterError(f"Test function data does not match dimension {n}")
        precision = 0.5 * (precision + precision.T)
        if np.min(np.linalg.eigvalsh(precision)) <= 0:
            raise ParameterError("Test function precision matrix must be positive definite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "precision", precision)

    @classmethod
    def gaussian(
        cls,
        algebra: AlgebraDescriptor,
        center: Optional[Sequence[float]] = None,
        width: float = 1.0,
        poly: Optional[Polynomial] = None,
    ) -> "TestFunction":
        """poly(x) exp(-|x - center|^2 / (2 width^2)); poly defaults to 1."""
        if width <= 0:
            raise ParameterError(f"Width must be positive, got {width}")
        n = algebra.dim
        if isinstance(center, Element):
            center = center.coords
        return cls(
            algebra=algebra,
            poly=Polynomial.constant(n, 1.0) if poly is None else poly,
            center=np.zeros(n) if center is None else np.asarray(center, dtype=float),
            precision=np.eye(n) / width ** 2,
        )

    def _with(self, poly: Polynomial, center: Optional[np.ndarray] = None, precision: Optional[np.ndarray] = None) -> "TestFunction":
        return TestFunction(
            algebra=self.algebra,
            poly=poly,
            center=self.center if center is None else center,
            precision=self.precision if precision is None else precision,
        )

    @property
    def normalization(self) -> float:
        """Integral of the Gaussian factor, (2 pi)^{n/2} det(Q)^{-1/2}."""
        n = self.algebra.dim
        return float((2 * np.pi) ** (n / 2) / np.sqrt(np.linalg.det(self.precision)))

    def gaussian_factor(self, coords: np.ndarray) -> np.ndarray:
        shifted = np.atleast_2d(coords) - self.center
        return np.exp(-0.5 * np.einsum("ni,ij,nj->n", shifted, self.precision, shifted))

    def evaluate(self, coords: np.ndarray) -> np.ndarray:
        coords = np.atleast_2d(coords)
        return self.poly.evaluate(coords) * self.gaussian_factor(coords)

    def __call__(self, x: Element) -> complex:
        value = self.evaluate(x.coords[None, :])[0]
        return complex(value) if np.iscomplexobj(value) else float(value)

    def derivative(self, index: int) -> "TestFunction":
        """d/dx_index: the polynomial becomes d_i p - p (Q (x - c))_i."""
        row = self.precision[index]
        linear = Polynomial.linear(list(row), -float(row @ self.center))
        return self._with(self.poly.derivative(index) - self.poly * linear)

    def apply_operator(self, operator: Polynomial) -> "TestFunction":
        """P(d) phi for a constant-coefficient operator given as a polynomial."""
        cache: Dict[Exponent, TestFunction] = {(0,) * self.algebra.dim: self}

        def derived(alpha: Exponent) -> TestFunction:
            if alpha not in cache:
                i = next(k for k, a in enumerate(alpha) if a)
                lowered = list(alpha)
                lowered[i] -= 1
                cache[alpha] = derived(tuple(lowered)).derivative(i)
            return cache[alpha]

        total = Polynomial.zero(self.algebra.dim)
        for alpha, coeff in operator.terms.items():
            total = total + derived(alpha).poly * coeff
        return self._with(total)

    def det_dop(self, k: int = 1) -> "TestFunction":
        """det(d)^k phi."""
        if k < 0:
            raise ParameterError(f"det(d) power must be non-negative, got {k}")
        operator = det_polynomial(self.algebra)
        result = self
        for _ in range(k):
            result = result.apply_operator(operator)
        return result

    def times_polynomial(self, p: Polynomial) -> "TestFunction":
        return self._with(self.poly * p)

    def pullback(self, g: GroupElement) -> "TestFunction":
        """phi_g = phi o g^{-1}: a polynomial times a Gaussian centred at g c."""
        inv = np.linalg.inv(g.matrix)
        return self._with(
            self.poly.compose_linear(inv),
            center=g.matrix @ self.center,
            precision=inv.T @ self.precision @ inv,
        )

    def scaled(self, factor: float) -> "TestFunction":
        """x -> phi(x / factor)."""
        if factor <= 0:
            raise ParameterError(f"Scale must be positive, got {factor}")
        n = self.algebra.dim
        return self._with(
            self.poly.compose_linear(np.eye(n) / factor),
            center=factor * self.center,
            precision=self.precision / factor ** 2,
        )

    def fourier(self) -> "TestFunction":
        """
        F phi(y) = int phi(x) exp(-i <x, y>) dx, computed as p(i d) applied
        to the transformed Gaussian. Only centred test functions are supported.
        """
        if np.linalg.norm(self.center) > 0:
            raise ParameterError("Fourier transform needs a centred test function")
        n = self.algebra.dim
        covariance = np.linalg.inv(self.precision)
        base = TestFunction(
            algebra=self.algebra,
            poly=Polynomial.constant(n, self.normalization),
            center=np.zeros(n),
            precision=covariance,
        )
        operator = Polynomial(n, {alpha: c * (1j ** sum(alpha)) for alpha, c in self.poly.terms.items()})
        return base.apply_operator(operator)

    def describe(self) -> dict:
        return {
            "poly": self.poly.to_json(),
            "center": self.center.tolist(),
            "precision": self.precision.tolist(),
        }


# ---------------------------------------------------------------------------
# Integration engine
# ---------------------------------------------------------------------------

Weight = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegrationResult:
    """Means and standard errors, shape (K weight components, H outputs)."""

    mean: np.ndarray
    stderr: np.ndarray
    samples: int
    method: str

    def value(self, component: int = 0, output: int = 0, method: Optional[str] = None) -> ZetaValue:
        return ZetaValue(
            value=complex(self.mean[component, output]),
            abs_error_estimate=float(self.stderr[component, output]),
            method=self.method if method is None else method,
            samples=self.samples,
        )


def _weight_matrix(weight: Optional[Weight], coords: np.ndarray) -> np.ndarray:
    if weight is None:
        return np.ones((coords.shape[0], 1))
    values = np.asarray(weight(coords))
    return values[:, None] if values.ndim == 1 else values


def _chunk_sums(
    algebra: AlgebraDescriptor,
    f: TestFunction,
    exponents: np.ndarray,
    orbit_weights: np.ndarray,
    transform: np.ndarray,
    weight: Optional[Weight],
    cholesky: np.ndarray,
    seed: int,
    index: int,
    count: int,
) -> Tuple[np.ndarray, np.ndarray, int]:
    rng = np.random.default_rng([seed, index])
    coords = f.center + rng.standard_normal((count, algebra.dim)) @ cholesky.T
    base = f.poly.evaluate(coords) * f.normalization
    dets = det_batch(algebra, coords)
    orbit = orbit_indices_batch(eigenvalues_batch(algebra, coords))
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(dets))
    powers = np.exp(np.outer(log_abs, exponents))
    powers[~np.isfinite(log_abs)] = 0.0
    per_point = base[:, None] * powers * orbit_weights[orbit]
    outputs = per_point @ transform
    values = _weight_matrix(weight, coords)[:, :, None] * outputs[:, None, :]
    logger.debug(f"Chunk {index}: {count} samples")
    return values.sum(axis=0), (np.abs(values) ** 2).sum(axis=0), count


def _monte_carlo(
    algebra: AlgebraDescriptor,
    f: TestFunction,
    exponents: np.ndarray,
    orbit_weights: np.ndarray,
    transform: np.ndarray,
    weight: Optional[Weight],
    budget: Budget,
) -> IntegrationResult:
    cholesky = np.linalg.cholesky(np.linalg.inv(f.precision))
    sizes: List[int] = []
    remaining = budget.samples
    while remaining > 0:
        sizes.append(min(budget.chunk_size, remaining))
        remaining -= sizes[-1]

    def run(item: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray, int]:
        index, count = item
        return _chunk_sums(algebra, f, exponents, orbit_weights, transform, weight, cholesky, budget.seed, index, count)

    with ThreadPoolExecutor(max_workers=budget.threads) as executor:
        results = list(executor.map(run, enumerate(sizes)))

    total = results[0][0].copy()
    total_sq = results[0][1].copy()
    count = results[0][2]
    for s, sq, c in results[1:]:
        total += s
        total_sq += sq
        count += c
    mean = total / count
    variance = np.maximum(total_sq / count - np.abs(mean) ** 2, 0.0) * count / max(count - 1, 1)
    return IntegrationResult(mean=mean, stderr=np.sqrt(variance / count), samples=count, method=METHOD_MONTE_CARLO)


def _real_line(
    f: TestFunction,
    exponents: np.ndarray,
    orbit_weights: np.ndarray,
    transform: np.ndarray,
    weight: Optional[Weight],
) -> IntegrationResult:
    def scalar(x: float) -> Tuple[complex, np.ndarray]:
        point = np.array([[x]])
        return complex(f.evaluate(point)[0]), _weight_matrix(weight, point)[0]

    components = _weight_matrix(weight, np.zeros((1, 1))).shape[1]
    values = np.zeros((components, len(exponents)), dtype=complex)
    errors = np.zeros((components, len(exponents)))
    for p, e in enumerate(exponents):
        for orbit, (lower, upper) in enumerate(((0.0, np.inf), (-np.inf, 0.0))):
            factor = orbit_weights[orbit, p]
            if factor == 0:
                continue
            for k in range(components):
                def integrand(x: float, part: int) -> float:
                    fx, wx = scalar(x)
                    value = fx * wx[k] * abs(x) ** e if x != 0 else 0.0
                    return float(np.real(value) if part == 0 else np.imag(value))

                re, re_err = quad(integrand, lower, upper, args=(0,), limit=config.QUAD_LIMIT)
                im, im_err = quad(integrand, lower, upper, args=(1,), limit=config.QUAD_LIMIT)
                values[k, p] += factor * complex(re, im)
                errors[k, p] += abs(factor) * (re_err + im_err)
    mean = values @ transform
    stderr = errors @ np.abs(transform)
    return IntegrationResult(mean=mean, stderr=stderr, samples=0, method=METHOD_DIRECT_QUADRATURE)


def integrate_orbits(
    algebra: AlgebraDescriptor,
    f: TestFunction,
    exponents: Sequence[complex],
    orbit_weights: np.ndarray,
    weight: Optional[Weight] = None,
    transform: Optional[np.ndarray] = None,
    budget: Optional[Budget] = None,
) -> IntegrationResult:
    """
    Compute sum_j W[j, p] int_{Omega_j} |det x|^{e_p} w_k(x) f(x) dx, then map the
    p axis through `transform`.

    Args:
        algebra: algebra descriptor
        f: test function
        exponents: exponents e_p, all with Re e_p >= 0
        orbit_weights: (r + 1, P) weights by orbit index (number of negative eigenvalues)
        weight: batch function returning (N,) or (N, K) weights; 1 by default
        transform: (P, H) matrix applied per sample; identity by default
        budget: sampling budget (ignored on the real line)

    Returns:
        IntegrationResult of shape (K, H)

    Raises:
        ParameterError: If an exponent has negative real part
        QuadratureBudgetError: If the relative error misses the budget target
    """
    exponents = np.asarray(exponents, dtype=complex)
    if np.any(exponents.real < -1e-12):
        raise ParameterError(f"Exponents need Re >= 0 for direct integration, got min {exponents.real.min():.3f}")
    orbit_weights = np.asarray(orbit_weights, dtype=complex)
    if orbit_weights.shape != (algebra.rank + 1, len(exponents)):
        raise ParameterError(f"Orbit weights must have shape {(algebra.rank + 1, len(exponents))}")
    transform = np.eye(len(exponents), dtype=complex) if transform is None else np.asarray(transform, dtype=complex)
    budget = Budget() if budget is None else budget

    if algebra.dim == 1:
        result = _real_line(f, exponents, orbit_weights, transform, weight)
    else:
        result = _monte_carlo(algebra, f, exponents, orbit_weights, transform, weight, budget)

    if budget.target_relative_error is not None:
        relative = result.stderr / np.maximum(np.abs(result.mean), np.finfo(float).tiny)
        worst = np.unravel_index(int(np.argmax(relative)), relative.shape)
        if relative[worst] > budget.target_relative_error:
            partial = result.value(int(worst[0]), int(worst[1]))
            raise QuadratureBudgetError(
                f"Relative error {relative[worst]:.3e} above target {budget.target_relative_error:.1e} "
                f"after {result.samples} samples",
                partial,
            )
    return result
