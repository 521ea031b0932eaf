"""Sparse multivariate polynomials in the orthonormal coordinates of V.

A polynomial is a dictionary {exponent tuple: coefficient}. Coefficients may be
floats, complex numbers, Fractions or exact sympy numbers; arithmetic never
converts between them, so exact polynomials stay exact.
"""

import logging
from itertools import combinations_with_replacement
from math import factorial
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]


def homogeneous_exponents(n_vars: int, degree: int) -> List[Exponent]:
    """All exponent tuples of total degree `degree`, in a fixed order."""
    exponents = []
    for combo in combinations_with_replacement(range(n_vars), degree):
        alpha = [0] * n_vars
        for index in combo:
            alpha[index] += 1
        exponents.append(tuple(alpha))
    return sorted(exponents, reverse=True)


def exponents_up_to(n_vars: int, degree: int) -> List[Exponent]:
    result: List[Exponent] = []
    for d in range(degree + 1):
        result.extend(homogeneous_exponents(n_vars, d))
    return result


def multi_factorial(alpha: Exponent) -> int:
    """alpha! = prod alpha_i!."""
    value = 1
    for a in alpha:
        value *= factorial(a)
    return value


def monomial_matrix(points: np.ndarray, exponents: Sequence[Exponent]) -> np.ndarray:
    """Matrix M[p, t] = points[p] ** exponents[t]."""
    points = np.atleast_2d(np.asarray(points))
    if not exponents:
        return np.zeros((points.shape[0], 0))
    powers = np.asarray(exponents, dtype=int)
    max_power = int(powers.max()) if powers.size else 0
    # table[d][p, i] = points[p, i] ** d
    table = [np.ones_like(points)]
    for _ in range(max_power):
        table.append(table[-1] * points)
    stacked = np.stack(table)  # (D+1, N, n)
    n_vars = points.shape[1]
    result = np.ones((points.shape[0], len(exponents)), dtype=points.dtype)
    for i in range(n_vars):
        result = result * stacked[powers[:, i], :, i].T
    return result


def _is_zero(coeff: Any) -> bool:
    if isinstance(coeff, sympy.Basic):
        return sympy.simplify(coeff) == 0
    return coeff == 0


class Polynomial:
    """Sparse polynomial in n_vars variables."""

    __slots__ = ("n_vars", "terms")

    def __init__(self, n_vars: int, terms: Optional[Mapping[Exponent, Any]] = None) -> None:
        self.n_vars = int(n_vars)
        self.terms: Dict[Exponent, Any] = {}
        for alpha, coeff in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n_vars:
                raise ValueError(f"Exponent {alpha} does not have {self.n_vars} entries")
            self._accumulate(alpha, coeff)

    def _accumulate(self, alpha: Exponent, coeff: Any) -> None:
        if alpha in self.terms:
            total = self.terms[alpha] + coeff
            if isinstance(total, sympy.Basic):
                total = sympy.nsimplify(total) if total.is_number and total.is_Float else sympy.expand(total)
            if _is_zero(total):
                del self.terms[alpha]
            else:
                self.terms[alpha] = total
        elif not _is_zero(coeff):
            self.terms[alpha] = coeff

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, n_vars: int) -> "Polynomial":
        return cls(n_vars)

    @classmethod
    def constant(cls, n_vars: int, value: Any) -> "Polynomial":
        return cls(n_vars, {(0,) * n_vars: value})

    @classmethod
    def variable(cls, n_vars: int, index: int) -> "Polynomial":
        alpha = [0] * n_vars
        alpha[index] = 1
        return cls(n_vars, {tuple(alpha): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[Any], constant: Any = 0) -> "Polynomial":
        n_vars = len(coeffs)
        terms: Dict[Exponent, Any] = {(0,) * n_vars: constant}
        for i, c in enumerate(coeffs):
            alpha = [0] * n_vars
            alpha[i] = 1
            terms[tuple(alpha)] = c
        return cls(n_vars, terms)

    @classmethod
    def from_coefficients(
        cls,
        n_vars: int,
        exponents: Sequence[Exponent],
        coeffs: Sequence[Any],
        cutoff: float = 0.0,
    ) -> "Polynomial":
        """Polynomial with coefficient vector `coeffs` on `exponents`; drops |c| <= cutoff."""
        terms = {}
        for alpha, c in zip(exponents, coeffs):
            if cutoff and abs(c) <= cutoff:
                continue
            terms[tuple(alpha)] = c.item() if isinstance(c, np.generic) else c
        return cls(n_vars, terms)

    @classmethod
    def from_sympy(cls, expr: sympy.Expr, symbols: Sequence[sympy.Symbol]) -> "Polynomial":
        """Exact polynomial from a sympy expression in `symbols`."""
        poly = sympy.Poly(sympy.expand(expr), *symbols)
        return cls(len(symbols), {tuple(m): c for m, c in poly.terms()})

    # -- structure ----------------------------------------------------------

    @property
    def degree(self) -> int:
        """Total degree (-1 for the zero polynomial)."""
        return max((sum(alpha) for alpha in self.terms), default=-1)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        return len({sum(alpha) for alpha in self.terms}) <= 1

    def coefficient(self, alpha: Exponent) -> Any:
        return self.terms.get(tuple(alpha), 0)

    def coefficient_vector(self, exponents: Sequence[Exponent]) -> np.ndarray:
        return np.array([complex(self.coefficient(alpha)) for alpha in exponents])

    def copy(self) -> "Polynomial":
        return Polynomial(self.n_vars, dict(self.terms))

    def _check(self, other: "Polynomial") -> None:
        if other.n_vars != self.n_vars:
            raise ValueError(f"Polynomials in {self.n_vars} and {other.n_vars} variables")

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: Any) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n_vars, other)
        self._check(other)
        result = self.copy()
        for alpha, coeff in other.terms.items():
            result._accumulate(alpha, coeff)
        return result

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n_vars, {alpha: -c for alpha, c in self.terms.items()})

    def __sub__(self, other: Any) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n_vars, other)
        return self + (-other)

    def __rsub__(self, other: Any) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other: Any) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial(self.n_vars, {alpha: c * other for alpha, c in self.terms.items()})
        self._check(other)
        result = Polynomial(self.n_vars)
        for a1, c1 in self.terms.items():
            for a2, c2 in other.terms.items():
                result._accumulate(tuple(x + y for x, y in zip(a1, a2)), c1 * c2)
        return result

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Polynomial":
        if power < 0:
            raise ValueError("Negative powers are not polynomials")
        result = Polynomial.constant(self.n_vars, 1)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def derivative(self, index: int) -> "Polynomial":
        """Partial derivative in coordinate `index`."""
        result = Polynomial(self.n_vars)
        for alpha, coeff in self.terms.items():
            a = alpha[index]
            if a == 0:
                continue
            lowered = list(alpha)
            lowered[index] -= 1
            result._accumulate(tuple(lowered), coeff * a)
        return result

    def derivative_multi(self, alpha: Exponent) -> "Polynomial":
        result = self
        for index, count in enumerate(alpha):
            for _ in range(count):
                result = result.derivative(index)
        return result

    def apply_as_operator(self, other: "Polynomial") -> "Polynomial":
        """self(d) applied to other: sum_alpha c_alpha d^alpha other."""
        self._check(other)
        result = Polynomial(other.n_vars)
        for alpha, coeff in self.terms.items():
            result = result + other.derivative_multi(alpha) * coeff
        return result

    def compose_linear(self, matrix: np.ndarray, shift: Optional[np.ndarray] = None) -> "Polynomial":
        """x -> p(A x + b), with A of shape (n_vars, m)."""
        matrix = np.asarray(matrix)
        m = matrix.shape[1]
        shift = np.zeros(self.n_vars) if shift is None else np.asarray(shift)
        rows = [Polynomial.linear(list(matrix[i]), shift[i]) for i in range(self.n_vars)]
        cache: Dict[Tuple[int, int], Polynomial] = {}

        def power(i: int, k: int) -> Polynomial:
            if (i, k) not in cache:
                cache[(i, k)] = rows[i] ** k
            return cache[(i, k)]

        result = Polynomial(m)
        for alpha, coeff in self.terms.items():
            term = Polynomial.constant(m, coeff)
            for i, a in enumerate(alpha):
                if a:
                    term = term * power(i, a)
            result = result + term
        return result

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Vectorized floating evaluation at rows of `points`."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.terms:
            return np.zeros(points.shape[0])
        exponents = list(self.terms)
        coeffs = np.array([complex(c) for c in self.terms.values()])
        values = monomial_matrix(points, exponents) @ coeffs
        return values.real if np.all(coeffs.imag == 0) else values

    def evaluate_exact(self, point: Sequence[Any]) -> Any:
        """Evaluation with the coefficient arithmetic (exact for sympy inputs)."""
        total = 0
        for alpha, coeff in self.terms.items():
            term = coeff
            for x, a in zip(point, alpha):
                if a:
                    term = term * x ** a
            total = total + term
        return sympy.expand(total) if isinstance(total, sympy.Basic) else total

    def __call__(self, point: Sequence[Any]) -> Any:
        return self.evaluate_exact(point)

    # -- conversions --------------------------------------------------------

    def to_float(self) -> "Polynomial":
        """Floating copy; complex coefficients with zero imaginary part become real."""
        terms = {}
        for alpha, coeff in self.terms.items():
            value = complex(coeff)
            terms[alpha] = value.real if value.imag == 0 else value
        return Polynomial(self.n_vars, terms)

    def pruned(self, tol: float) -> "Polynomial":
        """Drop coefficients below tol * max |coefficient|."""
        if not self.terms:
            return self.copy()
        scale = max(abs(complex(c)) for c in self.terms.values())
        return Polynomial(
            self.n_vars,
            {a: c for a, c in self.terms.items() if abs(complex(c)) > tol * scale},
        )

    def to_sympy(self, symbols: Sequence[sympy.Symbol]) -> sympy.Expr:
        expr = sympy.Integer(0)
        for alpha, coeff in self.terms.items():
            term = sympy.sympify(coeff)
            for s, a in zip(symbols, alpha):
                term *= s ** a
            expr += term
        return sympy.expand(expr)

    def allclose(self, other: "Polynomial", tol: float = 1e-9) -> bool:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        scale = max([1.0] + [abs(complex(c)) for c in self.terms.values()])
        return all(abs(complex(self.coefficient(a)) - complex(other.coefficient(a))) <= tol * scale for a in keys)

    def to_json(self) -> dict:
        """JSON form {"n_vars": n, "terms": [{"exponents": [...], "coeff": ...}]}."""
        rows = []
        for alpha in sorted(self.terms, reverse=True):
            coeff = self.terms[alpha]
            if isinstance(coeff, sympy.Basic) and not coeff.is_Float:
                value: Any = str(coeff)
            else:
                c = complex(coeff)
                value = c.real if c.imag == 0 else [c.real, c.imag]
            rows.append({"exponents": list(alpha), "coeff": value})
        return {"n_vars": self.n_vars, "terms": rows}

    @classmethod
    def from_json(cls, document: Mapping[str, Any]) -> "Polynomial":
        terms = {}
        for row in document["terms"]:
            value = row["coeff"]
            if isinstance(value, str):
                value = sympy.sympify(value)
            elif isinstance(value, list):
                value = complex(value[0], value[1])
            terms[tuple(row["exponents"])] = value
        return cls(document["n_vars"], terms)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polynomial) and self.n_vars == other.n_vars and (self - other).is_zero

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for alpha in sorted(self.terms, reverse=True):
            monomial = "*".join(f"x{i}^{a}" if a > 1 else f"x{i}" for i, a in enumerate(alpha) if a)
            parts.append(f"({self.terms[alpha]})" + (f"*{monomial}" if monomial else ""))
        return " + ".join(parts)


def fischer_product(p: Polynomial, q: Polynomial) -> complex:
    """
    Fischer inner product <p, q> = p(d) conj(q) at 0 = sum_alpha alpha! p_alpha conj(q_alpha).

    Coordinates are orthonormal, so d is dual to <.,.>.
    """
    p._check(q)
    total = 0
    for alpha, coeff in p.terms.items():
        if alpha in q.terms:
            total += multi_factorial(alpha) * complex(coeff) * np.conj(complex(q.terms[alpha]))
    return complex(total)


def fischer_weights(exponents: Iterable[Exponent]) -> np.ndarray:
    """sqrt(alpha!) for each exponent: coefficient vectors scaled by these are Fischer-isometric."""
    return np.sqrt(np.array([float(multi_factorial(alpha)) for alpha in exponents]))
