"""Power functions, the spaces P_m and the representations pi_m.

P_m is spanned by the translates x -> Delta_m(g x). Its basis is found
numerically: Delta_m(g x) is sampled at interpolation nodes for random g,
fitted in the degree-|m| monomials, and orthonormalized for the Fischer
product. The dual basis f_alpha lives in P_{m^c} and is obtained through
the contragredient map P -> det(x)^{m_1} P(x^{-1}).
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from scipy.linalg import expm
from scipy.stats import special_ortho_group

from src.config import config
from src.algebra_core import (
    MODEL_HERMITIAN,
    MODEL_QUATERNIONIC,
    MODEL_SPIN,
    AlgebraDescriptor,
    Element,
    GroupElement,
    JordanError,
    Operator,
    P_op,
    ParameterError,
    SingularElementError,
    coords_from_matrices,
    det_batch,
    eigenvalues_batch,
    exact_basis,
    inverse_batch,
    pfaffian,
    symplectic_unit,
)
from src.decompositions import (
    block_basis,
    canonical_frame,
    frobenius,
    minor_indices,
    minors_batch,
    w_blocks,
)
from src.polynomials import (
    Exponent,
    Polynomial,
    fischer_product,
    fischer_weights,
    homogeneous_exponents,
    monomial_matrix,
)

__all__ = [
    "BudgetError",
    "ConditioningError",
    "GroupElement",
    "NonSphericalError",
    "OutsideSpaceError",
    "Partition",
    "PolySpace",
    "SphericalDecomposition",
    "build_Pm",
    "change_of_basis",
    "contragredient",
    "delta_power",
    "delta_power_batch",
    "delta_power_exact",
    "det_polynomial",
    "dual_delta_power",
    "fischer_product",
    "h_m",
    "h_m_batch",
    "is_spherical",
    "maps_cone",
    "pi_m_matrix",
    "random_group_element",
    "symbolic_minor",
]

logger = logging.getLogger(__name__)


class BudgetError(JordanError):
    """Raised when the rank of sampled translates does not stabilize within the budget."""

    def __init__(self, message: str, last_ranks: Tuple[int, ...]) -> None:
        super().__init__(message)
        self.last_ranks = last_ranks


class ConditioningError(JordanError):
    """Raised when an interpolation or change of basis is numerically ill-conditioned."""

    def __init__(self, message: str, condition_number: float) -> None:
        super().__init__(message)
        self.condition_number = condition_number


class OutsideSpaceError(JordanError):
    """Raised when a polynomial does not belong to the space an operation requires."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class NonSphericalError(JordanError):
    """Raised when a weight has an odd gap and so is not spherical."""

    def __init__(self, message: str, weight: Tuple[int, ...]) -> None:
        super().__init__(message)
        self.weight = weight


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Weakly decreasing non-negative integers m_1 >= ... >= m_r >= 0."""

    parts: Tuple[int, ...]

    def __post_init__(self) -> None:
        parts = tuple(int(p) for p in self.parts)
        if not parts:
            raise ParameterError("A partition needs at least one part")
        if any(p < 0 for p in parts):
            raise ParameterError(f"Partition {parts} has a negative part")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ParameterError(f"Partition {parts} is not weakly decreasing")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def parse(cls, text: Union[str, Sequence[int], "Partition"]) -> "Partition":
        """Read "2,1,0" (or a sequence) into a partition."""
        if isinstance(text, Partition):
            return text
        if isinstance(text, str):
            try:
                values = [int(part) for part in text.replace(" ", "").split(",") if part != ""]
            except ValueError:
                raise ParameterError(f"Cannot read partition from '{text}'")
            return cls(tuple(values))
        return cls(tuple(text))

    @classmethod
    def zero(cls, rank: int) -> "Partition":
        return cls((0,) * rank)

    @property
    def rank(self) -> int:
        return len(self.parts)

    @property
    def size(self) -> int:
        """|m| = sum of the parts."""
        return sum(self.parts)

    @property
    def complement(self) -> "Partition":
        """m^c = (m_1 - m_r, m_1 - m_{r-1}, ..., m_1 - m_2, 0)."""
        top = self.parts[0]
        return Partition(tuple(top - p for p in reversed(self.parts)))

    @property
    def dual_negative(self) -> Tuple[int, ...]:
        """-m* = (-m_r, ..., -m_1), a generalized (negative) exponent sequence."""
        return tuple(-p for p in reversed(self.parts))

    @property
    def shifted(self) -> "Partition":
        """m' = (m_2, ..., m_r)."""
        if self.rank < 2:
            raise ParameterError("A one-part partition has no shifted partition")
        return Partition(self.parts[1:])

    def __str__(self) -> str:
        return ",".join(str(p) for p in self.parts)


def _as_parts(m: Union[Partition, Sequence[int]]) -> Tuple[int, ...]:
    return m.parts if isinstance(m, Partition) else tuple(int(p) for p in m)


def minor_exponents(m: Union[Partition, Sequence[int]]) -> Tuple[int, ...]:
    """Exponents of Delta_1..Delta_r in Delta_m: (m_1 - m_2, ..., m_{r-1} - m_r, m_r)."""
    parts = _as_parts(m)
    return tuple(parts[k] - parts[k + 1] for k in range(len(parts) - 1)) + (parts[-1],)


# ---------------------------------------------------------------------------
# Generalized power functions
# ---------------------------------------------------------------------------

def delta_power_batch(
    algebra: AlgebraDescriptor,
    m: Union[Partition, Sequence[int]],
    coords: np.ndarray,
    dual: bool = False,
) -> np.ndarray:
    """
    Delta_m (or Delta*_m) of a batch of rows.

    Rows where a minor with negative exponent vanishes give inf; callers that
    need an error use delta_power.
    """
    exponents = minor_exponents(m)
    if len(exponents) != algebra.rank:
        raise ParameterError(f"Exponent sequence {_as_parts(m)} does not have {algebra.rank} entries")
    minors = minors_batch(algebra, coords, dual=dual)
    values = np.ones(minors.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        for k, e in enumerate(exponents):
            if e:
                values = values * minors[:, k] ** float(e)
    return values


def _delta_scalar(m: Union[Partition, Sequence[int]], x: Element, dual: bool, tol: Optional[float]) -> float:
    algebra = x.algebra
    exponents = minor_exponents(m)
    if len(exponents) != algebra.rank:
        raise ParameterError(f"Exponent sequence {_as_parts(m)} does not have {algebra.rank} entries")
    tol = config.TOLERANCE if tol is None else tol
    minors = minors_batch(algebra, x.coords[None, :], dual=dual)[0]
    scale = max(1.0, x.norm())
    value = 1.0
    for k, e in enumerate(exponents):
        if e == 0:
            continue
        if e < 0 and abs(minors[k]) <= tol * scale ** (k + 1):
            raise SingularElementError(
                f"Minor {'Delta*' if dual else 'Delta'}_{k + 1} vanishes under a negative exponent",
                abs(float(minors[k])),
            )
        value *= float(minors[k]) ** e
    return value


def delta_power(m: Union[Partition, Sequence[int]], x: Element, tol: Optional[float] = None) -> float:
    """
    Delta_m(x) = Delta_1^{m_1 - m_2} ... Delta_r^{m_r}.

    Generalized integer sequences (e.g. -m*) are accepted.

    Raises:
        SingularElementError: If a minor with negative net exponent vanishes
    """
    return _delta_scalar(m, x, dual=False, tol=tol)


def dual_delta_power(m: Union[Partition, Sequence[int]], x: Element, tol: Optional[float] = None) -> float:
    """Delta*_m(x), built from the trailing minors."""
    return _delta_scalar(m, x, dual=True, tol=tol)


# ---------------------------------------------------------------------------
# Exact minors
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def coordinate_symbols(dim: int) -> Tuple[sympy.Symbol, ...]:
    return tuple(sympy.symbols(f"x0:{dim}", real=True))


@lru_cache(maxsize=None)
def symbolic_minor(algebra: AlgebraDescriptor, k: int, dual: bool = False) -> sympy.Expr:
    """Exact Delta_k (or Delta*_k) as a sympy polynomial in x0..x{n-1}."""
    if not 1 <= k <= algebra.rank:
        raise ParameterError(f"Minor index {k} outside 1..{algebra.rank}")
    xs = coordinate_symbols(algebra.dim)
    if algebra.model == MODEL_SPIN:
        if k == 2:
            return sympy.expand((xs[0] ** 2 - sum(x ** 2 for x in xs[1:])) / 2)
        sign = -1 if dual else 1
        return sympy.expand((xs[0] + sign * xs[1]) / sympy.sqrt(2))

    basis = exact_basis(algebra.model, algebra.rank, algebra.dim)
    matrix = sympy.zeros(*basis[0].shape)
    for x, b in zip(xs, basis):
        matrix += x * b
    idx = minor_indices(algebra, k, dual)
    block = matrix.extract(idx, idx)
    if algebra.model == MODEL_QUATERNIONIC:
        j = sympy.Matrix(symplectic_unit(k).astype(int))
        alternating = -block * j
        value = pfaffian(j * alternating * j) / pfaffian(j)
    else:
        value = block.det()
    return sympy.expand(value)


@lru_cache(maxsize=None)
def delta_power_exact(algebra: AlgebraDescriptor, parts: Tuple[int, ...], dual: bool = False) -> Polynomial:
    """Exact Polynomial Delta_m (non-negative minor exponents only)."""
    exponents = minor_exponents(parts)
    if any(e < 0 for e in exponents):
        raise ParameterError(f"Delta_{parts} is not a polynomial")
    expr = sympy.Integer(1)
    for k, e in enumerate(exponents, start=1):
        if e:
            expr *= symbolic_minor(algebra, k, dual) ** e
    return Polynomial.from_sympy(expr, coordinate_symbols(algebra.dim))


@lru_cache(maxsize=None)
def det_polynomial(algebra: AlgebraDescriptor) -> Polynomial:
    """Floating det as a polynomial (used as the operator det(d))."""
    return Polynomial.from_sympy(symbolic_minor(algebra, algebra.rank), coordinate_symbols(algebra.dim)).to_float()


# ---------------------------------------------------------------------------
# Group elements
# ---------------------------------------------------------------------------

def _random_diagonal(algebra: AlgebraDescriptor, rng: np.random.Generator) -> GroupElement:
    a = np.exp(rng.normal(0.0, 0.3, size=algebra.rank))
    center = Element(algebra, a @ algebra.frame_coords)
    return GroupElement.from_operator(P_op(center), ("P(a)",))


def _random_frobenius(algebra: AlgebraDescriptor, rng: np.random.Generator) -> GroupElement:
    if algebra.rank < 2:
        return GroupElement.identity(algebra)
    j = int(rng.integers(1, algebra.rank))
    frame = canonical_frame(algebra)
    basis = block_basis(frame, w_blocks(algebra.rank, j))
    z = Element(algebra, basis @ rng.normal(0.0, 0.5, size=basis.shape[1]))
    return frobenius(z, j, frame)


def _random_skew(algebra: AlgebraDescriptor, rng: np.random.Generator) -> np.ndarray:
    size = algebra.native_size
    if algebra.model == MODEL_QUATERNIONIC:
        r = algebra.rank
        a = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
        b = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
        q = np.block([[a, b], [-np.conj(b), np.conj(a)]])
    elif algebra.model == MODEL_HERMITIAN:
        q = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    else:
        q = rng.normal(size=(size, size)).astype(complex)
    return 0.5 * (q - q.conj().T)


def _random_automorphism(algebra: AlgebraDescriptor, rng: np.random.Generator) -> GroupElement:
    if algebra.model == MODEL_SPIN:
        rotation = special_ortho_group.rvs(algebra.dim - 1, random_state=rng)
        matrix = np.eye(algebra.dim)
        matrix[1:, 1:] = rotation
        return GroupElement.from_operator(Operator(matrix), ("k",))
    u = expm(_random_skew(algebra, rng))
    images = u[None, :, :] @ algebra.basis @ u.conj().T[None, :, :]
    matrix = coords_from_matrices(algebra, images).T
    return GroupElement.from_operator(Operator(matrix), ("k",))


_GENERATORS = {
    "diagonal": _random_diagonal,
    "frobenius": _random_frobenius,
    "automorphism": _random_automorphism,
}


def random_group_element(
    algebra: AlgebraDescriptor,
    seed: Union[int, Sequence[int], None] = None,
    style: str = "word",
    length: Optional[int] = None,
) -> GroupElement:
    """
    Random element of the identity component of the structure group.

    Args:
        algebra: algebra descriptor
        seed: seed (or seed sequence) for numpy's default_rng
        style: diagonal, frobenius, automorphism, word or identity
        length: number of generators in a word (config.WORD_LENGTH by default)

    Returns:
        GroupElement recording its generator word
    """
    rng = np.random.default_rng(seed)
    if style == "identity":
        return GroupElement.identity(algebra)
    if style in _GENERATORS:
        return _GENERATORS[style](algebra, rng)
    if style != "word":
        raise ParameterError(f"Unknown group element style '{style}'; expected one of {config.GROUP_STYLES}")
    length = config.WORD_LENGTH if length is None else int(length)
    result = GroupElement.identity(algebra)
    names = list(_GENERATORS)
    for _ in range(length):
        generator = _GENERATORS[names[int(rng.integers(len(names)))]]
        result = result.compose(generator(algebra, rng))
    return result


def maps_cone(g: GroupElement, algebra: AlgebraDescriptor, samples: int = 32, seed: int = 0) -> bool:
    """Check that g sends sampled points of Omega into Omega."""
    rng = np.random.default_rng(seed)
    y = rng.normal(size=(samples, algebra.dim))
    squares = np.einsum("ni,nj,ijk->nk", y, y, algebra.structure) + 0.1 * algebra.unit_coords
    images = g.act(squares)
    return bool(np.all(eigenvalues_batch(algebra, images) > 0))


# ---------------------------------------------------------------------------
# The spaces P_m
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PolySpace:
    """Fischer-orthonormal basis of P_m with its dual basis in P_{m^c}."""

    partition: Partition
    algebra: AlgebraDescriptor
    exponents: Tuple[Exponent, ...]
    coefficients: np.ndarray  # (dim, T) basis coefficients on `exponents`
    dual_exponents: Tuple[Exponent, ...]
    dual_coefficients: np.ndarray  # (dim, T') dual basis coefficients
    fischer_gram: np.ndarray
    pairing_matrix: np.ndarray
    samples_used: int
    rank_history: Tuple[int, ...]
    nodes: np.ndarray = field(repr=False)
    fit: np.ndarray = field(repr=False)  # pseudo-inverse of the degree-|m| Vandermonde
    dual_fit: np.ndarray = field(repr=False)
    condition_number: float = 1.0

    @property
    def dim(self) -> int:
        return self.coefficients.shape[0]

    @property
    def basis(self) -> Tuple[Polynomial, ...]:
        return tuple(_to_polynomial(self.algebra.dim, self.exponents, row) for row in self.coefficients)

    @property
    def dual_basis(self) -> Tuple[Polynomial, ...]:
        return tuple(_to_polynomial(self.algebra.dim, self.dual_exponents, row) for row in self.dual_coefficients)

    @property
    def weighted(self) -> np.ndarray:
        """Basis coefficients scaled by sqrt(alpha!): rows are orthonormal."""
        return self.coefficients * fischer_weights(self.exponents)[None, :]

    def describe(self) -> dict:
        return {
            "partition": list(self.partition.parts),
            "algebra": self.algebra.describe(),
            "dim": self.dim,
            "samples_used": self.samples_used,
            "rank_history": list(self.rank_history),
            "condition_number": self.condition_number,
        }


def _to_polynomial(n_vars: int, exponents: Sequence[Exponent], coeffs: np.ndarray) -> Polynomial:
    scale = float(np.max(np.abs(coeffs))) if coeffs.size else 0.0
    return Polynomial.from_coefficients(n_vars, exponents, [float(c) for c in coeffs], cutoff=1e-11 * scale)


def _interpolation_nodes(algebra: AlgebraDescriptor, count: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian nodes kept away from the singular set."""
    kept: List[np.ndarray] = []
    total = 0
    while total < count:
        draw = rng.normal(size=(4 * count, algebra.dim))
        dets = np.abs(det_batch(algebra, draw))
        good = draw[dets >= 0.1 * np.median(dets)]
        kept.append(good)
        total += good.shape[0]
    return np.concatenate(kept)[:count]


def _fit_matrix(nodes: np.ndarray, exponents: Sequence[Exponent]) -> Tuple[np.ndarray, float]:
    vandermonde = monomial_matrix(nodes, exponents)
    singular = np.linalg.svd(vandermonde, compute_uv=False)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else np.inf
    if condition > config.CONDITION_LIMIT:
        raise ConditioningError(f"Interpolation nodes are ill-conditioned (cond {condition:.3e})", condition)
    return np.linalg.pinv(vandermonde), condition


def _numerical_rank(matrix: np.ndarray, tol: float) -> int:
    if matrix.size == 0:
        return 0
    singular = np.linalg.svd(matrix, compute_uv=False)
    return int(np.sum(singular > tol * singular[0])) if singular[0] > 0 else 0


def build_Pm(
    m: Union[Partition, Sequence[int], str],
    algebra: AlgebraDescriptor,
    sample_count: Optional[int] = None,
    tol: Optional[float] = None,
    seed: Optional[int] = None,
) -> PolySpace:
    """
    Basis of P_m = span{Delta_m(g x)} by sampling random g.

    Sampling stops once PM_STABILIZATION_SAMPLES consecutive samples leave
    the rank unchanged.

    Args:
        m: partition
        algebra: algebra descriptor
        sample_count: maximum number of group elements (PM_SAMPLE_BUDGET)
        tol: relative singular-value threshold (INTERPOLATION_TOLERANCE)
        seed: base seed; sample i uses the seed sequence [seed, i]

    Returns:
        PolySpace

    Raises:
        ParameterError: If the partition does not fit the algebra or |m| is too large
        BudgetError: If the rank does not stabilize within the budget
        ConditioningError: If the interpolation is ill-conditioned
    """
    partition = Partition.parse(m)
    if partition.rank != algebra.rank:
        raise ParameterError(f"Partition {partition} has {partition.rank} parts, algebra has rank {algebra.rank}")
    budget = config.PM_SAMPLE_BUDGET if sample_count is None else int(sample_count)
    tol = config.INTERPOLATION_TOLERANCE if tol is None else tol
    seed = config.DEFAULT_SEED if seed is None else seed
    n = algebra.dim

    exponents = tuple(homogeneous_exponents(n, partition.size))
    dual_exponents = tuple(homogeneous_exponents(n, partition.complement.size))
    largest = max(len(exponents), len(dual_exponents))
    if largest > config.MAX_MONOMIALS:
        raise ParameterError(f"P_{partition} needs {largest} monomials, above the cap {config.MAX_MONOMIALS}")

    rng = np.random.default_rng([seed, 0])
    nodes = _interpolation_nodes(algebra, 2 * largest + 10, rng)
    fit, condition = _fit_matrix(nodes, exponents)
    dual_fit, dual_condition = _fit_matrix(nodes, dual_exponents)
    weights = fischer_weights(exponents)

    rows: List[np.ndarray] = []
    ranks: List[int] = []
    stable = 0
    used = 0
    for i in range(budget):
        style = "identity" if i == 0 else "word"
        g = random_group_element(algebra, seed=[seed, i + 1], style=style)
        values = delta_power_batch(algebra, partition, g.act(nodes))
        rows.append((fit @ values) * weights)
        used = i + 1
        rank = _numerical_rank(np.array(rows), tol)
        stable = stable + 1 if ranks and rank == ranks[-1] else 0
        ranks.append(rank)
        if stable >= config.PM_STABILIZATION_SAMPLES:
            break
        if i and i % 20 == 0:
            logger.debug(f"P_{partition}: {i} samples, rank {rank}")
    else:
        raise BudgetError(
            f"Rank of P_{partition} did not stabilize within {budget} samples",
            tuple(ranks[-2:]),
        )

    _, singular, vh = np.linalg.svd(np.array(rows), full_matrices=False)
    dim = ranks[-1]
    weighted = vh[:dim]
    coefficients = weighted / weights[None, :]

    top = partition.parts[0]
    inverses = inverse_batch(algebra, nodes)
    dets = det_batch(algebra, nodes)
    basis_at_inverse = monomial_matrix(inverses, exponents) @ coefficients.T
    dual_values = (dets ** top)[:, None] * basis_at_inverse
    dual_coefficients = (dual_fit @ dual_values).T

    dual_at_inverse = monomial_matrix(inverses, dual_exponents) @ dual_coefficients.T
    returned = fit @ ((dets ** top)[:, None] * dual_at_inverse)
    pairing = weighted @ (returned.T * weights[None, :]).T

    space = PolySpace(
        partition=partition,
        algebra=algebra,
        exponents=exponents,
        coefficients=coefficients,
        dual_exponents=dual_exponents,
        dual_coefficients=dual_coefficients,
        fischer_gram=weighted @ weighted.T,
        pairing_matrix=pairing,
        samples_used=used,
        rank_history=tuple(ranks),
        nodes=nodes,
        fit=fit,
        dual_fit=dual_fit,
        condition_number=max(condition, dual_condition),
    )
    logger.info(f"Built P_{partition} for {algebra.key}: dim {dim} after {used} samples")
    return space


def _coefficient_vector(space: PolySpace, p: Polynomial, exponents: Sequence[Exponent]) -> np.ndarray:
    if p.n_vars != space.algebra.dim:
        raise ParameterError(f"Polynomial in {p.n_vars} variables, algebra has dimension {space.algebra.dim}")
    allowed = set(exponents)
    unknown = [alpha for alpha in p.terms if alpha not in allowed]
    if unknown:
        raise OutsideSpaceError(f"Polynomial has terms of the wrong degree, e.g. {unknown[0]}", float("inf"))
    return np.real(p.coefficient_vector(exponents))


def pi_m_matrix(g: GroupElement, space: PolySpace) -> np.ndarray:
    """
    Matrix of pi_m(g): p -> p(g^{-1} x) in the stored basis.

    Raises:
        ConditioningError: If the transformed basis leaves P_m numerically
    """
    inverse_nodes = g.inverse().act(space.nodes)
    transformed = space.fit @ (monomial_matrix(inverse_nodes, space.exponents) @ space.coefficients.T)
    weighted = transformed.T * fischer_weights(space.exponents)[None, :]
    matrix = space.weighted @ weighted.T
    residual = float(np.linalg.norm(weighted - matrix.T @ space.weighted))
    scale = max(1.0, float(np.linalg.norm(weighted)))
    if residual > 1e3 * config.INTERPOLATION_TOLERANCE * scale:
        raise ConditioningError(
            f"pi_m(g) leaves P_{space.partition} (residual {residual:.3e}, cond {space.condition_number:.3e})",
            space.condition_number,
        )
    return matrix


def contragredient(space: PolySpace, p: Polynomial, tol: Optional[float] = None) -> Polynomial:
    """
    P -> det(x)^{m_1} P(x^{-1}), mapping P_m onto P_{m^c}.

    Raises:
        OutsideSpaceError: If P is not in P_m
    """
    tol = 1e3 * config.INTERPOLATION_TOLERANCE if tol is None else tol
    coeffs = _coefficient_vector(space, p, space.exponents)
    weighted = coeffs * fischer_weights(space.exponents)
    norm = float(np.linalg.norm(weighted))
    if norm > 0:
        residual = float(np.linalg.norm(weighted - space.weighted.T @ (space.weighted @ weighted))) / norm
        if residual > tol:
            raise OutsideSpaceError(f"Polynomial is not in P_{space.partition} (relative residual {residual:.3e})", residual)
    top = space.partition.parts[0]
    nodes = space.nodes
    inverses = inverse_batch(space.algebra, nodes)
    values = det_batch(space.algebra, nodes) ** top * (monomial_matrix(inverses, space.exponents) @ coeffs)
    return _to_polynomial(space.algebra.dim, space.dual_exponents, space.dual_fit @ values)


def h_m_batch(space: PolySpace, coords: np.ndarray) -> np.ndarray:
    """Rows of (f_alpha(x))_alpha for a batch of points."""
    return monomial_matrix(np.atleast_2d(coords), space.dual_exponents) @ space.dual_coefficients.T


def h_m(space: PolySpace, x: Element) -> np.ndarray:
    """
    h_m(x) = sum_alpha f_alpha(x) e_alpha as a coordinate vector.

    Satisfies h_m(g x) = Det(g)^{r m_1 / n} pi_m(g) h_m(x).
    """
    return h_m_batch(space, x.coords[None, :])[0]


def change_of_basis(target: PolySpace, source: PolySpace) -> np.ndarray:
    """Matrix C with C[a, b] = <e^target_a, e^source_b>_F."""
    if target.exponents != source.exponents:
        raise ParameterError("Spaces of different degree or dimension")
    return target.weighted @ source.weighted.T


# ---------------------------------------------------------------------------
# Spherical weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalDecomposition:
    """Result of the spherical test: det shift and partition when spherical."""

    spherical: bool
    weight: Tuple[int, ...]
    det_shift: Optional[float] = None
    beta: Optional[float] = None
    partition: Optional[Partition] = None

    def __bool__(self) -> bool:
        return self.spherical


def is_spherical(weight: Sequence[int], algebra: Optional[AlgebraDescriptor] = None) -> SphericalDecomposition:
    """
    Test a weight m_1 <= ... <= m_r for sphericity.

    The weight is spherical iff all gaps are even. Then the representation is
    det^{m_1/2} (the character Det^beta with beta = (m_1/2) r/n) tensored with
    pi_m for the partition m_i = (w_{r+1-i} - w_1) / 2.
    """
    values = tuple(int(w) for w in weight)
    if not values:
        raise ParameterError("Empty weight")
    if any(a > b for a, b in zip(values, values[1:])):
        raise ParameterError(f"Weight {values} is not weakly increasing")
    if any((w - values[0]) % 2 for w in values):
        return SphericalDecomposition(spherical=False, weight=values)
    shift = values[0] / 2.0
    partition = Partition(tuple((w - values[0]) // 2 for w in reversed(values)))
    beta = shift * algebra.rank / algebra.dim if algebra is not None else None
    return SphericalDecomposition(spherical=True, weight=values, det_shift=shift, beta=beta, partition=partition)
