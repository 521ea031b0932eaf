"""Coordinate realization of the simple Euclidean Jordan algebras.

Every algebra is stored in real coordinates that are orthonormal for the trace
form <x, y> = (r/n) tr L(xy). The Jordan product is kept as a structure-constant
tensor C[i, j, k] = <b_i b_j, b_k>, so L, P and the box operator are computed
the same way for every family. Matrix families carry a Hermitian embedding
(SymR, HermC: r x r; HermH: the 2r x 2r complex model) used for determinants,
eigenvalues and inverses.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from src.config import config

logger = logging.getLogger(__name__)


class JordanError(Exception):
    """Base class for every error raised by the toolkit."""


class ParameterError(JordanError):
    """Raised when an algebra, partition or element is specified inconsistently."""


class AlgebraMismatchError(JordanError):
    """Raised when two operands live in different algebras."""


class SingularElementError(JordanError):
    """Raised when an element that must be invertible is singular."""

    def __init__(self, message: str, abs_det: float) -> None:
        super().__init__(message)
        self.abs_det = abs_det


class Family(str, Enum):
    """Families of simple Euclidean Jordan algebras handled by the toolkit."""

    SYMR = "symr"
    HERMC = "hermc"
    HERMH = "hermh"
    SPIN = "spin"

    @classmethod
    def parse(cls, name: Union[str, "Family"]) -> "Family":
        """Read a family from its name (case-insensitive)."""
        if isinstance(name, Family):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ParameterError(f"Unknown algebra family '{name}'; expected one of {config.FAMILIES}")


# Coordinate models: r = 1 collapses every family to the real line.
MODEL_SYMMETRIC = "symmetric"
MODEL_HERMITIAN = "hermitian"
MODEL_QUATERNIONIC = "quaternionic"
MODEL_SPIN = "spin"


@dataclass(frozen=True, eq=False)
class AlgebraDescriptor:
    """Immutable description of a simple Euclidean Jordan algebra in coordinates."""

    family: Family
    rank: int
    degree: int
    dim: int
    model: str
    basis: np.ndarray  # (n, M, M) Hermitian matrices, or (n, n) native Spin vectors
    multiplicity: int  # eigenvalue multiplicity of the matrix embedding
    structure: np.ndarray = field(repr=False)
    unit_coords: np.ndarray = field(repr=False)
    frame_coords: np.ndarray = field(repr=False)

    @property
    def key(self) -> Tuple[str, int, int]:
        """Hashable identity of the algebra."""
        return (self.family.value, self.rank, self.dim)

    @property
    def is_matrix_model(self) -> bool:
        return self.model != MODEL_SPIN

    @property
    def native_size(self) -> int:
        """Size of the embedding matrices (0 for Spin factors)."""
        return 0 if self.model == MODEL_SPIN else self.basis.shape[1]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, AlgebraDescriptor) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def describe(self) -> dict:
        """Summary used by reports."""
        return {
            "family": self.family.value,
            "rank": self.rank,
            "degree": self.degree,
            "dim": self.dim,
            "model": self.model,
        }


@dataclass(frozen=True, eq=False)
class Element:
    """A point of V given by its orthonormal coordinates."""

    algebra: AlgebraDescriptor
    coords: np.ndarray

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if coords.shape[0] != self.algebra.dim:
            raise ParameterError(
                f"Element needs {self.algebra.dim} coordinates, got {coords.shape[0]}"
            )
        object.__setattr__(self, "coords", coords)

    def _check(self, other: "Element") -> None:
        if other.algebra != self.algebra:
            raise AlgebraMismatchError(f"Operands live in {self.algebra.key} and {other.algebra.key}")

    def __add__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.algebra, self.coords + other.coords)

    def __sub__(self, other: "Element") -> "Element":
        self._check(other)
        return Element(self.algebra, self.coords - other.coords)

    def __neg__(self) -> "Element":
        return Element(self.algebra, -self.coords)

    def __mul__(self, scalar: float) -> "Element":
        return Element(self.algebra, float(scalar) * self.coords)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "Element":
        return Element(self.algebra, self.coords / float(scalar))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def allclose(self, other: "Element", tol: Optional[float] = None) -> bool:
        """Coordinate comparison with relative tolerance."""
        self._check(other)
        tol = config.TOLERANCE if tol is None else tol
        scale = max(1.0, self.norm(), other.norm())
        return bool(np.linalg.norm(self.coords - other.coords) <= tol * scale)

    def __repr__(self) -> str:
        return f"Element({self.algebra.family.value}, r={self.algebra.rank}, coords={np.round(self.coords, 6).tolist()})"


@dataclass(frozen=True, eq=False)
class Operator:
    """A linear map of V written in the orthonormal coordinates."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ParameterError(f"Operator matrix must be square, got shape {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    def __call__(self, x: Element) -> Element:
        return Element(x.algebra, self.matrix @ x.coords)

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix - other.matrix)

    def __mul__(self, scalar: float) -> "Operator":
        return Operator(float(scalar) * self.matrix)

    __rmul__ = __mul__

    @property
    def T(self) -> "Operator":
        return Operator(self.matrix.T)

    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def allclose(self, other: "Operator", tol: Optional[float] = None) -> bool:
        tol = config.TOLERANCE if tol is None else tol
        scale = max(1.0, float(np.max(np.abs(self.matrix))), float(np.max(np.abs(other.matrix))))
        return bool(np.max(np.abs(self.matrix - other.matrix)) <= tol * scale)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of the structure group: operator, its Det and the generator word."""

    op: Operator
    det_v: float
    factored_form: Tuple[str, ...] = ()

    @classmethod
    def from_operator(cls, op: Operator, factored_form: Sequence[str] = ()) -> "GroupElement":
        return cls(op=op, det_v=op.determinant(), factored_form=tuple(factored_form))

    @classmethod
    def identity(cls, algebra: AlgebraDescriptor) -> "GroupElement":
        return cls(op=Operator(np.eye(algebra.dim)), det_v=1.0, factored_form=())

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    def __call__(self, x: Element) -> Element:
        return self.op(x)

    def act(self, coords: np.ndarray) -> np.ndarray:
        """Apply to a batch of coordinate rows."""
        return np.asarray(coords) @ self.op.matrix.T

    def compose(self, other: "GroupElement") -> "GroupElement":
        """Return self o other."""
        return GroupElement(
            op=self.op @ other.op,
            det_v=self.det_v * other.det_v,
            factored_form=self.factored_form + other.factored_form,
        )

    def inverse(self) -> "GroupElement":
        inv = np.linalg.inv(self.op.matrix)
        word = tuple(f"inv({g})" for g in reversed(self.factored_form))
        return GroupElement(op=Operator(inv), det_v=1.0 / self.det_v, factored_form=word)

    def adjoint(self) -> "GroupElement":
        """Transpose for the trace form (g* in the group)."""
        return GroupElement(op=self.op.T, det_v=self.det_v, factored_form=tuple(f"adj({g})" for g in self.factored_form))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def _unit_matrix(size: int, i: int, j: int) -> sympy.Matrix:
    matrix = sympy.zeros(size, size)
    matrix[i, j] = 1
    return matrix


@lru_cache(maxsize=None)
def exact_basis(model: str, rank: int, dim: int) -> Tuple[sympy.Matrix, ...]:
    """
    Exact basis of a coordinate model, orthonormal for the trace form.

    Matrix models return Hermitian sympy matrices, diagonal elements first and
    then one block of d matrices per pair i < j. Spin factors return the native
    (lambda, u) vectors as column matrices.

    Args:
        model: coordinate model name
        rank: rank r
        dim: dimension n (only read for Spin factors)

    Returns:
        Tuple of sympy matrices
    """
    half = sympy.sqrt(2) / 2
    if model == MODEL_SPIN:
        return tuple(half * _unit_matrix(dim, k, 0)[:, 0] for k in range(dim))

    basis: List[sympy.Matrix] = []
    if model == MODEL_QUATERNIONIC:
        size = 2 * rank
        for i in range(rank):
            basis.append(_unit_matrix(size, i, i) + _unit_matrix(size, rank + i, rank + i))
        for i in range(rank):
            for j in range(i + 1, rank):
                sym = _unit_matrix(rank, i, j) + _unit_matrix(rank, j, i)
                skew = _unit_matrix(rank, i, j) - _unit_matrix(rank, j, i)
                for a_block, b_block in (
                    (sym, sympy.zeros(rank, rank)),
                    (sympy.I * skew, sympy.zeros(rank, rank)),
                    (sympy.zeros(rank, rank), skew),
                    (sympy.zeros(rank, rank), sympy.I * skew),
                ):
                    top = a_block.row_join(b_block)
                    bottom = (-b_block.conjugate()).row_join(a_block.conjugate())
                    basis.append(half * top.col_join(bottom))
        return tuple(basis)

    for i in range(rank):
        basis.append(_unit_matrix(rank, i, i))
    for i in range(rank):
        for j in range(i + 1, rank):
            basis.append(half * (_unit_matrix(rank, i, j) + _unit_matrix(rank, j, i)))
            if model == MODEL_HERMITIAN:
                basis.append(half * sympy.I * (_unit_matrix(rank, i, j) - _unit_matrix(rank, j, i)))
    return tuple(basis)


def _to_complex_array(matrix: sympy.Matrix) -> np.ndarray:
    return np.array([[complex(entry) for entry in row] for row in matrix.tolist()], dtype=complex)


def _spin_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Native Spin product (lambda, u)(mu, v) = (lambda mu + (u, v), lambda v + mu u)."""
    out = np.empty_like(a)
    out[0] = a[0] * b[0] + a[1:] @ b[1:]
    out[1:] = a[0] * b[1:] + b[0] * a[1:]
    return out


def _structure_constants(model: str, basis: np.ndarray, multiplicity: int) -> np.ndarray:
    if model == MODEL_SPIN:
        n = basis.shape[0]
        tensor = np.empty((n, n, n))
        for i in range(n):
            for j in range(n):
                # native inner product is 2 (a . b)
                tensor[i, j] = 2.0 * (basis @ _spin_product(basis[i], basis[j]))
        return tensor
    products = np.einsum("iab,jbc->ijac", basis, basis)
    jordan = 0.5 * (products + products.transpose(1, 0, 2, 3))
    return np.einsum("ijab,kba->ijk", jordan, basis).real / multiplicity


def make_algebra(
    family: Union[str, Family],
    rank: Optional[int] = None,
    n_opt: Optional[int] = None,
) -> AlgebraDescriptor:
    """
    Build the coordinate model of a simple Euclidean Jordan algebra.

    Args:
        family: one of symr, hermc, hermh, spin
        rank: rank r (forced to 2 for Spin factors)
        n_opt: dimension; required for Spin factors, checked otherwise

    Returns:
        AlgebraDescriptor with orthonormal basis

    Raises:
        ParameterError: If the rank/dimension combination is invalid
    """
    fam = Family.parse(family)
    if fam is Family.SPIN:
        if rank not in (None, 2):
            raise ParameterError(f"Spin factors have rank 2, got rank {rank}")
        if n_opt is None or int(n_opt) < config.MIN_SPIN_DIM:
            raise ParameterError(f"Spin factors need dimension n >= {config.MIN_SPIN_DIM}, got {n_opt}")
        r, n, d, model, multiplicity = 2, int(n_opt), int(n_opt) - 2, MODEL_SPIN, 0
    else:
        if rank is None or int(rank) < 1:
            raise ParameterError(f"Rank must be a positive integer, got {rank}")
        r = int(rank)
        if r > config.MAX_RANK:
            raise ParameterError(f"Rank {r} exceeds the configured maximum {config.MAX_RANK}")
        if fam is Family.HERMH and r > 1 and not config.ENABLE_HERMH:
            raise ParameterError("Quaternionic Hermitian matrices are disabled in this configuration")
        if r == 1:
            d, model, multiplicity = 0, MODEL_SYMMETRIC, 1
        else:
            d = config.peirce_degree(fam.value)
            model = {
                Family.SYMR: MODEL_SYMMETRIC,
                Family.HERMC: MODEL_HERMITIAN,
                Family.HERMH: MODEL_QUATERNIONIC,
            }[fam]
            multiplicity = 2 if model == MODEL_QUATERNIONIC else 1
        n = r + d * r * (r - 1) // 2
        if n_opt is not None and int(n_opt) != n:
            raise ParameterError(f"{fam.value} of rank {r} has dimension {n}, not {n_opt}")

    exact = exact_basis(model, r, n)
    if model == MODEL_SPIN:
        basis = np.array([[float(v) for v in vector] for vector in exact])
    else:
        basis = np.array([_to_complex_array(matrix) for matrix in exact])
    structure = _structure_constants(model, basis, multiplicity)

    if model == MODEL_SPIN:
        unit_coords = np.zeros(n)
        unit_coords[0] = np.sqrt(2.0)
        frame_coords = np.zeros((2, n))
        frame_coords[0, :2] = (1 / np.sqrt(2.0), 1 / np.sqrt(2.0))
        frame_coords[1, :2] = (1 / np.sqrt(2.0), -1 / np.sqrt(2.0))
    else:
        unit_coords = np.zeros(n)
        unit_coords[:r] = 1.0
        frame_coords = np.eye(n)[:r]

    descriptor = AlgebraDescriptor(
        family=fam,
        rank=r,
        degree=d,
        dim=n,
        model=model,
        basis=basis,
        multiplicity=multiplicity,
        structure=structure,
        unit_coords=unit_coords,
        frame_coords=frame_coords,
    )
    logger.debug(f"Built algebra {descriptor.describe()}")
    return descriptor


# ---------------------------------------------------------------------------
# Elements and native matrices
# ---------------------------------------------------------------------------

def element(algebra: AlgebraDescriptor, coords: Sequence[float]) -> Element:
    return Element(algebra, np.asarray(coords, dtype=float))


def unit(algebra: AlgebraDescriptor) -> Element:
    """The unit element e."""
    return Element(algebra, algebra.unit_coords.copy())


def canonical_idempotent(algebra: AlgebraDescriptor, i: int) -> Element:
    """The i-th idempotent (1-based) of the canonical frame."""
    if not 1 <= i <= algebra.rank:
        raise ParameterError(f"Frame index {i} outside 1..{algebra.rank}")
    return Element(algebra, algebra.frame_coords[i - 1].copy())


def embed_batch(algebra: AlgebraDescriptor, coords: np.ndarray) -> np.ndarray:
    """Native matrices of a batch of coordinate rows (matrix models only)."""
    if not algebra.is_matrix_model:
        raise ParameterError("Spin factors have no matrix embedding")
    matrices = np.einsum("nk,kab->nab", np.asarray(coords, dtype=float), algebra.basis)
    return matrices.real if algebra.model == MODEL_SYMMETRIC else matrices


def to_matrix(x: Element) -> np.ndarray:
    """Native matrix of an element (the 2r x 2r complex model for HermH)."""
    return embed_batch(x.algebra, x.coords[None, :])[0]


def coords_from_matrices(algebra: AlgebraDescriptor, matrices: np.ndarray) -> np.ndarray:
    """Coordinates of a batch of native matrices (projection on the basis)."""
    values = np.einsum("kab,nba->nk", algebra.basis, np.asarray(matrices, dtype=complex))
    return values.real / algebra.multiplicity


def from_matrix(algebra: AlgebraDescriptor, matrix: Union[Sequence, np.ndarray]) -> Element:
    """
    Element with the given native matrix.

    Raises:
        ParameterError: If the matrix is not an element of the algebra
    """
    target = np.asarray(matrix, dtype=complex)
    size = algebra.native_size
    if target.shape != (size, size):
        raise ParameterError(f"Expected a {size}x{size} matrix, got shape {target.shape}")
    coords = coords_from_matrices(algebra, target[None])[0]
    rebuilt = embed_batch(algebra, coords[None])[0]
    residual = float(np.max(np.abs(rebuilt - target)))
    if residual > config.TOLERANCE * max(1.0, float(np.max(np.abs(target)))) * 10:
        raise ParameterError(f"Matrix is not an element of {algebra.family.value}: residual {residual:.3e}")
    return Element(algebra, coords)


def spin_element(algebra: AlgebraDescriptor, lam: float, u: Sequence[float]) -> Element:
    """Element (lambda, u) of a Spin factor."""
    if algebra.model != MODEL_SPIN:
        raise ParameterError("spin_element needs a Spin factor")
    native = np.concatenate([[float(lam)], np.asarray(u, dtype=float)])
    if native.shape[0] != algebra.dim:
        raise ParameterError(f"Spin vector u must have {algebra.dim - 1} entries")
    return Element(algebra, np.sqrt(2.0) * native)


def spin_parts(x: Element) -> Tuple[float, np.ndarray]:
    """Native (lambda, u) of a Spin element."""
    native = x.coords / np.sqrt(2.0)
    return float(native[0]), native[1:].copy()


# ---------------------------------------------------------------------------
# Products and operators
# ---------------------------------------------------------------------------

def _same(x: Element, y: Element) -> AlgebraDescriptor:
    if x.algebra != y.algebra:
        raise AlgebraMismatchError(f"Operands live in {x.algebra.key} and {y.algebra.key}")
    return x.algebra


def jordan_mul(x: Element, y: Element) -> Element:
    """Jordan product x o y."""
    algebra = _same(x, y)
    return Element(algebra, np.einsum("i,j,ijk->k", x.coords, y.coords, algebra.structure))


def square(x: Element) -> Element:
    return jordan_mul(x, x)


def l_matrix(algebra: AlgebraDescriptor, coords: np.ndarray) -> np.ndarray:
    """Matrix of L(x) for raw coordinates."""
    return np.einsum("i,ijk->kj", coords, algebra.structure)


def L_op(x: Element) -> Operator:
    """Multiplication operator L(x)."""
    return Operator(l_matrix(x.algebra, x.coords))


def P_op(x: Element) -> Operator:
    """Quadratic representation P(x) = 2 L(x)^2 - L(x^2)."""
    lx = l_matrix(x.algebra, x.coords)
    return Operator(2.0 * lx @ lx - l_matrix(x.algebra, square(x).coords))


def box_op(x: Element, y: Element) -> Operator:
    """Box operator x□y = L(xy) + [L(x), L(y)]."""
    algebra = _same(x, y)
    lx = l_matrix(algebra, x.coords)
    ly = l_matrix(algebra, y.coords)
    return Operator(l_matrix(algebra, jordan_mul(x, y).coords) + lx @ ly - ly @ lx)


def triple(x: Element, y: Element, z: Element) -> Element:
    """Jordan triple product {x y z} = (x□y) z."""
    return box_op(x, y)(z)


def inner(x: Element, y: Element) -> float:
    _same(x, y)
    return float(x.coords @ y.coords)


def trace_form(x: Element, y: Element) -> float:
    """(r/n) tr L(xy); equals inner(x, y) for the stored orthonormal basis."""
    algebra = _same(x, y)
    return float(algebra.rank / algebra.dim * np.trace(l_matrix(algebra, jordan_mul(x, y).coords)))


def matrix_trace_form(x: Element, y: Element) -> float:
    """Re tr(XY) of the native matrices, scaled by the embedding multiplicity."""
    algebra = _same(x, y)
    if not algebra.is_matrix_model:
        lam, u = spin_parts(x)
        mu, v = spin_parts(y)
        return 2.0 * (lam * mu + float(u @ v))
    product = to_matrix(x) @ to_matrix(y)
    return float(np.trace(product).real / algebra.multiplicity)


def trace(x: Element) -> float:
    """Jordan trace, the sum of the eigenvalues."""
    return float(x.coords @ x.algebra.unit_coords)


# ---------------------------------------------------------------------------
# Determinants, eigenvalues and inverses
# ---------------------------------------------------------------------------

def pfaffian(matrix):
    """
    Pfaffian of an even-dimensional antisymmetric matrix by expansion along
    the first row. Works for numpy arrays and sympy matrices.
    """
    size = matrix.shape[0]
    if size == 0:
        return 1
    if size % 2:
        return 0
    total = 0
    rest = list(range(1, size))
    for position, j in enumerate(rest):
        keep = [k for k in rest if k != j]
        if isinstance(matrix, np.ndarray):
            minor = matrix[np.ix_(keep, keep)]
        else:
            minor = matrix.extract(keep, keep)
        total += (-1) ** position * matrix[0, j] * pfaffian(minor)
    return total


def symplectic_unit(rank: int) -> np.ndarray:
    """J = [[0, I], [-I, 0]]."""
    eye = np.eye(rank)
    zero = np.zeros((rank, rank))
    return np.block([[zero, eye], [-eye, zero]])


def quaternionic_det(matrix: np.ndarray) -> float:
    """det x = Pf(J x J) / Pf(J) for the alternating model x = -X J."""
    rank = matrix.shape[0] // 2
    j = symplectic_unit(rank)
    alternating = -matrix @ j
    value = pfaffian(j @ alternating @ j) / pfaffian(j)
    return float(np.real(value))


def eigenvalues_batch(algebra: AlgebraDescriptor, coords: np.ndarray) -> np.ndarray:
    """Eigenvalues (descending) of a batch of coordinate rows, shape (N, r)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if algebra.model == MODEL_SPIN:
        native = coords / np.sqrt(2.0)
        radius = np.linalg.norm(native[:, 1:], axis=1)
        return np.stack([native[:, 0] + radius, native[:, 0] - radius], axis=1)
    matrices = embed_batch(algebra, coords)
    values = np.linalg.eigvalsh(matrices)
    if algebra.model == MODEL_QUATERNIONIC:
        values = values[:, ::2]
    return values[:, ::-1]


def det_batch(algebra: AlgebraDescriptor, coords: np.ndarray) -> np.ndarray:
    """Jordan determinant of a batch of coordinate rows."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if algebra.model == MODEL_SPIN:
        return (coords[:, 0] ** 2 - np.sum(coords[:, 1:] ** 2, axis=1)) / 2.0
    if algebra.model == MODEL_QUATERNIONIC:
        return np.prod(eigenvalues_batch(algebra, coords), axis=1)
    return np.real(np.linalg.det(embed_batch(algebra, coords)))


def det(x: Element) -> float:
    """Jordan determinant, homogeneous of degree r with det(e) = 1."""
    if x.algebra.model == MODEL_QUATERNIONIC:
        return quaternionic_det(to_matrix(x))
    return float(det_batch(x.algebra, x.coords[None, :])[0])


def _singular_threshold(x: Element, tol: Optional[float]) -> float:
    tol = config.TOLERANCE if tol is None else tol
    return tol * max(1.0, x.norm()) ** x.algebra.rank


def inverse(x: Element, tol: Optional[float] = None) -> Element:
    """
    Jordan inverse, the solution z of P(x) z = x.

    Raises:
        SingularElementError: If |det x| is below tolerance
    """
    value = det(x)
    if abs(value) <= _singular_threshold(x, tol):
        raise SingularElementError(f"Element is singular: |det x| = {abs(value):.3e}", abs(value))
    z = np.linalg.solve(P_op(x).matrix, x.coords)
    return Element(x.algebra, z)


def inverse_batch(algebra: AlgebraDescriptor, coords: np.ndarray) -> np.ndarray:
    """Inverses of a batch of (invertible) coordinate rows."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if algebra.model == MODEL_SPIN:
        determinant = det_batch(algebra, coords)
        flipped = coords.copy()
        flipped[:, 1:] *= -1.0
        return flipped / determinant[:, None]
    matrices = embed_batch(algebra, coords)
    return coords_from_matrices(algebra, np.linalg.inv(matrices))
