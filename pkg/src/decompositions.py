"""Spectral data, orbits, Peirce projectors, Frobenius maps, minors and the chart.

Frame, Peirce and minor indices are 1-based. Frobenius parameters z_(j) live in
the blocks V_jk with k > j, i.e. below the diagonal of the matrix models, so
that the real Gauss factorization of a symmetric matrix is its L D L^T form.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm

from src.config import config
from src.algebra_core import (
    MODEL_QUATERNIONIC,
    MODEL_SPIN,
    AlgebraDescriptor,
    Element,
    Family,
    GroupElement,
    JordanError,
    Operator,
    ParameterError,
    P_op,
    box_op,
    canonical_idempotent,
    coords_from_matrices,
    embed_batch,
    jordan_mul,
    l_matrix,
    make_algebra,
    symplectic_unit,
)

logger = logging.getLogger(__name__)


class SpectralError(JordanError):
    """Raised when an eigen-decomposition does not reconstruct the element."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class FrameError(JordanError):
    """Raised when idempotents do not form a complete orthogonal primitive system."""


class ChartDomainError(JordanError):
    """Raised when an element lies outside the domain of the Gauss chart."""

    def __init__(self, message: str, index: int) -> None:
        super().__init__(message)
        self.index = index


class PeirceBlockError(JordanError):
    """Raised when a vector is not in the Peirce blocks an operation requires."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class Frame:
    """Complete system of orthogonal primitive idempotents e_1..e_r."""

    idempotents: Tuple[Element, ...]

    @property
    def algebra(self) -> AlgebraDescriptor:
        return self.idempotents[0].algebra

    def __len__(self) -> int:
        return len(self.idempotents)

    def __getitem__(self, i: int) -> Element:
        """1-based access."""
        return self.idempotents[i - 1]

    def validate(self, tol: Optional[float] = None) -> "Frame":
        """
        Check the frame invariants.

        Raises:
            FrameError: If some invariant is violated
        """
        tol = config.TOLERANCE * 100 if tol is None else tol
        algebra = self.algebra
        if len(self.idempotents) != algebra.rank:
            raise FrameError(f"A frame needs {algebra.rank} idempotents, got {len(self.idempotents)}")
        for i, ei in enumerate(self.idempotents, start=1):
            for j, ej in enumerate(self.idempotents, start=1):
                target = ei if i == j else ei * 0.0
                if not jordan_mul(ei, ej).allclose(target, tol):
                    raise FrameError(f"e_{i} e_{j} differs from {'e_' + str(i) if i == j else '0'}")
            if abs(float(ei.coords @ algebra.unit_coords) - 1.0) > tol:
                raise FrameError(f"e_{i} is not primitive (trace differs from 1)")
        total = sum((e.coords for e in self.idempotents), np.zeros(algebra.dim))
        if np.linalg.norm(total - algebra.unit_coords) > tol * np.sqrt(algebra.rank):
            raise FrameError("Idempotents do not sum to the unit")
        return self


def canonical_frame(algebra: AlgebraDescriptor) -> Frame:
    """The diagonal frame of the coordinate model."""
    return Frame(tuple(canonical_idempotent(algebra, i) for i in range(1, algebra.rank + 1)))


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues (descending) and the matching frame."""

    frame: Frame
    eigenvalues: Tuple[float, ...]
    residual: float = 0.0

    def reconstruct(self) -> Element:
        algebra = self.frame.algebra
        coords = sum(
            (lam * e.coords for lam, e in zip(self.eigenvalues, self.frame.idempotents)),
            np.zeros(algebra.dim),
        )
        return Element(algebra, coords)

    @property
    def determinant(self) -> float:
        return float(np.prod(self.eigenvalues))


@dataclass(frozen=True)
class OrbitLabel:
    """Orbit S_{p,q}: rank p with q negative eigenvalues, in an algebra of rank r."""

    p: int
    q: int
    r: int

    def __post_init__(self) -> None:
        if not 0 <= self.q <= self.p <= self.r:
            raise ParameterError(f"Invalid orbit label ({self.p}, {self.q}) for rank {self.r}")

    @property
    def is_open(self) -> bool:
        return self.p == self.r

    @property
    def name(self) -> str:
        return f"Omega_{self.q}" if self.is_open else f"S_{{{self.p},{self.q}}}"


@dataclass(frozen=True)
class SignatureReport:
    """Rank, orbit label and boundary-ambiguity warnings of an element."""

    rank: int
    label: OrbitLabel
    eigenvalues: Tuple[float, ...]
    warnings: Tuple[str, ...] = ()

    @property
    def ambiguous(self) -> bool:
        return bool(self.warnings)


@dataclass(frozen=True)
class GaussFactorization:
    """x = tau(z_(1)) ... tau(z_(r-1)) (sum a_k e_k)."""

    frobenius_params: Tuple[Element, ...]
    diagonal: Tuple[float, ...]
    frame: Frame

    def recompose(self) -> Element:
        algebra = self.frame.algebra
        r = algebra.rank
        current = self.frame[r] * self.diagonal[r - 1]
        for j in range(r - 1, 0, -1):
            tau = frobenius(self.frobenius_params[j - 1], j, self.frame)
            current = tau(self.frame[j] * self.diagonal[j - 1] + current)
        return current


# ---------------------------------------------------------------------------
# Spectral decomposition and signature
# ---------------------------------------------------------------------------

def _quaternionic_projectors(vectors: np.ndarray, rank: int) -> List[np.ndarray]:
    """Split an eigenspace into rank-2 projectors stable under v -> J conj(v)."""
    j = symplectic_unit(rank)
    projectors = []
    remaining = vectors
    while remaining.shape[1] >= 2:
        v = remaining[:, 0]
        w = j @ np.conj(v)
        w = w - (np.conj(v) @ w) * v
        w = w / np.linalg.norm(w)
        pair = np.stack([v, w], axis=1)
        projectors.append(pair @ pair.conj().T)
        rest = remaining - pair @ (pair.conj().T @ remaining)
        u_mat, sing, _ = np.linalg.svd(rest, full_matrices=False)
        keep = remaining.shape[1] - 2
        remaining = u_mat[:, :keep] if keep > 0 else u_mat[:, :0]
    return projectors


def _cluster(values: np.ndarray, tol: float) -> List[List[int]]:
    groups: List[List[int]] = [[0]]
    for idx in range(1, len(values)):
        if abs(values[idx] - values[groups[-1][-1]]) <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return groups


def spectral(x: Element, tol: Optional[float] = None) -> SpectralData:
    """
    Spectral decomposition x = sum lambda_i e_i.

    Args:
        x: element
        tol: relative reconstruction tolerance

    Returns:
        SpectralData with eigenvalues sorted descending

    Raises:
        SpectralError: If the decomposition fails to reconstruct x
    """
    tol = config.TOLERANCE * 100 if tol is None else tol
    algebra = x.algebra
    scale = max(1.0, x.norm())

    if algebra.model == MODEL_SPIN:
        native = x.coords / np.sqrt(2.0)
        radius = float(np.linalg.norm(native[1:]))
        if radius > tol * scale:
            direction = native[1:] / radius
        else:
            direction = np.eye(algebra.dim - 1)[0]
        plus = np.sqrt(2.0) * 0.5 * np.concatenate([[1.0], direction])
        minus = np.sqrt(2.0) * 0.5 * np.concatenate([[1.0], -direction])
        eigenvalues = (native[0] + radius, native[0] - radius)
        frame = Frame((Element(algebra, plus), Element(algebra, minus)))
    else:
        matrix = embed_batch(algebra, x.coords[None, :])[0]
        values, vectors = np.linalg.eigh(matrix)
        groups = _cluster(values, tol * scale)
        pairs: List[Tuple[float, np.ndarray]] = []
        for group in groups:
            block = vectors[:, group]
            level = float(np.mean(values[group]))
            if algebra.model == MODEL_QUATERNIONIC:
                projectors = _quaternionic_projectors(block, algebra.rank)
            else:
                projectors = [np.outer(block[:, c], block[:, c].conj()) for c in range(block.shape[1])]
            pairs.extend((level, proj) for proj in projectors)
        pairs.sort(key=lambda item: -item[0])
        coords = coords_from_matrices(algebra, np.array([proj for _, proj in pairs]))
        eigenvalues = tuple(level for level, _ in pairs)
        frame = Frame(tuple(Element(algebra, c) for c in coords))

    data = SpectralData(frame=frame, eigenvalues=tuple(float(v) for v in eigenvalues))
    residual = float(np.linalg.norm(data.reconstruct().coords - x.coords))
    if residual > tol * scale or len(data.eigenvalues) != algebra.rank:
        raise SpectralError(f"Spectral reconstruction residual {residual:.3e}", residual)
    return SpectralData(frame=frame, eigenvalues=data.eigenvalues, residual=residual)


def rank_signature(x: Element, tol: Optional[float] = None) -> SignatureReport:
    """
    Rank and orbit label of an element.

    Eigenvalues with |lambda| <= tol * max(1, |x|) count as zero. An eigenvalue
    inside that band but clearly above round-off is reported as a boundary
    ambiguity warning instead of being silently resolved.
    """
    tol = config.ZERO_EIGENVALUE_THRESHOLD if tol is None else tol
    algebra = x.algebra
    scale = max(1.0, x.norm())
    threshold = tol * scale
    floor = 64 * np.finfo(float).eps * scale
    eigenvalues = spectral(x).eigenvalues
    p = sum(1 for lam in eigenvalues if abs(lam) > threshold)
    q = sum(1 for lam in eigenvalues if lam < -threshold)
    warnings = tuple(
        f"eigenvalue {lam:.3e} is within the zero threshold {threshold:.1e} but not at round-off level"
        for lam in eigenvalues
        if floor < abs(lam) <= threshold
    )
    for message in warnings:
        logger.warning(f"Boundary-ambiguous signature: {message}")
    return SignatureReport(rank=p, label=OrbitLabel(p, q, algebra.rank), eigenvalues=eigenvalues, warnings=warnings)


def orbit_point(algebra: AlgebraDescriptor, p: int, q: int) -> Element:
    """o_{p,q} = sum_{i<=p-q} e_i - sum_{i<=q} e_{p-q+i} in the canonical frame."""
    OrbitLabel(p, q, algebra.rank)
    coords = np.zeros(algebra.dim)
    for i in range(p - q):
        coords += algebra.frame_coords[i]
    for i in range(q):
        coords -= algebra.frame_coords[p - q + i]
    return Element(algebra, coords)


def orbit_indices_batch(eigenvalues: np.ndarray) -> np.ndarray:
    """Orbit index j (number of negative eigenvalues) for rows of eigenvalues."""
    return np.sum(eigenvalues < 0, axis=1)


# ---------------------------------------------------------------------------
# Peirce decomposition
# ---------------------------------------------------------------------------

def peirce_projectors(frame: Frame) -> Dict[Tuple[int, int], Operator]:
    """
    Orthogonal projectors onto the Peirce spaces V_ij, 1 <= i <= j <= r.

    V_ii is the range of P(e_i); V_ij (i < j) is the range of 4 L(e_i) L(e_j).

    Raises:
        FrameError: If the frame is invalid
    """
    frame.validate()
    algebra = frame.algebra
    lefts = [l_matrix(algebra, e.coords) for e in frame.idempotents]
    projectors: Dict[Tuple[int, int], Operator] = {}
    for i in range(1, algebra.rank + 1):
        projectors[(i, i)] = P_op(frame[i])
        for j in range(i + 1, algebra.rank + 1):
            projectors[(i, j)] = Operator(4.0 * lefts[i - 1] @ lefts[j - 1])
    return projectors


def _block_sum(projectors: Dict[Tuple[int, int], Operator], keys: Sequence[Tuple[int, int]], dim: int) -> np.ndarray:
    total = np.zeros((dim, dim))
    for key in keys:
        total += projectors[key].matrix
    return total


def w_blocks(rank: int, j: int) -> List[Tuple[int, int]]:
    """Keys of the blocks V_jk, k > j, holding the Frobenius parameter z_(j)."""
    return [(j, k) for k in range(j + 1, rank + 1)]


def complement_blocks(rank: int, j: int) -> List[Tuple[int, int]]:
    """Keys of the blocks V_kl with j < k <= l (the subalgebra left after step j)."""
    return [(k, l) for k in range(j + 1, rank + 1) for l in range(k, rank + 1)]


def block_basis(frame: Frame, keys: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Orthonormal basis (columns) of a sum of Peirce blocks."""
    algebra = frame.algebra
    projector = _block_sum(peirce_projectors(frame), keys, algebra.dim)
    values, vectors = np.linalg.eigh(0.5 * (projector + projector.T))
    return vectors[:, values > 0.5]


def frobenius(z: Element, j: int, frame: Optional[Frame] = None, tol: Optional[float] = None) -> GroupElement:
    """
    Frobenius transformation tau(z) = exp(2 z□e_j) for z in sum_{k>j} V_jk.

    Raises:
        PeirceBlockError: If z has a component outside the required blocks
    """
    frame = canonical_frame(z.algebra) if frame is None else frame
    algebra = z.algebra
    if not 1 <= j < max(algebra.rank, 2):
        raise ParameterError(f"Frobenius index {j} outside 1..{algebra.rank - 1}")
    tol = config.TOLERANCE * 100 if tol is None else tol
    projector = _block_sum(peirce_projectors(frame), w_blocks(algebra.rank, j), algebra.dim)
    residual = float(np.linalg.norm(z.coords - projector @ z.coords))
    if residual > tol * max(1.0, z.norm()):
        raise PeirceBlockError(f"z has a component of size {residual:.3e} outside the V_{j}k blocks", residual)
    generator = 2.0 * box_op(z, frame[j]).matrix
    return GroupElement.from_operator(Operator(expm(generator)), (f"tau_{j}",))


# ---------------------------------------------------------------------------
# Elimination kernel shared by the chart and the Gauss factorization
# ---------------------------------------------------------------------------

def _eliminate(
    coords: np.ndarray,
    j: int,
    frame: Frame,
    projectors: Dict[Tuple[int, int], Operator],
    tol: float,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    One elimination step: write x = tau(z)(u e_j + v) with z in W_j, v in V'_j.

    The V_jj component gives u, the W_j component equals u z, and the rest is
    v + u {z e_j z}.
    """
    algebra = frame.algebra
    e_j = frame[j]
    u = float(coords @ e_j.coords)
    if abs(u) <= tol * max(1.0, float(np.linalg.norm(coords))):
        raise ChartDomainError(f"Leading coefficient {u:.3e} vanishes at step {j}", j)
    x_w = _block_sum(projectors, w_blocks(algebra.rank, j), algebra.dim) @ coords
    rest = _block_sum(projectors, complement_blocks(algebra.rank, j), algebra.dim) @ coords
    z = Element(algebra, x_w / u)
    v = rest - u * box_op(z, e_j)(z).coords
    return u, z.coords, v


def gauss_factor(x: Element, frame: Optional[Frame] = None, tol: Optional[float] = None) -> GaussFactorization:
    """
    Real Gauss factorization of an element of the chart domain.

    Raises:
        ChartDomainError: If the leading minor Delta_i vanishes (first such i)
    """
    algebra = x.algebra
    frame = canonical_frame(algebra) if frame is None else frame
    tol = config.TOLERANCE * 100 if tol is None else tol
    projectors = peirce_projectors(frame)
    current = x.coords
    params: List[Element] = []
    diagonal: List[float] = []
    for j in range(1, algebra.rank):
        u, z, current = _eliminate(current, j, frame, projectors, tol)
        params.append(Element(algebra, z))
        diagonal.append(u)
    last = float(current @ frame[algebra.rank].coords)
    if abs(last) <= tol * max(1.0, x.norm()):
        raise ChartDomainError(f"Leading minor Delta_{algebra.rank} vanishes", algebra.rank)
    diagonal.append(last)
    return GaussFactorization(frobenius_params=tuple(params), diagonal=tuple(diagonal), frame=frame)


# ---------------------------------------------------------------------------
# Principal minors
# ---------------------------------------------------------------------------

def minor_indices(algebra: AlgebraDescriptor, k: int, dual: bool = False) -> List[int]:
    """Rows/columns of the native matrix spanned by e_1..e_k (or e_{r-k+1}..e_r)."""
    r = algebra.rank
    first = list(range(r - k, r)) if dual else list(range(k))
    if algebra.model == MODEL_QUATERNIONIC:
        return first + [r + i for i in first]
    return first


def minors_batch(algebra: AlgebraDescriptor, coords: np.ndarray, dual: bool = False) -> np.ndarray:
    """Delta_1..Delta_r (or the dual minors) of a batch of rows, shape (N, r)."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if algebra.model == MODEL_SPIN:
        sign = -1.0 if dual else 1.0
        first = (coords[:, 0] + sign * coords[:, 1]) / np.sqrt(2.0)
        last = (coords[:, 0] ** 2 - np.sum(coords[:, 1:] ** 2, axis=1)) / 2.0
        return np.stack([first, last], axis=1)
    matrices = embed_batch(algebra, coords)
    columns = []
    for k in range(1, algebra.rank + 1):
        idx = minor_indices(algebra, k, dual)
        block = matrices[:, idx][:, :, idx]
        if algebra.model == MODEL_QUATERNIONIC:
            columns.append(np.prod(np.linalg.eigvalsh(block)[:, ::2], axis=1))
        else:
            columns.append(np.real(np.linalg.det(block)))
    return np.stack(columns, axis=1)


def _check_minor_index(algebra: AlgebraDescriptor, k: int) -> None:
    if not 1 <= k <= algebra.rank:
        raise ParameterError(f"Minor index {k} outside 1..{algebra.rank}")


def minor_k(x: Element, k: int) -> float:
    """Principal minor Delta_k for the canonical frame."""
    _check_minor_index(x.algebra, k)
    return float(minors_batch(x.algebra, x.coords[None, :])[0, k - 1])


def dual_minor_k(x: Element, k: int) -> float:
    """Dual principal minor Delta*_k (trailing block)."""
    _check_minor_index(x.algebra, k)
    return float(minors_batch(x.algebra, x.coords[None, :], dual=True)[0, k - 1])


# ---------------------------------------------------------------------------
# The chart (u, z, v) -> exp(2 z□e_1)(u e_1 + v)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChartPoint:
    """Chart coordinates: u real, z in W = sum_k V_1k, v in V' = {x : e_1 x = 0}."""

    u: float
    z: Element
    v: Element


def _require_blocks(x: Element, keys: Sequence[Tuple[int, int]], label: str, tol: float) -> None:
    frame = canonical_frame(x.algebra)
    projector = _block_sum(peirce_projectors(frame), keys, x.algebra.dim)
    residual = float(np.linalg.norm(x.coords - projector @ x.coords))
    if residual > tol * max(1.0, x.norm()):
        raise PeirceBlockError(f"{label} has a component of size {residual:.3e} outside its blocks", residual)


def phi_chart(u: float, z: Element, v: Element, tol: Optional[float] = None) -> Element:
    """Phi(u, z, v) = exp(2 z□e_1)(u e_1 + v)."""
    tol = config.TOLERANCE * 100 if tol is None else tol
    algebra = z.algebra
    _require_blocks(z, w_blocks(algebra.rank, 1), "z", tol)
    _require_blocks(v, complement_blocks(algebra.rank, 1), "v", tol)
    tau = frobenius(z, 1, tol=tol)
    return tau(canonical_idempotent(algebra, 1) * float(u) + v)


def phi_chart_inverse(x: Element, tol: Optional[float] = None) -> ChartPoint:
    """
    Inverse chart on U = {x : x_11 != 0}.

    Raises:
        ChartDomainError: If x_11 is within tolerance of 0
    """
    tol = config.TOLERANCE * 100 if tol is None else tol
    frame = canonical_frame(x.algebra)
    u, z, v = _eliminate(x.coords, 1, frame, peirce_projectors(frame), tol)
    return ChartPoint(u=u, z=Element(x.algebra, z), v=Element(x.algebra, v))


@dataclass(frozen=True)
class ChartTables:
    """Precomputed linear data for batched inverse-chart evaluation."""

    e1: np.ndarray
    w_projector: np.ndarray
    rest_projector: np.ndarray
    triple_tensor: np.ndarray  # T[i, l, k] = <{b_i e_1 b_k}, b_l>
    w_basis: np.ndarray


def chart_tables(algebra: AlgebraDescriptor) -> ChartTables:
    frame = canonical_frame(algebra)
    projectors = peirce_projectors(frame)
    e1 = frame[1]
    basis = np.eye(algebra.dim)
    tensor = np.array([box_op(Element(algebra, basis[i]), e1).matrix for i in range(algebra.dim)])
    return ChartTables(
        e1=e1.coords.copy(),
        w_projector=_block_sum(projectors, w_blocks(algebra.rank, 1), algebra.dim),
        rest_projector=_block_sum(projectors, complement_blocks(algebra.rank, 1), algebra.dim),
        triple_tensor=tensor,
        w_basis=block_basis(frame, w_blocks(algebra.rank, 1)),
    )


def chart_inverse_batch(tables: ChartTables, coords: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized inverse chart: returns u (N,), z (N, n) and v (N, n)."""
    coords = np.atleast_2d(coords)
    u = coords @ tables.e1
    x_w = coords @ tables.w_projector.T
    rest = coords @ tables.rest_projector.T
    z = x_w / u[:, None]
    v = rest - u[:, None] * np.einsum("ni,nk,ilk->nl", z, z, tables.triple_tensor)
    return u, z, v


def subalgebra_embedding(algebra: AlgebraDescriptor) -> Tuple[AlgebraDescriptor, np.ndarray]:
    """
    The rank-(r-1) algebra V' = {x : e_1 x = 0} and its isometric embedding.

    Returns:
        (sub-algebra descriptor, n x n' matrix mapping sub coordinates into V)
        with the sub canonical frame sent to e_2..e_r
    """
    if algebra.rank < 2:
        raise ParameterError("The rank-one algebra has no proper Peirce subalgebra")
    if algebra.rank == 2:
        family = Family.SYMR if algebra.model == MODEL_SPIN else algebra.family
        sub = make_algebra(family, 1)
        return sub, algebra.frame_coords[1][:, None].copy()
    sub = make_algebra(algebra.family, algebra.rank - 1)
    r = algebra.rank
    size = algebra.native_size
    if algebra.model == MODEL_QUATERNIONIC:
        targets = [a + 1 for a in range(r - 1)] + [r + 1 + a for a in range(r - 1)]
    else:
        targets = [a + 1 for a in range(r - 1)]
    padded = np.zeros((sub.dim, size, size), dtype=complex)
    for k in range(sub.dim):
        padded[k][np.ix_(targets, targets)] = sub.basis[k]
    iota = coords_from_matrices(algebra, padded).T
    return sub, iota
