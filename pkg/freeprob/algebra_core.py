"""
Concrete matrix models of D ⊂ B ⊂ M with conditional expectations.

Every algebra is a span of explicit N×N complex matrices. Coordinates of an
element are taken by least squares against the flattened basis, so "lies in
the algebra" is the decidable predicate "least-squares residual below
tolerance".
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .conf import setting
from .exceptions import ConfigurationError, DimensionMismatchError

logger = logging.getLogger(__name__)


class MatrixAlgebra:
    """A unital subalgebra of M_N given by a basis of N×N matrices."""

    def __init__(self, basis, name: str = '', validate: bool = True):
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise DimensionMismatchError(f"Basis must have shape (d, N, N), got {basis.shape}")
        self.basis = basis
        self.name = name
        if validate:
            self.validate()

    def __repr__(self):
        return f"MatrixAlgebra({self.name or 'unnamed'}, dim={self.dim}, N={self.ambient_dim})"

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def identity(self) -> np.ndarray:
        return np.eye(self.ambient_dim, dtype=complex)

    @cached_property
    def _flat(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1).T

    @cached_property
    def _pinv(self) -> np.ndarray:
        return np.linalg.pinv(self._flat)

    @cached_property
    def unit_coordinates(self) -> np.ndarray:
        return self.coordinates(self.identity)

    @cached_property
    def structure_constants(self) -> np.ndarray:
        """C[a, b, c] = c-th coordinate of basis[a] @ basis[b]."""
        products = np.einsum('aij,bjk->abik', self.basis, self.basis)
        return self.coordinates(products)

    def coordinates(self, x) -> np.ndarray:
        """Coordinates of one matrix or a stack (..., N, N) of matrices."""
        x = np.asarray(x, dtype=complex)
        if x.shape[-2:] != (self.ambient_dim, self.ambient_dim):
            raise DimensionMismatchError(
                f"Expected trailing shape {(self.ambient_dim,) * 2}, got {x.shape}")
        flat = x.reshape(x.shape[:-2] + (-1,))
        return flat @ self._pinv.T

    def element(self, coords) -> np.ndarray:
        """Matrix (or stack of matrices) with the given coordinates."""
        return np.tensordot(np.asarray(coords, dtype=complex), self.basis, axes=(-1, 0))

    def residual(self, x) -> np.ndarray:
        """Entrywise max distance of ``x`` from the span (per matrix for stacks)."""
        x = np.asarray(x, dtype=complex)
        diff = x - self.element(self.coordinates(x))
        return np.abs(diff).max(axis=(-2, -1)) if diff.size else np.zeros(x.shape[:-2])

    def contains(self, x, tolerance: Optional[float] = None) -> bool:
        tolerance = setting('TOLERANCE') if tolerance is None else tolerance
        return bool(np.all(self.residual(x) < tolerance))

    def validate(self, tolerance: Optional[float] = None) -> None:
        tolerance = setting('TOLERANCE') if tolerance is None else tolerance
        if np.linalg.matrix_rank(self._flat, tol=tolerance) < self.dim:
            raise ConfigurationError(f"{self!r}: basis is linearly dependent")
        if not self.contains(self.identity, tolerance):
            raise ConfigurationError(f"{self!r}: identity is not in the span")
        products = np.einsum('aij,bjk->abik', self.basis, self.basis)
        if not self.contains(products, max(tolerance, 1e-9)):
            raise ConfigurationError(f"{self!r}: span is not closed under multiplication")


def full_matrix_algebra(n: int) -> MatrixAlgebra:
    basis = np.zeros((n * n, n, n), dtype=complex)
    for index in range(n * n):
        basis[index, index // n, index % n] = 1
    return MatrixAlgebra(basis, name=f'M_{n}', validate=False)


def block_diagonal_algebra(block_sizes: Sequence[int]) -> MatrixAlgebra:
    n = sum(block_sizes)
    units = []
    offset = 0
    for size in block_sizes:
        for i in range(size):
            for j in range(size):
                unit = np.zeros((n, n), dtype=complex)
                unit[offset + i, offset + j] = 1
                units.append(unit)
        offset += size
    return MatrixAlgebra(np.array(units), name=f'blocks{list(block_sizes)}', validate=False)


def block_scalar_algebra(block_sizes: Sequence[int], groups: Sequence[Sequence[int]]) -> MatrixAlgebra:
    """Span of the projections onto groups of blocks (scalars when there is one group)."""
    n = sum(block_sizes)
    offsets = np.cumsum([0] + list(block_sizes))
    projections = []
    for group in groups:
        projection = np.zeros((n, n), dtype=complex)
        for block in group:
            for i in range(offsets[block], offsets[block + 1]):
                projection[i, i] = 1
        projections.append(projection)
    name = 'scalars' if len(groups) == 1 else f'groups{[list(g) for g in groups]}'
    return MatrixAlgebra(np.array(projections), name=name, validate=False)


def scalar_algebra(n: int) -> MatrixAlgebra:
    return block_scalar_algebra([n], [[0]])


class ConditionalExpectation:
    """A linear map source → target given by its images of the source basis."""

    def __init__(self, source: MatrixAlgebra, target: MatrixAlgebra, images, name: str = ''):
        images = np.asarray(images, dtype=complex)
        if images.shape != source.basis.shape:
            raise DimensionMismatchError(
                f"Images must match the source basis shape {source.basis.shape}, got {images.shape}")
        if source.ambient_dim != target.ambient_dim:
            raise DimensionMismatchError("Source and target live in different matrix sizes")
        self.source = source
        self.target = target
        self.images = images
        self.name = name

    def __repr__(self):
        return f"ConditionalExpectation({self.name or 'unnamed'}: {self.source.name} -> {self.target.name})"

    @classmethod
    def from_function(cls, source, target, function: Callable[[np.ndarray], np.ndarray], name=''):
        return cls(source, target, np.array([function(b) for b in source.basis]), name=name)

    @cached_property
    def coordinate_matrix(self) -> np.ndarray:
        """Matrix taking source coordinates to target coordinates."""
        return self.target.coordinates(self.images).T

    @cached_property
    def projection(self) -> np.ndarray:
        """The map in source coordinates, for a target contained in the source."""
        inclusion = self.source.coordinates(self.target.basis).T
        return inclusion @ self.coordinate_matrix

    def __call__(self, x) -> np.ndarray:
        coords = self.source.coordinates(x)
        return np.tensordot(coords, self.images, axes=(-1, 0))

    def compose(self, inner: 'ConditionalExpectation', name: str = '') -> 'ConditionalExpectation':
        """self ∘ inner."""
        return ConditionalExpectation(inner.source, self.target, self(inner.images),
                                      name=name or f'{self.name}∘{inner.name}')

    def restrict(self, source: MatrixAlgebra, name: str = '') -> 'ConditionalExpectation':
        return ConditionalExpectation(source, self.target, self(source.basis), name=name or self.name)


def identity_expectation(algebra: MatrixAlgebra) -> ConditionalExpectation:
    return ConditionalExpectation(algebra, algebra, algebra.basis.copy(), name='id')


def normalized_trace(algebra: MatrixAlgebra) -> ConditionalExpectation:
    n = algebra.ambient_dim
    return ConditionalExpectation.from_function(
        algebra, scalar_algebra(n), lambda x: np.trace(x) / n * np.eye(n), name='tr')


@dataclass
class ExpectationReport:
    unitality: float
    idempotence: float
    range: float
    bimodule: float
    tolerance: float

    @property
    def violations(self) -> Dict[str, float]:
        return {'unitality': self.unitality, 'idempotence': self.idempotence,
                'range': self.range, 'bimodule': self.bimodule}

    @property
    def passed(self) -> bool:
        return all(v < self.tolerance for v in self.violations.values())

    def to_json(self):
        return {**self.violations, 'tolerance': self.tolerance, 'passed': self.passed}


def check_conditional_expectation(expectation: ConditionalExpectation,
                                  tolerance: Optional[float] = None) -> ExpectationReport:
    """Measure how far ``expectation`` is from a unital, idempotent, bimodular projection."""
    tolerance = setting('TOLERANCE') if tolerance is None else tolerance
    source, target = expectation.source, expectation.target

    unitality = float(np.abs(expectation(source.identity) - source.identity).max())
    images = expectation.images
    idempotence = float(np.abs(expectation(images) - images).max())
    range_violation = float(target.residual(images).max())

    tb = target.basis
    # E(b m b') against b E(m) b' for basis b, b' of the target and m of the source.
    left = np.einsum('aij,mjk,ckl->amcil', tb, source.basis, tb)
    lhs = expectation(left)
    rhs = np.einsum('aij,mjk,ckl->amcil', tb, images, tb)
    bimodule = float(np.abs(lhs - rhs).max())

    report = ExpectationReport(unitality, idempotence, range_violation, bimodule, tolerance)
    if not report.passed:
        logger.debug("%r fails the conditional expectation checks: %s", expectation, report.violations)
    return report


@dataclass
class FaithfulnessResult:
    faithful: bool
    rank: int
    witness: Optional[np.ndarray] = None

    def __bool__(self):
        return self.faithful


def check_faithfulness(expectation: ConditionalExpectation,
                       tolerance: Optional[float] = None) -> FaithfulnessResult:
    """Is b1 ↦ (b2 ↦ F(b1 b2)) injective? On failure return a kernel element b1."""
    tolerance = setting('TOLERANCE') if tolerance is None else tolerance
    source = expectation.source
    products = np.einsum('aij,bjk->abik', source.basis, source.basis)
    values = expectation.target.coordinates(expectation(products))
    gram = values.reshape(source.dim, -1)
    rank = int(np.linalg.matrix_rank(gram, tol=max(tolerance, 1e-12)))
    if rank == source.dim:
        return FaithfulnessResult(True, rank)
    kernel = null_space(gram.T, rcond=max(tolerance, 1e-12))
    witness = source.element(kernel[:, 0])
    witness = witness / np.abs(witness).max()
    return FaithfulnessResult(False, rank, witness)


@dataclass
class AlgebraContext:
    """The inclusion D ⊂ B ⊂ M with E: M → B and F: B → D."""
    M: MatrixAlgebra
    B: MatrixAlgebra
    D: MatrixAlgebra
    E: ConditionalExpectation
    F: ConditionalExpectation
    description: dict = field(default_factory=dict)

    @cached_property
    def tau(self) -> ConditionalExpectation:
        """F∘E as a conditional expectation M → D."""
        return self.F.compose(self.E, name='F∘E')

    @cached_property
    def d_inclusion(self) -> np.ndarray:
        """B-coordinates of the D basis, shape (dim B, dim D)."""
        return self.B.coordinates(self.D.basis).T

    @cached_property
    def kernel_basis(self) -> np.ndarray:
        """Matrices spanning ker F ⊂ B."""
        kernel = null_space(self.F.coordinate_matrix, rcond=1e-12)
        return self.B.element(kernel.T) if kernel.size else np.zeros((0,) + self.B.basis.shape[1:])

    def validate(self) -> Dict[str, object]:
        """Check the structural invariants; raise ConfigurationError on failure."""
        for algebra in (self.B, self.D):
            algebra.validate()
        if not self.B.contains(self.D.basis):
            raise ConfigurationError("D is not contained in B")
        reports = {
            'E': check_conditional_expectation(self.E),
            'F': check_conditional_expectation(self.F),
            'F∘E': check_conditional_expectation(self.tau),
        }
        failed = [name for name, report in reports.items() if not report.passed]
        if failed:
            raise ConfigurationError(f"Not conditional expectations: {', '.join(failed)}")
        faithfulness = check_faithfulness(self.F)
        if not faithfulness:
            raise ConfigurationError("F is not faithful on B")
        return {'reports': reports, 'faithfulness': faithfulness}


def _normalize_weights(weights, count) -> np.ndarray:
    if weights is None:
        return np.full(count, 1.0 / count)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (count,):
        raise ConfigurationError(f"Expected {count} weights, got {weights.shape[0] if weights.ndim else 0}")
    if np.any(weights <= 0):
        raise ConfigurationError("Weights must be positive")
    return weights


def make_block_diagonal_context(block_sizes: Sequence[int], weights=None,
                                groups: Optional[Sequence[Sequence[int]]] = None) -> AlgebraContext:
    """M_N ⊃ block-diagonal B ⊃ D (scalars, or projections onto groups of blocks).

    E is the block pinching. F averages the normalized trace of each block with
    the given weights inside each group; weights of a group must sum to 1 when D
    is the scalars, and are renormalized per group otherwise.
    """
    block_sizes = [int(s) for s in block_sizes]
    if not block_sizes or any(s <= 0 for s in block_sizes):
        raise ConfigurationError(f"Block sizes must be positive, got {block_sizes}")
    weights = _normalize_weights(weights, len(block_sizes))
    if groups is None:
        groups = [list(range(len(block_sizes)))]
        if abs(weights.sum() - 1) > 1e-9:
            raise ConfigurationError(f"Weights must sum to 1, got {weights.sum()}")
    groups = [list(g) for g in groups]
    if sorted(b for g in groups for b in g) != list(range(len(block_sizes))):
        raise ConfigurationError(f"Groups {groups} do not partition the {len(block_sizes)} blocks")

    n = sum(block_sizes)
    M = full_matrix_algebra(n)
    B = block_diagonal_algebra(block_sizes)
    D = block_scalar_algebra(block_sizes, groups)
    offsets = np.cumsum([0] + block_sizes)
    block_of = np.repeat(np.arange(len(block_sizes)), block_sizes)

    def pinch(x):
        mask = block_of[:, None] == block_of[None, :]
        return np.where(mask, x, 0)

    def average(b):
        out = np.zeros((n, n), dtype=complex)
        for group in groups:
            total = sum(weights[k] for k in group)
            value = sum(weights[k] * np.trace(b[offsets[k]:offsets[k + 1], offsets[k]:offsets[k + 1]])
                        / block_sizes[k] for k in group) / total
            for k in group:
                out[offsets[k]:offsets[k + 1], offsets[k]:offsets[k + 1]] = value * np.eye(block_sizes[k])
        return out

    E = ConditionalExpectation.from_function(M, B, pinch, name='pinching')
    F = ConditionalExpectation.from_function(B, D, average, name='weighted trace')
    description = {'ambient_dim': n, 'blocks': block_sizes, 'groups': groups,
                   'weights': weights.tolist()}
    return AlgebraContext(M, B, D, E, F, description)


def make_grouped_diagonal_context(n: int, groups: Sequence[Sequence[int]], weights=None) -> AlgebraContext:
    """M_n ⊃ diagonal B ⊃ D constant on each group of coordinates, F = group averages."""
    return make_block_diagonal_context([1] * n, weights=weights, groups=groups)


def context_from_description(description: dict) -> AlgebraContext:
    """Build a context from its JSON description.

    Keys: ``blocks`` (block pattern of B) or ``ambient_dim`` alone for a diagonal
    B, optional ``groups`` (D as groups of blocks, scalars when absent) and
    optional ``weights`` (one per block).
    """
    try:
        blocks = description.get('blocks')
        if blocks is None:
            blocks = [1] * int(description['ambient_dim'])
        if 'ambient_dim' in description and sum(blocks) != int(description['ambient_dim']):
            raise ConfigurationError(
                f"Blocks {blocks} do not sum to ambient_dim {description['ambient_dim']}")
        return make_block_diagonal_context(blocks, description.get('weights'), description.get('groups'))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"Malformed context description: {exc}") from exc


@dataclass
class AlgebraChain:
    """Nested algebras base ⊂ middle ⊂ top with expectations top → middle → base."""
    base: MatrixAlgebra
    middle: MatrixAlgebra
    top: MatrixAlgebra
    top_to_middle: ConditionalExpectation
    middle_to_base: ConditionalExpectation
    top_to_base: Optional[ConditionalExpectation] = None

    def __post_init__(self):
        if self.top_to_base is None:
            self.top_to_base = self.middle_to_base.compose(self.top_to_middle, name='composite')

    def expectations(self) -> List[ConditionalExpectation]:
        return [self.top_to_middle, self.middle_to_base, self.top_to_base]


def make_diagonal_chain(n: int, middle_groups: Sequence[Sequence[int]],
                        base_groups: Optional[Sequence[Sequence[int]]] = None) -> AlgebraChain:
    """diag(ℂ^n) ⊃ grouped diagonal ⊃ coarser grouped diagonal (scalars by default), uniform averages."""
    middle_groups = [list(g) for g in middle_groups]
    if base_groups is None:
        base_groups = [list(range(len(middle_groups)))]
    coarse = [[i for m in group for i in middle_groups[m]] for group in base_groups]
    top_context = make_grouped_diagonal_context(n, middle_groups)
    middle = top_context.D
    base = block_scalar_algebra([1] * n, coarse)

    def coarsen(c):
        out = np.zeros((n, n), dtype=complex)
        diagonal = np.diag(c)
        for group in base_groups:
            members = [i for m in group for i in middle_groups[m]]
            value = diagonal[members].mean()
            out[members, members] = value
        return out

    middle_to_base = ConditionalExpectation.from_function(middle, base, coarsen, name='coarse average')
    return AlgebraChain(base, middle, top_context.B, top_context.F, middle_to_base)
