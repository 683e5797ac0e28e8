"""
B-valued moments, bracketings over non-crossing partitions and the
moment ↔ cumulant transform.

A series stores, for every index tuple (i_1, …, i_k), the multilinear map
(b_1, …, b_{k-1}) ↦ ⟨X_{i_1} b_1, …, b_{k-1} X_{i_k}⟩ as a dense tensor of
shape (d,)*(k-1) + (d,): the first k-1 axes run over basis elements of the
algebra, the last axis holds the coordinates of the value. Bracketings of
stored series are then tensor contractions, with products inside the algebra
carried by its structure constants.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .algebra_core import AlgebraContext, ConditionalExpectation, MatrixAlgebra
from .conf import setting
from .exceptions import DimensionMismatchError, MissingDataError, OrderCapError
from .nc_partitions import NestingNode, NonCrossingPartition, enumerate_nc, nesting_forest

logger = logging.getLogger(__name__)

Indices = Tuple[int, ...]


@dataclass(frozen=True)
class Argument:
    """The argument X_{var_index} · right_coeff; ``None`` stands for the unit."""
    var_index: int
    right_coeff: Optional[np.ndarray] = None


def unit_or(coeff, algebra: MatrixAlgebra) -> np.ndarray:
    return algebra.identity if coeff is None else np.asarray(coeff, dtype=complex)


def check_order_cap(order_cap: int) -> int:
    maximum = setting('ORDER_CAP_MAX')
    if not 1 <= order_cap <= maximum:
        raise OrderCapError(f"Order cap {order_cap} outside 1..{maximum}")
    return order_cap


def contract_inputs(tensor: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Re-express every input axis of a series tensor through ``matrix`` (old × new)."""
    for axis in range(tensor.ndim - 1):
        tensor = np.moveaxis(np.tensordot(matrix, tensor, axes=([0], [axis])), 0, axis)
    return tensor


class VariableTuple:
    """Concrete B-valued random variables X_0, …, X_{n-1} ∈ M = M_N."""

    order_cap = None

    def __init__(self, context: AlgebraContext, representatives):
        representatives = np.asarray(representatives, dtype=complex)
        n = context.M.ambient_dim
        if representatives.ndim == 2:
            representatives = representatives[None]
        if representatives.ndim != 3 or representatives.shape[1:] != (n, n):
            raise DimensionMismatchError(
                f"Representatives must have shape (n, {n}, {n}), got {representatives.shape}")
        self.context = context
        self.representatives = representatives

    @property
    def algebra(self) -> MatrixAlgebra:
        return self.context.B

    @property
    def n_vars(self) -> int:
        return self.representatives.shape[0]

    def _word(self, indices: Sequence[int], inner: Sequence[np.ndarray]) -> np.ndarray:
        word = self.representatives[indices[0]]
        for index, coeff in zip(indices[1:], inner):
            word = word @ coeff @ self.representatives[index]
        return word

    def __call__(self, indices: Sequence[int], inner: Sequence[np.ndarray]) -> np.ndarray:
        """E(X_{i_1} b_1 X_{i_2} ⋯ b_{k-1} X_{i_k})."""
        return self.context.E(self._word(indices, inner))

    def moment(self, args: Sequence[Argument], left_coeff=None) -> np.ndarray:
        if not args:
            raise ValueError("A moment needs at least one argument")
        product = unit_or(left_coeff, self.algebra)
        for arg in args:
            product = product @ self.representatives[arg.var_index] @ unit_or(arg.right_coeff, self.algebra)
        return self.context.E(product)

    def moment_tensor(self, indices: Indices) -> np.ndarray:
        basis = self.algebra.basis
        word = self.representatives[indices[0]]
        for index in indices[1:]:
            word = np.einsum('...ab,cbd->...cad', word, basis @ self.representatives[index])
        return self.algebra.coordinates(self.context.E(word))

    def moment_series(self, order_cap: int) -> 'MomentSeries':
        series = MomentSeries(self.algebra, self.n_vars, order_cap)
        for k in range(1, order_cap + 1):
            for indices in series.index_tuples(k):
                series.set_tensor(indices, self.moment_tensor(indices))
        return series


def moment(args: Sequence[Argument], left_coeff, variables) -> np.ndarray:
    """E(left_coeff · X_{i_1} b_1 ⋯ X_{i_k} b_k) for concrete or canonical variables or moment data."""
    return variables.moment(args, left_coeff)


class MultilinearSeries:
    """A family of multilinear maps B^{k-1} → B indexed by variable tuples, k ≤ order_cap."""

    kind = 'series'

    def __init__(self, algebra: MatrixAlgebra, n_vars: int, order_cap: int,
                 tensors: Optional[Dict[Indices, np.ndarray]] = None):
        self.algebra = algebra
        self.n_vars = int(n_vars)
        self.order_cap = check_order_cap(int(order_cap))
        self._tensors: Dict[Indices, np.ndarray] = {}
        for indices, tensor in (tensors or {}).items():
            self.set_tensor(indices, tensor)

    def __repr__(self):
        return f"{type(self).__name__}({self.algebra.name}, n_vars={self.n_vars}, order_cap={self.order_cap})"

    def index_tuples(self, order: int) -> Iterator[Indices]:
        return itertools.product(range(self.n_vars), repeat=order)

    def tensor_shape(self, order: int) -> Tuple[int, ...]:
        return (self.algebra.dim,) * order

    def set_tensor(self, indices: Sequence[int], tensor) -> None:
        indices = tuple(int(i) for i in indices)
        if not 1 <= len(indices) <= self.order_cap:
            raise OrderCapError(f"Order {len(indices)} outside 1..{self.order_cap}")
        if any(not 0 <= i < self.n_vars for i in indices):
            raise DimensionMismatchError(f"Variable index out of range in {indices}")
        tensor = np.asarray(tensor, dtype=complex)
        if tensor.shape != self.tensor_shape(len(indices)):
            raise DimensionMismatchError(
                f"Tensor for {indices} must have shape {self.tensor_shape(len(indices))}, got {tensor.shape}")
        self._tensors[indices] = tensor

    def tensor(self, indices: Sequence[int]) -> np.ndarray:
        indices = tuple(indices)
        if len(indices) > self.order_cap:
            raise OrderCapError(f"Order {len(indices)} exceeds the cap {self.order_cap}")
        try:
            return self._tensors[indices]
        except KeyError:
            raise MissingDataError(f"No {self.kind} data for indices {indices}") from None

    def items(self) -> Iterator[Tuple[Indices, np.ndarray]]:
        return iter(sorted(self._tensors.items(), key=lambda item: (len(item[0]), item[0])))

    def is_complete(self) -> bool:
        return all(indices in self._tensors
                   for k in range(1, self.order_cap + 1) for indices in self.index_tuples(k))

    def value_coordinates(self, indices: Sequence[int], inner_coordinates: Sequence[np.ndarray]) -> np.ndarray:
        tensor = self.tensor(indices)
        for coords in inner_coordinates:
            tensor = np.tensordot(coords, tensor, axes=(0, 0))
        return tensor

    def __call__(self, indices: Sequence[int], inner: Sequence[np.ndarray]) -> np.ndarray:
        if len(inner) != len(indices) - 1:
            raise DimensionMismatchError(f"{len(indices)} variables need {len(indices) - 1} coefficients")
        coords = [self.algebra.coordinates(b) for b in inner]
        return self.algebra.element(self.value_coordinates(indices, coords))

    def values(self, indices: Sequence[int]) -> np.ndarray:
        """Values on all basis tuples as matrices, shape (d,)*(k-1) + (N, N)."""
        return self.algebra.element(self.tensor(indices))

    def max_difference(self, other: 'MultilinearSeries', order_cap: Optional[int] = None) -> float:
        """Largest matrix-entry difference over all stored tuples up to ``order_cap``."""
        cap = min(self.order_cap, other.order_cap) if order_cap is None else order_cap
        worst = 0.0
        for k in range(1, cap + 1):
            for indices in self.index_tuples(k):
                diff = self.algebra.element(self.tensor(indices) - other.tensor(indices))
                worst = max(worst, float(np.abs(diff).max()))
        return worst

    @classmethod
    def from_function(cls, algebra: MatrixAlgebra, n_vars: int, order_cap: int,
                      function: Callable[[Indices, Sequence[np.ndarray]], np.ndarray]):
        """Tabulate ``function(indices, inner_matrices)`` on all basis tuples."""
        series = cls(algebra, n_vars, order_cap)
        for k in range(1, order_cap + 1):
            for indices in series.index_tuples(k):
                tensor = np.zeros(series.tensor_shape(k), dtype=complex)
                for basis_tuple in itertools.product(range(algebra.dim), repeat=k - 1):
                    value = function(indices, [algebra.basis[b] for b in basis_tuple])
                    tensor[basis_tuple] = algebra.coordinates(value)
                series.set_tensor(indices, tensor)
        return series

    @classmethod
    def random(cls, algebra: MatrixAlgebra, n_vars: int, order_cap: int,
               rng: np.random.Generator, scale: float = 1.0):
        series = cls(algebra, n_vars, order_cap)
        for k in range(1, order_cap + 1):
            shape = series.tensor_shape(k)
            for indices in series.index_tuples(k):
                tensor = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
                series.set_tensor(indices, scale * tensor / np.sqrt(2 * algebra.dim ** (k - 1)))
        return series

    def map_tensors(self, function: Callable[[Indices, np.ndarray], np.ndarray],
                    algebra: Optional[MatrixAlgebra] = None):
        out = type(self)(algebra or self.algebra, self.n_vars, self.order_cap)
        for indices, tensor in self.items():
            out.set_tensor(indices, function(indices, tensor))
        return out


class MomentSeries(MultilinearSeries):
    kind = 'moment'

    def moment(self, args: Sequence[Argument], left_coeff=None) -> np.ndarray:
        indices = [arg.var_index for arg in args]
        inner = [unit_or(arg.right_coeff, self.algebra) for arg in args[:-1]]
        value = self(indices, inner)
        return unit_or(left_coeff, self.algebra) @ value @ unit_or(args[-1].right_coeff, self.algebra)


class CumulantSeries(MultilinearSeries):
    kind = 'cumulant'


# Bracketings ----------------------------------------------------------------

def evaluate_bracketing(partition: NonCrossingPartition, args: Sequence[Argument], f) -> np.ndarray:
    """π⟨m_1, …, m_n⟩ for the multiplicative map ``f`` and m_j = X_{i_j} · right_coeff_j.

    ``f(indices, inner)`` returns ⟨X_{i_1} b_1, …, b_{k-1} X_{i_k}⟩; ``f.algebra``
    supplies the unit and ``f.order_cap`` (None for unbounded) the largest order.
    """
    if len(args) != partition.n:
        raise DimensionMismatchError(f"{partition} needs {partition.n} arguments, got {len(args)}")
    cap = getattr(f, 'order_cap', None)
    if cap is not None and partition.largest_block > cap:
        raise OrderCapError(f"{partition} needs order {partition.largest_block}, map stops at {cap}")
    algebra = f.algebra

    def value(node: NestingNode) -> np.ndarray:
        inner = []
        for t, position in enumerate(node.block[:-1], start=1):
            coeff = unit_or(args[position - 1].right_coeff, algebra)
            for child in node.children_at(t):
                coeff = coeff @ value(child)
            inner.append(coeff)
        assert not node.children_at(len(node.block)), "nested block without a preceding element"
        indices = [args[p - 1].var_index for p in node.block]
        return f(indices, inner) @ unit_or(args[node.block[-1] - 1].right_coeff, algebra)

    forest = nesting_forest(partition)
    return reduce(np.matmul, (value(root) for root in forest.roots), algebra.identity)


def evaluate_pair_bracketing(partition: NonCrossingPartition, eta: Callable, unit,
                             multiply: Callable = np.matmul):
    """Bracketing of a pair partition for the map with only ⟨X b, X⟩ = η(b) nonzero, all coefficients 1."""
    if not partition.is_pairing:
        raise ValueError(f"{partition} is not a pair partition")

    def value(node: NestingNode):
        return eta(reduce(multiply, (value(child) for child in node.children_at(1)), unit))

    forest = nesting_forest(partition)
    return reduce(multiply, (value(root) for root in forest.roots), unit)


@lru_cache(maxsize=None)
def _contraction_plan(partition: NonCrossingPartition):
    """Einsum layout of a bracketing: operands are ('C', labels) or (block, labels)."""
    k = partition.n
    plan = []
    counter = itertools.count(k)

    def build(node: NestingNode) -> int:
        inputs = []
        for t, position in enumerate(node.block[:-1], start=1):
            label = position - 1
            for child in node.children_at(t):
                child_label = build(child)
                product = next(counter)
                plan.append(('C', (label, child_label, product)))
                label = product
            inputs.append(label)
        out = next(counter)
        plan.append((node.block, tuple(inputs) + (out,)))
        if node.block[-1] < k:
            product = next(counter)
            plan.append(('C', (out, node.block[-1] - 1, product)))
            out = product
        return out

    forest = nesting_forest(partition)
    out = None
    for root in forest.roots:
        root_out = build(root)
        if out is None:
            out = root_out
        else:
            product = next(counter)
            plan.append(('C', (out, root_out, product)))
            out = product
    return tuple(plan), tuple(range(k - 1)) + (out,)


def bracketing_tensor(partition: NonCrossingPartition, indices: Indices, series: MultilinearSeries) -> np.ndarray:
    """π{X_{i_1} e_{β_1}, …, X_{i_k}} on all basis tuples β, in coordinates."""
    if partition.largest_block > series.order_cap:
        raise OrderCapError(f"{partition} needs order {partition.largest_block}, series stops at {series.order_cap}")
    plan, output = _contraction_plan(partition)
    structure = series.algebra.structure_constants
    operands = []
    for kind, labels in plan:
        if kind == 'C':
            operands.extend([structure, list(labels)])
        else:
            operands.extend([series.tensor(tuple(indices[p - 1] for p in kind)), list(labels)])
    operands.append(list(output))
    return np.einsum(*operands, optimize='greedy')


def parallel_map(function, tuples: List[Indices], threads: Optional[int]):
    threads = setting('THREADS') if threads is None else threads
    if threads and threads > 1 and len(tuples) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(function, tuples))
    return [function(t) for t in tuples]


def cumulants_from_moments(source, order_cap: Optional[int] = None,
                           threads: Optional[int] = None) -> CumulantSeries:
    """Solve the moment-cumulant formula order by order for the top term.

    ``source`` is a MomentSeries or anything with ``moment_series(order_cap)``
    (concrete or canonical variables).
    """
    if isinstance(source, MomentSeries):
        moments = source
        cap = moments.order_cap if order_cap is None else order_cap
    else:
        cap = setting('ORDER_CAP_DEFAULT') if order_cap is None else order_cap
        moments = source.moment_series(check_order_cap(cap))
    if cap > moments.order_cap:
        raise MissingDataError(f"Moments stop at order {moments.order_cap}, asked for {cap}")
    cumulants = CumulantSeries(moments.algebra, moments.n_vars, cap)
    for k in range(1, cap + 1):
        partitions = [p for p in enumerate_nc(k) if not p.is_one]

        def solve(indices, partitions=partitions):
            tensor = moments.tensor(indices).copy()
            for partition in partitions:
                tensor -= bracketing_tensor(partition, indices, cumulants)
            return tensor

        tuples = list(cumulants.index_tuples(k))
        # All tuples of one order read only lower orders; write after the barrier.
        for indices, tensor in zip(tuples, parallel_map(solve, tuples, threads)):
            cumulants.set_tensor(indices, tensor)
        logger.debug("Cumulants of order %d done (%d index tuples)", k, len(tuples))
    return cumulants


def moments_from_cumulants(series: CumulantSeries, order_cap: Optional[int] = None,
                           threads: Optional[int] = None) -> MomentSeries:
    """μ = Σ_{π ∈ NC(k)} π{⋯} at every order up to ``order_cap``."""
    cap = series.order_cap if order_cap is None else order_cap
    if cap > series.order_cap:
        raise OrderCapError(f"Cumulants stop at order {series.order_cap}, asked for {cap}")
    moments = MomentSeries(series.algebra, series.n_vars, cap)
    for k in range(1, cap + 1):
        partitions = enumerate_nc(k)

        def expand(indices, partitions=partitions):
            return sum(bracketing_tensor(partition, indices, series) for partition in partitions)

        tuples = list(moments.index_tuples(k))
        for indices, tensor in zip(tuples, parallel_map(expand, tuples, threads)):
            moments.set_tensor(indices, tensor)
    return moments


def is_series_valued_in(series: MultilinearSeries, subalgebra: MatrixAlgebra,
                        tolerance: Optional[float] = None) -> bool:
    """Do all values on tuples of subalgebra basis arguments lie in the subalgebra?"""
    tolerance = setting('TOLERANCE') if tolerance is None else tolerance
    inclusion = series.algebra.coordinates(subalgebra.basis).T
    for indices, tensor in series.items():
        values = series.algebra.element(contract_inputs(tensor, inclusion))
        if not subalgebra.contains(values, tolerance):
            logger.debug("%r leaves %s at indices %s", series, subalgebra.name, indices)
            return False
    return True


def restrict_moments(moments: MomentSeries, subalgebra: MatrixAlgebra,
                     expectation: ConditionalExpectation) -> MomentSeries:
    """Moments of the F∘E space: arguments from ``subalgebra``, values pushed through F."""
    if expectation.source.dim != moments.algebra.dim or expectation.target.dim != subalgebra.dim:
        raise DimensionMismatchError("The expectation must map the moments' algebra onto the subalgebra")
    inclusion = moments.algebra.coordinates(subalgebra.basis).T
    to_sub = expectation.coordinate_matrix

    def push(indices, tensor):
        return contract_inputs(tensor, inclusion) @ to_sub.T

    return moments.map_tensors(push, algebra=subalgebra)


def restrict_series(series: MultilinearSeries, subalgebra: MatrixAlgebra) -> MultilinearSeries:
    """Restriction to subalgebra arguments, values expressed in the subalgebra's coordinates."""
    inclusion = series.algebra.coordinates(subalgebra.basis).T

    def restrict(indices, tensor):
        return subalgebra.coordinates(series.algebra.element(contract_inputs(tensor, inclusion)))

    return series.map_tensors(restrict, algebra=subalgebra)


@dataclass
class MixedCumulantReport:
    max_norm: float
    worst_indices: Optional[Indices]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_norm < self.tolerance


def mixed_cumulants_vanish(series: CumulantSeries, groups: Sequence[Iterable[int]],
                           order_cap: Optional[int] = None,
                           tolerance: Optional[float] = None) -> MixedCumulantReport:
    """Largest cumulant whose index tuple draws on more than one group of variables."""
    tolerance = setting('PASS_TOLERANCE') if tolerance is None else tolerance
    group_of = {i: g for g, members in enumerate(groups) for i in members}
    cap = series.order_cap if order_cap is None else order_cap
    worst, worst_indices = 0.0, None
    for k in range(2, cap + 1):
        for indices in series.index_tuples(k):
            if len({group_of[i] for i in indices}) < 2:
                continue
            norm = float(np.abs(series.values(indices)).max())
            if norm > worst:
                worst, worst_indices = norm, indices
    return MixedCumulantReport(worst, worst_indices, tolerance)


class BLinearMap:
    """A linear map B → B given by its images of the basis of B."""

    def __init__(self, algebra: MatrixAlgebra, images):
        images = np.asarray(images, dtype=complex)
        if images.shape != algebra.basis.shape:
            raise DimensionMismatchError(f"Images must have shape {algebra.basis.shape}, got {images.shape}")
        self.algebra = algebra
        self.images = images

    @classmethod
    def from_function(cls, algebra: MatrixAlgebra, function: Callable[[np.ndarray], np.ndarray]):
        return cls(algebra, np.array([function(b) for b in algebra.basis]))

    def __call__(self, b) -> np.ndarray:
        return np.tensordot(self.algebra.coordinates(b), self.images, axes=(-1, 0))


def covariance_map(variables: VariableTuple, index: int = 0) -> BLinearMap:
    """η(b) = E(X b X) for one concrete variable."""
    X = variables.representatives[index]
    return BLinearMap.from_function(variables.algebra, lambda b: variables.context.E(X @ b @ X))


def semicircular_series(eta: BLinearMap, order_cap: int) -> CumulantSeries:
    """Cumulants of a single B-semicircular variable: only k_2(b) = η(b) is nonzero."""
    algebra = eta.algebra
    series = CumulantSeries(algebra, 1, order_cap)
    for k in range(1, order_cap + 1):
        tensor = np.zeros(series.tensor_shape(k), dtype=complex)
        if k == 2:
            tensor = algebra.coordinates(eta.images)
        series.set_tensor((0,) * k, tensor)
    return series
