"""
Canonical realization of a prescribed B-valued cumulant series.

Words alternate B coefficients with generators: creation symbols λ*_j and
absorbers λ_j^q (q ≥ 1). A run of q creations followed by λ_j^q collapses
to the cumulant k_{j_1,…,j_q,j}(b_1,…,b_q). λ_j^0 is never a generator: it
is replaced by the order-one cumulant k_j, which keeps words alternating.
E_B of a word is its normal form when that is a pure B element and 0
otherwise.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra_core import MatrixAlgebra
from .conf import setting
from .cumulant_engine import Argument, CumulantSeries, MomentSeries, unit_or
from .exceptions import DimensionMismatchError, LevelCapError, WordLimitError

logger = logging.getLogger(__name__)

STAR = 'star'
LADDER = 'ladder'


@dataclass(frozen=True)
class GeneratorSymbol:
    kind: str
    index: int
    level: int = 0

    def __post_init__(self):
        if self.kind not in (STAR, LADDER):
            raise ValueError(f"Unknown generator kind {self.kind!r}")
        if self.kind == LADDER and self.level < 1:
            raise ValueError("Absorbers start at level 1; level 0 is the order-one cumulant")

    @classmethod
    def star(cls, index: int) -> 'GeneratorSymbol':
        return cls(STAR, index)

    @classmethod
    def ladder(cls, index: int, level: int) -> 'GeneratorSymbol':
        return cls(LADDER, index, level)

    def __str__(self):
        return f"λ*{self.index}" if self.kind == STAR else f"λ{self.index}^{self.level}"


class FormalWord:
    """b_0 g_1 b_1 ⋯ g_r b_r with matrix coefficients from B."""

    def __init__(self, algebra: MatrixAlgebra, coeffs: Sequence, gens: Sequence[GeneratorSymbol] = ()):
        if len(coeffs) != len(gens) + 1:
            raise DimensionMismatchError(f"{len(gens)} generators need {len(gens) + 1} coefficients")
        self.algebra = algebra
        self.coeffs = tuple(np.asarray(c, dtype=complex) for c in coeffs)
        self.gens = tuple(gens)

    @classmethod
    def scalar(cls, algebra: MatrixAlgebra, b=None) -> 'FormalWord':
        return cls(algebra, [unit_or(b, algebra)])

    @classmethod
    def generator(cls, algebra: MatrixAlgebra, symbol: GeneratorSymbol) -> 'FormalWord':
        return cls(algebra, [algebra.identity, algebra.identity], [symbol])

    @property
    def is_pure(self) -> bool:
        return not self.gens

    def key(self, decimals: int = 10) -> Tuple:
        coords = np.round(self.algebra.coordinates(np.array(self.coeffs)), decimals) + 0.0
        return self.gens, coords.tobytes()

    def __mul__(self, other: 'FormalWord') -> 'FormalWord':
        joined = self.coeffs[:-1] + (self.coeffs[-1] @ other.coeffs[0],) + other.coeffs[1:]
        return FormalWord(self.algebra, joined, self.gens + other.gens)

    def sandwich(self, left=None, right=None) -> 'FormalWord':
        coeffs = list(self.coeffs)
        coeffs[0] = unit_or(left, self.algebra) @ coeffs[0]
        coeffs[-1] = coeffs[-1] @ unit_or(right, self.algebra)
        return FormalWord(self.algebra, coeffs, self.gens)

    def __repr__(self):
        parts = ['b']
        for gen in self.gens:
            parts.extend([str(gen), 'b'])
        return f"FormalWord({' '.join(parts)})"


class FormalElement:
    """A finite combination Σ c_w · w with equal words merged and zero terms dropped."""

    def __init__(self, algebra: MatrixAlgebra, terms: Sequence[Tuple[complex, FormalWord]] = ()):
        self.algebra = algebra
        self._terms: Dict[Tuple, List] = {}
        for weight, word in terms:
            self._add(weight, word)

    def _add(self, weight: complex, word: FormalWord) -> None:
        if weight == 0:
            return
        key = word.key()
        if key in self._terms:
            self._terms[key][0] += weight
            if abs(self._terms[key][0]) < 1e-15:
                del self._terms[key]
        else:
            self._terms[key] = [complex(weight), word]

    @classmethod
    def of(cls, word: FormalWord) -> 'FormalElement':
        return cls(word.algebra, [(1.0, word)])

    @property
    def terms(self) -> List[Tuple[complex, FormalWord]]:
        return [(weight, word) for weight, word in self._terms.values()]

    def __len__(self):
        return len(self._terms)

    def __add__(self, other: 'FormalElement') -> 'FormalElement':
        return FormalElement(self.algebra, self.terms + other.terms)

    def __mul__(self, other):
        if isinstance(other, FormalElement):
            return FormalElement(self.algebra, [(a * b, u * v) for a, u in self.terms for b, v in other.terms])
        return FormalElement(self.algebra, [(complex(other) * a, u) for a, u in self.terms])

    __rmul__ = __mul__

    def sandwich(self, left=None, right=None) -> 'FormalElement':
        """left · x · right for B elements."""
        return FormalElement(self.algebra, [(a, u.sandwich(left, right)) for a, u in self.terms])


class PrescribedCumulants:
    """Target cumulants together with the truncation level of the absorbers."""

    def __init__(self, series: CumulantSeries, level: Optional[int] = None):
        self.series = series
        self.level = series.order_cap - 1 if level is None else int(level)
        if not 0 <= self.level <= series.order_cap - 1:
            raise LevelCapError(
                f"Level {self.level} needs cumulants of order {self.level + 1}, series stops at {series.order_cap}")

    @property
    def algebra(self) -> MatrixAlgebra:
        return self.series.algebra

    @property
    def n_vars(self) -> int:
        return self.series.n_vars

    def value(self, indices: Sequence[int], inner: Sequence[np.ndarray]) -> np.ndarray:
        return self.series(indices, inner)

    def first_order(self, index: int) -> np.ndarray:
        return self.series((index,), [])


def leftmost(redexes: Sequence[int]) -> int:
    return redexes[0]


def random_strategy(rng: np.random.Generator) -> Callable[[Sequence[int]], int]:
    return lambda redexes: redexes[int(rng.integers(len(redexes)))]


def _redexes(word: FormalWord, level: int) -> List[int]:
    found = []
    for t, gen in enumerate(word.gens):
        if gen.kind != LADDER:
            continue
        if gen.level > level:
            raise LevelCapError(f"{gen} exceeds the truncation level {level}")
        q = gen.level
        if t >= q and all(g.kind == STAR for g in word.gens[t - q:t]):
            found.append(t)
    return found


def reduce(word: FormalWord, cumulants: PrescribedCumulants,
           strategy: Callable[[Sequence[int]], int] = leftmost) -> FormalElement:
    """Rewrite λ*_{j_1} b_1 ⋯ λ*_{j_q} b_q λ_j^q → k_{j_1..j_q,j}(b_1..b_q) until no redex is left."""
    while True:
        redexes = _redexes(word, cumulants.level)
        if not redexes:
            return FormalElement.of(word)
        t = strategy(redexes)
        q = word.gens[t].level
        indices = [g.index for g in word.gens[t - q:t]] + [word.gens[t].index]
        value = cumulants.value(indices, word.coeffs[t - q + 1:t + 1])
        merged = word.coeffs[t - q] @ value @ word.coeffs[t + 1]
        word = FormalWord(word.algebra,
                          word.coeffs[:t - q] + (merged,) + word.coeffs[t + 2:],
                          word.gens[:t - q] + word.gens[t + 1:])


def expectation_EB(x: FormalElement, cumulants: PrescribedCumulants,
                   strategy: Callable[[Sequence[int]], int] = leftmost) -> np.ndarray:
    total = np.zeros_like(x.algebra.identity)
    for weight, word in x.terms:
        for reduced_weight, normal in reduce(word, cumulants, strategy).terms:
            if normal.is_pure:
                total = total + weight * reduced_weight * normal.coeffs[0]
    return total


def variable_Y(index: int, cumulants: PrescribedCumulants, level: Optional[int] = None) -> FormalElement:
    """λ*_j + k_j + Σ_{q=1}^{L} λ_j^q."""
    algebra = cumulants.algebra
    level = cumulants.level if level is None else level
    if level > cumulants.level:
        raise LevelCapError(f"Level {level} exceeds the prescribed level {cumulants.level}")
    terms = [(1.0, FormalWord.generator(algebra, GeneratorSymbol.star(index))),
             (1.0, FormalWord.scalar(algebra, cumulants.first_order(index)))]
    terms += [(1.0, FormalWord.generator(algebra, GeneratorSymbol.ladder(index, q)))
              for q in range(1, level + 1)]
    return FormalElement(algebra, terms)


def moment_of_Y(args: Sequence[Argument], left_coeff, cumulants: PrescribedCumulants,
                level: Optional[int] = None, word_limit: Optional[int] = None) -> np.ndarray:
    """E_B(b_0 Y_{i_1} b_1 ⋯ Y_{i_k} b_k) by depth-first expansion of the generator choices.

    Each branch carries the stack of open creations with the coefficient that
    follows each of them; an absorber of level q closes the top q creations at
    once. Branches that can no longer close all creations are pruned.
    """
    algebra = cumulants.algebra
    level = cumulants.level if level is None else level
    if level > cumulants.level:
        raise LevelCapError(f"Level {level} exceeds the prescribed level {cumulants.level}")
    word_limit = setting('WORD_LIMIT') if word_limit is None else word_limit
    k = len(args)
    coeffs = [unit_or(arg.right_coeff, algebra) for arg in args]
    first_order = {arg.var_index: cumulants.first_order(arg.var_index) for arg in args}
    visited = 0

    def expand(t: int, frames: Tuple[Tuple[int, np.ndarray], ...]) -> Optional[np.ndarray]:
        nonlocal visited
        visited += 1
        if visited > word_limit:
            raise WordLimitError(f"Expansion of an order-{k} moment exceeds {word_limit} words")
        if t == k:
            return frames[0][1] if len(frames) == 1 else None
        index, coeff = args[t].var_index, coeffs[t]
        open_stars = len(frames) - 1
        capacity = (k - t - 1) * level
        results = []
        if open_stars + 1 <= capacity:
            results.append(expand(t + 1, frames + ((index, coeff),)))
        if open_stars <= capacity:
            top_index, top = frames[-1]
            results.append(expand(t + 1, frames[:-1] + ((top_index, top @ first_order[index] @ coeff),)))
        for q in range(1, min(level, open_stars) + 1):
            if open_stars - q > capacity:
                continue
            closed = frames[-q:]
            value = cumulants.value([j for j, _ in closed] + [index], [c for _, c in closed])
            top_index, top = frames[-q - 1]
            results.append(expand(t + 1, frames[:-q - 1] + ((top_index, top @ value @ coeff),)))
        results = [r for r in results if r is not None]
        return sum(results) if results else None

    result = expand(0, ((-1, unit_or(left_coeff, algebra)),))
    logger.debug("Order-%d canonical moment expanded over %d branches", k, visited)
    return np.zeros_like(algebra.identity) if result is None else result


class CanonicalVariables:
    """Y_1, …, Y_n as a moment provider."""

    def __init__(self, cumulants: PrescribedCumulants, word_limit: Optional[int] = None):
        self.cumulants = cumulants
        self.word_limit = word_limit

    @property
    def algebra(self) -> MatrixAlgebra:
        return self.cumulants.algebra

    @property
    def n_vars(self) -> int:
        return self.cumulants.n_vars

    @property
    def order_cap(self) -> int:
        """Largest order whose moments are exact at the prescribed level."""
        return self.cumulants.level + 1

    def moment(self, args: Sequence[Argument], left_coeff=None) -> np.ndarray:
        return moment_of_Y(args, left_coeff, self.cumulants, word_limit=self.word_limit)

    def __call__(self, indices: Sequence[int], inner: Sequence[np.ndarray]) -> np.ndarray:
        coeffs = list(inner) + [None]
        return self.moment([Argument(i, c) for i, c in zip(indices, coeffs)])

    def moment_series(self, order_cap: int) -> MomentSeries:
        if order_cap > self.order_cap:
            raise LevelCapError(
                f"Moments of order {order_cap} need level {order_cap - 1}, prescribed {self.cumulants.level}")
        return MomentSeries.from_function(self.algebra, self.n_vars, order_cap, self)
