"""
Executable checks for freeness with amalgamation.

Identities between multilinear maps are checked on basis tuples, which is
enough by multilinearity. The freeness oracle is independent of cumulants: it
evaluates F∘E on alternating products of centered elements directly.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra_core import (
    AlgebraChain, AlgebraContext, ConditionalExpectation, check_conditional_expectation,
    check_faithfulness,
)
from .canonical_model import PrescribedCumulants
from .conf import setting
from .cumulant_engine import (
    Argument, BLinearMap, CumulantSeries, MultilinearSeries, contract_inputs,
    cumulants_from_moments, evaluate_pair_bracketing, is_series_valued_in,
    moments_from_cumulants, parallel_map, restrict_moments, restrict_series,
)
from .exceptions import HypothesisError, SizeLimitError
from .nc_partitions import catalan, enumerate_nc2

logger = logging.getLogger(__name__)

PASS = 'pass'
FAIL = 'fail'
INCONCLUSIVE = 'inconclusive'
HOLDS = 'holds'
VIOLATED = 'violated'
HYPOTHESIS_FAILS = 'hypothesis-fails'
PREMISE_FAILS = 'premise-fails'

EXIT_CODES = {
    PASS: 0, HOLDS: 0,
    FAIL: 1, VIOLATED: 1,
    INCONCLUSIVE: 2, HYPOTHESIS_FAILS: 2, PREMISE_FAILS: 2,
}


def classify(norm: float, pass_tolerance: Optional[float] = None,
             fail_threshold: Optional[float] = None) -> str:
    pass_tolerance = setting('PASS_TOLERANCE') if pass_tolerance is None else pass_tolerance
    fail_threshold = setting('FAIL_THRESHOLD') if fail_threshold is None else fail_threshold
    if norm < pass_tolerance:
        return PASS
    if norm >= fail_threshold:
        return FAIL
    return INCONCLUSIVE


def _label(indices) -> str:
    return ','.join(map(str, indices))


@dataclass
class FactorizationReport:
    deviations: Dict[Tuple[int, ...], float]
    tolerance: float
    expectation: str = ''

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return all(d < self.tolerance for d in self.deviations.values())

    @property
    def verdict(self) -> str:
        return PASS if self.passed else FAIL

    def to_json(self):
        return {
            'check': 'factorization',
            'expectation': self.expectation,
            'tolerance': self.tolerance,
            'max_deviation': self.max_deviation,
            'deviations': {_label(k): v for k, v in self.deviations.items()},
            'verdict': self.verdict,
        }


def check_factorization(series: MultilinearSeries, expectation: ConditionalExpectation,
                        order_cap: Optional[int] = None,
                        tolerance: Optional[float] = None) -> FactorizationReport:
    """Compare k(b_1, …) with F(k(F(b_1), …)) on every basis tuple."""
    tolerance = setting('PASS_TOLERANCE') if tolerance is None else tolerance
    cap = series.order_cap if order_cap is None else order_cap
    projection = expectation.projection
    deviations = {}
    for k in range(1, cap + 1):
        for indices in series.index_tuples(k):
            tensor = series.tensor(indices)
            factorized = contract_inputs(tensor, projection) @ projection.T
            diff = series.algebra.element(tensor - factorized)
            deviations[indices] = float(np.abs(diff).max())
    report = FactorizationReport(deviations, tolerance, expectation.name)
    logger.debug("Factorization through %s: max deviation %.3e", expectation.name, report.max_deviation)
    return report


def lift_free_variables(d_series: CumulantSeries, context: AlgebraContext) -> PrescribedCumulants:
    """B-valued cumulants k_B(b_1, …) = k_D(F(b_1), …) of variables free from B over D."""
    D = context.D
    if d_series.algebra.dim != D.dim or d_series.algebra.ambient_dim != D.ambient_dim:
        if not is_series_valued_in(d_series, D):
            raise HypothesisError("The series to lift is not valued in D")
        d_series = restrict_series(d_series, D)
    return PrescribedCumulants(lift_series(d_series, context.F))


def lift_series(series: MultilinearSeries, expectation: ConditionalExpectation) -> MultilinearSeries:
    """Precompose a series over the target of ``expectation`` with it, values included back in the source."""
    to_small = expectation.coordinate_matrix
    inclusion = expectation.source.coordinates(expectation.target.basis).T

    def lift(indices, tensor):
        return contract_inputs(tensor, to_small) @ inclusion.T

    return series.map_tensors(lift, algebra=expectation.source)


@dataclass
class WordResult:
    label: str
    order: int
    norm: float


@dataclass
class FreenessReport:
    words: List[WordResult]
    pass_tolerance: float
    fail_threshold: float
    worst_value: Optional[np.ndarray] = None

    @property
    def max_norm(self) -> float:
        return max((w.norm for w in self.words), default=0.0)

    @property
    def verdict(self) -> str:
        return classify(self.max_norm, self.pass_tolerance, self.fail_threshold)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_json(self, limit: int = 20):
        worst = sorted(self.words, key=lambda w: -w.norm)[:limit]
        return {
            'check': 'freeness-oracle',
            'word_count': len(self.words),
            'max_norm': self.max_norm,
            'pass_tolerance': self.pass_tolerance,
            'fail_threshold': self.fail_threshold,
            'worst_words': [{'word': w.label, 'order': w.order, 'norm': w.norm} for w in worst],
            'verdict': self.verdict,
        }


@dataclass
class _Monomial:
    """X_i or X_i d X_j, centered by its F∘E value."""
    indices: Tuple[int, ...]
    inner: Tuple[np.ndarray, ...]
    center: np.ndarray
    label: str

    @property
    def order(self) -> int:
        return len(self.indices)

    def tokens(self) -> list:
        out = [('X', self.indices[0])]
        for d, index in zip(self.inner, self.indices[1:]):
            out.extend([d, ('X', index)])
        return out


def _evaluate_tokens(tokens, provider, identity) -> np.ndarray:
    """E of a product of ('X', i) tokens and B matrices."""
    left = identity
    args: List[Argument] = []
    pending = identity
    for token in tokens:
        if isinstance(token, tuple):
            if args:
                args[-1] = Argument(args[-1].var_index, pending)
            else:
                left = pending
            args.append(Argument(token[1]))
            pending = identity
        else:
            pending = pending @ token
    if not args:
        return pending
    args[-1] = Argument(args[-1].var_index, pending)
    return provider.moment(args, left)


def _alternating_value(b_left, monomials: Sequence[_Monomial], interior, b_right,
                       provider, context: AlgebraContext) -> np.ndarray:
    """F∘E(b_0 w_1 b_1 ⋯ w_s b_s) with w_j = m_j − F∘E(m_j), expanded over the 2^s choices."""
    identity = context.B.identity
    total = np.zeros_like(identity)
    for choice in itertools.product((True, False), repeat=len(monomials)):
        tokens = [b_left]
        sign = 1.0
        for t, (use_monomial, monomial) in enumerate(zip(choice, monomials)):
            if use_monomial:
                tokens.extend(monomial.tokens())
            else:
                sign = -sign
                tokens.append(monomial.center)
            tokens.append(interior[t] if t < len(interior) else b_right)
        total = total + sign * _evaluate_tokens(tokens, provider, identity)
    return context.F(total)


def _monomials(provider, context: AlgebraContext, max_length: int = 2) -> List[_Monomial]:
    tau = context.F
    out = []
    identity = context.B.identity
    for i in range(provider.n_vars):
        center = tau(provider.moment([Argument(i)], identity))
        out.append(_Monomial((i,), (), center, f"X{i}"))
    if max_length >= 2:
        for i, j in itertools.product(range(provider.n_vars), repeat=2):
            for a, d in enumerate(context.D.basis):
                center = tau(provider.moment([Argument(i, d), Argument(j)], identity))
                out.append(_Monomial((i, j), (d,), center, f"X{i}·d{a}·X{j}"))
    return out


def freeness_oracle(provider, context: AlgebraContext, max_order: int = 4,
                    rng: Optional[np.random.Generator] = None, random_words: Optional[int] = None,
                    max_factors: int = 3, threads: Optional[int] = None) -> FreenessReport:
    """Is the algebra generated by the variables and D free from B over D?

    ``provider`` is anything with ``moment(args, left)``, ``n_vars`` and
    ``order_cap`` (None for unbounded): concrete variables, canonical
    variables or a moment series. All alternating words with up to
    ``max_factors`` centered monomials are enumerated, then ``random_words``
    longer ones are sampled with random centered coefficients.
    """
    if not 1 <= max_order <= 6:
        raise SizeLimitError(f"Oracle order {max_order} outside 1..6")
    cap = getattr(provider, 'order_cap', None)
    if cap is not None:
        max_order = min(max_order, cap)
    random_words = setting('ORACLE_RANDOM_WORDS') if random_words is None else random_words
    rng = rng if rng is not None else np.random.default_rng(0)
    identity = context.B.identity
    kernel = list(context.kernel_basis)
    ends = [(None, identity)] + [(f"c{a}", c) for a, c in enumerate(kernel)]
    interior_choices = [(f"c{a}", c) for a, c in enumerate(kernel)]
    monomials = _monomials(provider, context)

    jobs = []
    for s in range(1, max_factors + 1):
        for pattern in itertools.product(monomials, repeat=s):
            if sum(m.order for m in pattern) > max_order:
                continue
            for interior in itertools.product(interior_choices, repeat=s - 1):
                for left, right in itertools.product(ends, repeat=2):
                    centered = s + len(interior) + (left[0] is not None) + (right[0] is not None)
                    if centered < 2:
                        continue
                    jobs.append((left, pattern, interior, right))

    if kernel:
        for _ in range(random_words):
            jobs.append(_random_word(rng, monomials, kernel, identity, max_order))

    def evaluate(job):
        left, pattern, interior, right = job
        value = _alternating_value(left[1], pattern, [c for _, c in interior], right[1], provider, context)
        parts = [left[0]] if left[0] else []
        for t, monomial in enumerate(pattern):
            parts.append(f"({monomial.label})°")
            if t < len(interior):
                parts.append(interior[t][0])
        if right[0]:
            parts.append(right[0])
        return WordResult(' '.join(parts), sum(m.order for m in pattern), float(np.abs(value).max())), value

    results = parallel_map(evaluate, jobs, threads)
    report = FreenessReport([r for r, _ in results], setting('PASS_TOLERANCE'), setting('FAIL_THRESHOLD'))
    if results:
        report.worst_value = max(results, key=lambda item: item[0].norm)[1]
    if report.verdict == INCONCLUSIVE:
        logger.warning("Freeness oracle inconclusive: max norm %.3e over %d words", report.max_norm, len(jobs))
    else:
        logger.info("Freeness oracle: %d words, max norm %.3e", len(jobs), report.max_norm)
    return report


def _random_word(rng, monomials, kernel, identity, max_order):
    def random_centered():
        weights = rng.standard_normal(len(kernel)) + 1j * rng.standard_normal(len(kernel))
        return np.tensordot(weights, np.array(kernel), axes=(0, 0))

    pattern = []
    budget = max_order
    while True:
        candidates = [m for m in monomials if m.order <= budget]
        if not candidates or (pattern and rng.random() < 0.3):
            break
        pick = candidates[int(rng.integers(len(candidates)))]
        pattern.append(pick)
        budget -= pick.order
    interior = [('c~', random_centered()) for _ in range(len(pattern) - 1)]
    left = ('c~', random_centered()) if rng.random() < 0.5 else (None, identity)
    right = ('c~', random_centered()) if rng.random() < 0.5 or (len(pattern) == 1 and left[0] is None) \
        else (None, identity)
    return left, tuple(pattern), tuple(interior), right


@dataclass
class RestrictionReport:
    verdict: str
    deviation: Optional[float]
    tolerance: float
    detail: str = ''

    def to_json(self):
        return {'check': 'restriction', 'verdict': self.verdict, 'deviation': self.deviation,
                'tolerance': self.tolerance, 'detail': self.detail}


def check_restriction_theorem(series_B: CumulantSeries, context: AlgebraContext,
                              order_cap: Optional[int] = None,
                              tolerance: Optional[float] = None) -> RestrictionReport:
    """D-valued cumulants from F∘E moments against the restriction of the B-valued cumulants."""
    tolerance = setting('TOLERANCE') if tolerance is None else tolerance
    cap = series_B.order_cap if order_cap is None else order_cap
    if not is_series_valued_in(series_B, context.D):
        return RestrictionReport(HYPOTHESIS_FAILS, None, tolerance,
                                 'B-valued cumulants leave D on D-valued arguments')
    moments_B = moments_from_cumulants(series_B, cap)
    cumulants_D = cumulants_from_moments(restrict_moments(moments_B, context.D, context.F))
    restricted = restrict_series(series_B, context.D)
    deviation = cumulants_D.max_difference(restricted, cap)
    verdict = HOLDS if deviation < tolerance else VIOLATED
    return RestrictionReport(verdict, deviation, tolerance)


@dataclass
class SubalgebraComparison:
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation < self.tolerance

    def to_json(self):
        return {'check': 'subalgebra-cumulants', 'deviation': self.deviation,
                'tolerance': self.tolerance, 'verdict': PASS if self.passed else FAIL}


def compare_with_subalgebra_cumulants(series_B: CumulantSeries, context: AlgebraContext,
                                      order_cap: Optional[int] = None,
                                      tolerance: Optional[float] = None) -> SubalgebraComparison:
    """k_B(b_1, …) against k_D(F(b_1), …), with k_D computed from the F∘E moments."""
    tolerance = setting('PASS_TOLERANCE') if tolerance is None else tolerance
    cap = series_B.order_cap if order_cap is None else order_cap
    moments_D = restrict_moments(moments_from_cumulants(series_B, cap), context.D, context.F)
    lifted = lift_free_variables(cumulants_from_moments(moments_D), context).series
    return SubalgebraComparison(series_B.max_difference(lifted, cap), tolerance)


@dataclass
class SemicircularReport:
    eta_one_scalar: bool
    catalan_match: bool
    variance: complex
    moments: Dict[int, complex]
    fourth_moment_identity: float
    gap: float
    tolerance: float

    @property
    def consistent(self) -> bool:
        return self.eta_one_scalar == self.catalan_match

    @property
    def verdict(self) -> str:
        return PASS if self.consistent else FAIL

    def to_json(self):
        return {
            'check': 'semicircular',
            'eta_one_scalar': self.eta_one_scalar,
            'catalan_match': self.catalan_match,
            'variance': self.variance.real,
            'moments': {str(k): v.real for k, v in self.moments.items()},
            'fourth_moment_identity_error': self.fourth_moment_identity,
            'gap_m4_minus_2m2sq': self.gap,
            'tolerance': self.tolerance,
            'verdict': self.verdict,
        }


def semicircular_moments(eta: BLinearMap, context: AlgebraContext, max_order: int) -> Dict[int, complex]:
    """φ(X^{2m}) = Σ_{π ∈ NC2(2m)} φ(π evaluated with η) for φ = tr∘F."""
    state = _state(context)
    unit = context.B.identity
    moments = {}
    for order in range(2, max_order + 1, 2):
        total = sum(evaluate_pair_bracketing(p, eta, unit) for p in enumerate_nc2(order))
        moments[order] = state(total)
    return moments


def _state(context: AlgebraContext):
    n = context.B.ambient_dim
    return lambda b: complex(np.trace(context.F(b)) / n)


def check_semicircular_characterization(eta: BLinearMap, context: AlgebraContext, max_order: int = 6,
                                        tolerance: Optional[float] = None) -> SemicircularReport:
    """X semicircular for φ = tr∘F iff η(1) is scalar.

    The Catalan comparison runs over every even order up to ``max(max_order, 4)``;
    m2 alone never separates the two cases.
    """
    tolerance = setting('TOLERANCE') if tolerance is None else tolerance
    state = _state(context)
    unit = context.B.identity
    eta_one = eta(unit)
    variance = state(eta_one)
    scalar = bool(np.abs(eta_one - variance * unit).max() < tolerance)
    moments = semicircular_moments(eta, context, max(max_order, 4))
    catalan_match = all(
        abs(value - catalan(order // 2) * variance ** (order // 2))
        <= tolerance * max(1.0, abs(catalan(order // 2) * variance ** (order // 2)))
        for order, value in moments.items())
    fourth = state(eta(eta_one)) + state(eta_one @ eta_one)
    report = SemicircularReport(
        eta_one_scalar=scalar,
        catalan_match=catalan_match,
        variance=variance,
        moments={k: v for k, v in moments.items() if k <= max_order},
        fourth_moment_identity=abs(moments[4] - fourth),
        gap=float((moments[4] - 2 * moments[2] ** 2).real),
        tolerance=tolerance,
    )
    if not report.consistent:
        logger.warning("Semicircular characterization inconsistent: scalar=%s, catalan=%s", scalar, catalan_match)
    return report


@dataclass
class TransitivityReport:
    verdict: str
    compatibility: Dict[str, bool]
    levels: Dict[str, FactorizationReport] = field(default_factory=dict)

    def to_json(self):
        return {
            'check': 'transitivity',
            'verdict': self.verdict,
            'compatibility': self.compatibility,
            'levels': {name: report.to_json() for name, report in self.levels.items()},
        }


def check_transitivity(chain: AlgebraChain, top_series: CumulantSeries,
                       order_cap: Optional[int] = None,
                       tolerance: Optional[float] = None) -> TransitivityReport:
    """Free from top over middle and middle from base ⇒ factorization through the composite.

    ``top_series`` holds cumulants valued in the top algebra of the chain.
    """
    tolerance = setting('TOLERANCE') if tolerance is None else tolerance
    composite = chain.middle_to_base.compose(chain.top_to_middle)
    compatibility = {
        'composite': bool(np.abs(composite.images - chain.top_to_base.images).max() < tolerance),
        'top_to_middle': check_conditional_expectation(chain.top_to_middle).passed,
        'middle_to_base': check_conditional_expectation(chain.middle_to_base).passed,
        'faithful': bool(check_faithfulness(chain.top_to_middle)) and bool(check_faithfulness(chain.middle_to_base)),
    }
    if not all(compatibility.values()):
        raise HypothesisError(f"Chain expectations are not compatible: {compatibility}")

    levels = {'top_over_middle': check_factorization(top_series, chain.top_to_middle, order_cap)}
    premise = levels['top_over_middle'].passed
    if premise:
        middle_series = restrict_series(top_series, chain.middle)
        levels['middle_over_base'] = check_factorization(middle_series, chain.middle_to_base, order_cap)
        premise = levels['middle_over_base'].passed
    levels['top_over_base'] = check_factorization(top_series, chain.top_to_base, order_cap)
    if not premise:
        verdict = PREMISE_FAILS
    else:
        verdict = HOLDS if levels['top_over_base'].passed else VIOLATED
    return TransitivityReport(verdict, compatibility, levels)
