import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from freeprob.algebra_core import (
    AlgebraChain, ConditionalExpectation, make_block_diagonal_context, make_diagonal_chain,
    make_grouped_diagonal_context,
)
from freeprob.canonical_model import CanonicalVariables, PrescribedCumulants
from freeprob.cumulant_engine import BLinearMap, CumulantSeries, VariableTuple, is_series_valued_in
from freeprob.exceptions import HypothesisError, SizeLimitError
from freeprob.freeness_check import (
    EXIT_CODES, FAIL, HOLDS, HYPOTHESIS_FAILS, INCONCLUSIVE, PASS, PREMISE_FAILS, check_factorization,
    check_restriction_theorem, check_semicircular_characterization, check_transitivity, classify,
    compare_with_subalgebra_cumulants, freeness_oracle, lift_free_variables, lift_series,
)


def second_order_series(algebra, tensor, first=None):
    series = CumulantSeries(algebra, 1, 2)
    series.set_tensor((0,), np.zeros(algebra.dim) if first is None else first)
    series.set_tensor((0, 0), tensor)
    return series


class VerdictTests(SimpleTestCase):
    def test_classify(self):
        self.assertEqual(classify(1e-12), PASS)
        self.assertEqual(classify(1e-5), INCONCLUSIVE)
        self.assertEqual(classify(0.1), FAIL)

    def test_exit_codes(self):
        self.assertEqual([EXIT_CODES[v] for v in (PASS, HOLDS, FAIL, INCONCLUSIVE, PREMISE_FAILS)],
                         [0, 0, 1, 2, 2])


class FactorizationTests(SimpleTestCase):
    def setUp(self):
        self.context = make_block_diagonal_context([1, 1])

    def test_identity_covariance_does_not_factor(self):
        series = second_order_series(self.context.B, np.eye(2))
        report = check_factorization(series, self.context.F)
        self.assertEqual(report.verdict, FAIL)
        self.assertAlmostEqual(report.max_deviation, 0.5)
        self.assertEqual(report.to_json()['deviations']['0,0'], report.max_deviation)

    def test_trace_covariance_factors(self):
        series = second_order_series(self.context.B, 0.5 * np.ones((2, 2)))
        report = check_factorization(series, self.context.F)
        self.assertEqual(report.verdict, PASS)
        self.assertLess(report.max_deviation, 1e-12)

    def test_lift_of_scalar_semicircle(self):
        d_series = second_order_series(self.context.D, np.ones((1, 1)))
        lifted = lift_free_variables(d_series, self.context)
        np.testing.assert_allclose(lifted.series.tensor((0, 0)), 0.5 * np.ones((2, 2)))
        self.assertTrue(check_factorization(lifted.series, self.context.F).passed)

    def test_lift_accepts_D_valued_series_over_B(self):
        series = second_order_series(self.context.B, 0.5 * np.ones((2, 2)))
        lifted = lift_free_variables(series, self.context)
        np.testing.assert_allclose(lifted.series.tensor((0, 0)), 0.5 * np.ones((2, 2)), atol=1e-12)

    def test_lift_rejects_series_outside_D(self):
        series = second_order_series(self.context.B, np.zeros((2, 2)), first=np.array([1.0, 2.0]))
        with self.assertRaises(HypothesisError):
            lift_free_variables(series, self.context)


class OracleTests(SimpleTestCase):
    def test_lifted_canonical_variables_are_free(self):
        context = make_grouped_diagonal_context(4, [[0, 1], [2, 3]])
        d_series = CumulantSeries.random(context.D, 1, 4, np.random.default_rng(12), scale=0.5)
        provider = CanonicalVariables(lift_free_variables(d_series, context)).moment_series(4)
        report = freeness_oracle(provider, context, max_order=4, rng=np.random.default_rng(1), random_words=30)
        self.assertGreater(len(report.words), 100)
        self.assertEqual(report.verdict, PASS, report.to_json(limit=3))

    def test_lifted_variables_are_free_up_to_order_six(self):
        context = make_block_diagonal_context([1, 1])
        for seed in range(10):
            d_series = CumulantSeries.random(context.D, 1, 6, np.random.default_rng(seed), scale=0.5)
            provider = CanonicalVariables(lift_free_variables(d_series, context)).moment_series(6)
            report = freeness_oracle(provider, context, max_order=6, rng=np.random.default_rng(seed))
            self.assertEqual(max(w.order for w in report.words), 6)
            self.assertLess(report.max_norm, 1e-8, f"seed {seed}")

    def test_series_that_do_not_factor_are_not_free(self):
        context = make_block_diagonal_context([1, 1])
        for seed in range(10):
            series = CumulantSeries.random(context.B, 1, 3, np.random.default_rng(100 + seed))
            self.assertGreaterEqual(check_factorization(series, context.F).max_deviation, 0.1)
            provider = CanonicalVariables(PrescribedCumulants(series))
            report = freeness_oracle(provider, context, max_order=3, rng=np.random.default_rng(seed))
            self.assertGreaterEqual(report.max_norm, 1e-3, f"seed {seed}")

    def test_element_of_B_is_not_free_from_B(self):
        context = make_block_diagonal_context([1, 1])
        variables = VariableTuple(context, np.diag([1.0, 0.0]))
        report = freeness_oracle(variables, context, max_order=2, random_words=0)
        self.assertEqual(report.verdict, FAIL)
        self.assertGreater(report.max_norm, 0.3)

    def test_canonical_variables_with_generic_cumulants_are_not_free(self):
        context = make_block_diagonal_context([1, 1])
        series = second_order_series(context.B, np.eye(2))
        provider = CanonicalVariables(lift_free_variables(
            second_order_series(context.D, np.ones((1, 1))), context))
        self.assertEqual(freeness_oracle(provider, context, max_order=2).verdict, PASS)
        report = freeness_oracle(CanonicalVariables(PrescribedCumulants(series)), context, max_order=2)
        self.assertEqual(report.verdict, FAIL)

    def test_trivial_when_D_equals_B(self):
        context = make_grouped_diagonal_context(2, [[0], [1]])
        variables = VariableTuple(context, np.array([[0.0, 1.0], [1.0, 0.0]]))
        report = freeness_oracle(variables, context)
        self.assertEqual(report.words, [])
        self.assertEqual(report.verdict, PASS)

    def test_order_limits(self):
        context = make_block_diagonal_context([1, 1])
        variables = VariableTuple(context, np.eye(2))
        with self.assertRaises(SizeLimitError):
            freeness_oracle(variables, context, max_order=7)
        with self.assertRaises(SizeLimitError):
            freeness_oracle(variables, context, max_order=0)


class RestrictionTests(SimpleTestCase):
    def setUp(self):
        self.context = make_block_diagonal_context([1, 1])
        other = make_block_diagonal_context([1, 1], weights=[0.3, 0.7]).F
        d_series = CumulantSeries.random(other.target, 1, 4, np.random.default_rng(5))
        # valued in D on every argument, but not of the form k_D(F(b), ...)
        self.series = lift_series(d_series, other)

    def test_restriction_holds_for_D_valued_series(self):
        self.assertTrue(is_series_valued_in(self.series, self.context.D))
        report = check_restriction_theorem(self.series, self.context)
        self.assertEqual(report.verdict, HOLDS)
        self.assertLess(report.deviation, 1e-9)

    def test_such_series_are_not_lifts(self):
        self.assertFalse(check_factorization(self.series, self.context.F).passed)
        self.assertFalse(compare_with_subalgebra_cumulants(self.series, self.context).passed)

    def test_lifted_series_match_subalgebra_cumulants(self):
        d_series = CumulantSeries.random(self.context.D, 1, 4, np.random.default_rng(6))
        lifted = lift_free_variables(d_series, self.context).series
        comparison = compare_with_subalgebra_cumulants(lifted, self.context)
        self.assertTrue(comparison.passed)
        self.assertEqual(comparison.to_json()['verdict'], PASS)

    def test_hypothesis_fails_outside_D(self):
        series = second_order_series(self.context.B, np.zeros((2, 2)), first=np.array([1.0, 2.0]))
        report = check_restriction_theorem(series, self.context)
        self.assertEqual(report.verdict, HYPOTHESIS_FAILS)
        self.assertIsNone(report.deviation)

    def test_zero_series(self):
        series = second_order_series(self.context.B, np.zeros((2, 2)))
        report = check_restriction_theorem(series, self.context)
        self.assertEqual(report.verdict, HOLDS)
        self.assertEqual(report.deviation, 0.0)

    @given(st.integers(min_value=0, max_value=2 ** 31), st.floats(min_value=0.1, max_value=0.9))
    @settings(max_examples=100, deadline=None)
    def test_random_D_valued_series(self, seed, weight):
        other = make_block_diagonal_context([1, 1], weights=[weight, 1 - weight]).F
        d_series = CumulantSeries.random(other.target, 1, 4, np.random.default_rng(seed))
        report = check_restriction_theorem(lift_series(d_series, other), self.context)
        self.assertEqual(report.verdict, HOLDS)
        self.assertLess(report.deviation, 1e-9)


class SemicircularTests(SimpleTestCase):
    def test_scalar_covariance_gives_catalan_moments(self):
        context = make_block_diagonal_context([1, 1])
        eta = BLinearMap.from_function(context.B, context.F)
        report = check_semicircular_characterization(eta, context)
        self.assertTrue(report.eta_one_scalar)
        self.assertTrue(report.catalan_match)
        self.assertEqual(report.verdict, PASS)
        np.testing.assert_allclose([report.moments[k].real for k in (2, 4, 6)], [1, 2, 5])

    def test_non_scalar_covariance(self):
        context = make_block_diagonal_context([1, 1])
        eta = BLinearMap.from_function(context.B, lambda b: np.diag([b[0, 0], 2 * b[1, 1]]))
        report = check_semicircular_characterization(eta, context)
        self.assertFalse(report.eta_one_scalar)
        self.assertFalse(report.catalan_match)
        self.assertEqual(report.verdict, PASS)
        self.assertAlmostEqual(report.moments[2], 1.5)
        self.assertAlmostEqual(report.moments[4], 5.0)
        self.assertAlmostEqual(report.gap, 0.5)
        self.assertLess(report.fourth_moment_identity, 1e-12)

    def test_low_order_still_separates_the_cases(self):
        context = make_block_diagonal_context([1, 1])
        eta = BLinearMap.from_function(context.B, lambda b: np.diag([b[0, 0], 2 * b[1, 1]]))
        report = check_semicircular_characterization(eta, context, max_order=2)
        self.assertFalse(report.catalan_match)
        self.assertEqual(report.verdict, PASS)
        self.assertEqual(list(report.moments), [2])

    def test_fourth_moment_identity_for_random_maps(self):
        rng = np.random.default_rng(31)
        context = make_block_diagonal_context([2, 1])
        B = context.B
        for _ in range(20):
            eta = BLinearMap(B, B.element(rng.standard_normal((B.dim, B.dim))))
            report = check_semicircular_characterization(eta, context, max_order=4)
            self.assertLess(report.fourth_moment_identity, 1e-9)

    def test_gap_is_positive_for_non_scalar_kernels(self):
        rng = np.random.default_rng(32)
        context = make_block_diagonal_context([1, 1, 1, 1])
        checked = 0
        for _ in range(20):
            kernel = rng.random((4, 4))
            kernel = kernel + kernel.T
            eta = BLinearMap.from_function(context.B, lambda b, kernel=kernel: np.diag(kernel @ np.diag(b)))
            eta_one = eta(context.B.identity)
            report = check_semicircular_characterization(eta, context, max_order=4)
            self.assertLess(report.fourth_moment_identity, 1e-9)
            if np.abs(eta_one - context.F(eta_one)).max() >= 0.1:
                checked += 1
                self.assertGreater(report.gap, 0)
                self.assertEqual(report.verdict, PASS)
        self.assertGreater(checked, 10)

    def test_doubly_stochastic_kernel(self):
        context = make_block_diagonal_context([1, 1, 1])
        kernel = (np.ones((3, 3)) - np.eye(3)) / 2
        eta = BLinearMap.from_function(context.B, lambda b: np.diag(kernel @ np.diag(b)))
        report = check_semicircular_characterization(eta, context, max_order=8)
        self.assertTrue(report.eta_one_scalar and report.catalan_match)
        self.assertAlmostEqual(report.moments[8], 14.0)

    def test_zero_covariance(self):
        context = make_block_diagonal_context([1, 1])
        report = check_semicircular_characterization(BLinearMap(context.B, np.zeros((2, 2, 2))), context)
        self.assertEqual(report.verdict, PASS)
        self.assertEqual(report.to_json()['moments']['4'], 0.0)


class TransitivityTests(SimpleTestCase):
    def setUp(self):
        self.chain = make_diagonal_chain(4, [[0, 1], [2, 3]])

    def test_lift_from_base_holds(self):
        base_series = CumulantSeries.random(self.chain.base, 1, 3, np.random.default_rng(3))
        report = check_transitivity(self.chain, lift_series(base_series, self.chain.top_to_base))
        self.assertEqual(report.verdict, HOLDS)
        self.assertEqual(set(report.levels), {'top_over_middle', 'middle_over_base', 'top_over_base'})
        self.assertTrue(all(report.compatibility.values()))

    def test_middle_valued_data_fails_the_premise(self):
        middle_series = CumulantSeries.random(self.chain.middle, 1, 3, np.random.default_rng(4))
        report = check_transitivity(self.chain, lift_series(middle_series, self.chain.top_to_middle))
        self.assertTrue(report.levels['top_over_middle'].passed)
        self.assertFalse(report.levels['middle_over_base'].passed)
        self.assertEqual(report.verdict, PREMISE_FAILS)
        self.assertEqual(report.to_json()['verdict'], PREMISE_FAILS)

    def test_incompatible_expectations(self):
        chain = self.chain
        corner = ConditionalExpectation.from_function(
            chain.top, chain.base, lambda x: x[0, 0] * np.eye(4), name='corner')
        broken = AlgebraChain(chain.base, chain.middle, chain.top, chain.top_to_middle,
                              chain.middle_to_base, top_to_base=corner)
        series = CumulantSeries.random(chain.top, 1, 2, np.random.default_rng(0))
        with self.assertRaises(HypothesisError):
            check_transitivity(broken, series)
