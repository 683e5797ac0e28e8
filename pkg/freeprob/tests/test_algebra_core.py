import numpy as np
from django.test import SimpleTestCase

from freeprob.algebra_core import (
    ConditionalExpectation, MatrixAlgebra, block_diagonal_algebra, check_conditional_expectation,
    check_faithfulness, context_from_description, full_matrix_algebra, make_block_diagonal_context,
    make_diagonal_chain, make_grouped_diagonal_context, normalized_trace, scalar_algebra,
)
from freeprob.exceptions import ConfigurationError


def unit(n, i, j):
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1
    return e


class MatrixAlgebraTests(SimpleTestCase):
    def test_span_not_closed_under_products(self):
        with self.assertRaisesMessage(ConfigurationError, 'closed'):
            MatrixAlgebra([np.eye(2), unit(2, 0, 1), unit(2, 1, 0)])

    def test_span_without_identity(self):
        with self.assertRaisesMessage(ConfigurationError, 'identity'):
            MatrixAlgebra([unit(2, 0, 0)])

    def test_dependent_basis(self):
        with self.assertRaisesMessage(ConfigurationError, 'dependent'):
            MatrixAlgebra([np.eye(2), 2 * np.eye(2)])

    def test_coordinates_round_trip(self):
        algebra = full_matrix_algebra(2)
        x = np.array([[1, 2j], [3, 4]])
        np.testing.assert_allclose(algebra.element(algebra.coordinates(x)), x)
        self.assertEqual(algebra.dim, 4)

    def test_structure_constants(self):
        algebra = block_diagonal_algebra([2, 1])
        algebra.validate()
        C = algebra.structure_constants
        for a in range(algebra.dim):
            for b in range(algebra.dim):
                product = algebra.basis[a] @ algebra.basis[b]
                np.testing.assert_allclose(algebra.element(C[a, b]), product, atol=1e-12)

    def test_containment(self):
        algebra = block_diagonal_algebra([1, 1])
        self.assertTrue(algebra.contains(np.diag([2.0, 3.0])))
        self.assertFalse(algebra.contains(np.ones((2, 2))))


class ConditionalExpectationTests(SimpleTestCase):
    def test_normalized_trace_is_expectation(self):
        report = check_conditional_expectation(normalized_trace(full_matrix_algebra(3)))
        self.assertTrue(report.passed)
        self.assertTrue(report.to_json()['passed'])

    def test_non_projection_is_reported(self):
        B = block_diagonal_algebra([1, 1])
        doubled = ConditionalExpectation.from_function(B, scalar_algebra(2), lambda b: np.trace(b) * np.eye(2))
        report = check_conditional_expectation(doubled)
        self.assertFalse(report.passed)
        self.assertGreater(report.unitality, 0.5)

    def test_weighted_average(self):
        context = make_block_diagonal_context([1, 1], weights=[0.25, 0.75])
        np.testing.assert_allclose(context.F(np.diag([4.0, 8.0])), 7.0 * np.eye(2))

    def test_composition(self):
        context = make_block_diagonal_context([2, 1])
        x = np.arange(9.0).reshape(3, 3)
        # (0 + 4)/2 and 8 averaged with equal block weights
        np.testing.assert_allclose(context.tau(x), 5.0 * np.eye(3))

    def test_non_faithful_state(self):
        B = block_diagonal_algebra([1, 1])
        corner = ConditionalExpectation.from_function(B, scalar_algebra(2), lambda b: b[0, 0] * np.eye(2))
        self.assertTrue(check_conditional_expectation(corner).passed)
        result = check_faithfulness(corner)
        self.assertFalse(result)
        self.assertEqual(result.rank, 1)
        np.testing.assert_allclose(np.abs(np.diag(result.witness)), [0, 1], atol=1e-12)

    def test_faithful_state(self):
        context = make_block_diagonal_context([1, 2])
        result = check_faithfulness(context.F)
        self.assertTrue(result)
        self.assertEqual(result.rank, context.B.dim)

    def test_agrees_with_sampled_scan(self):
        B = block_diagonal_algebra([1, 1])
        expectations = [
            make_block_diagonal_context([1, 2]).F,
            make_block_diagonal_context([1, 1, 1], weights=[0.2, 0.3, 0.5]).F,
            normalized_trace(full_matrix_algebra(2)),
            ConditionalExpectation.from_function(B, scalar_algebra(2), lambda b: b[0, 0] * np.eye(2)),
        ]
        rng = np.random.default_rng(23)
        for expectation in expectations:
            source = expectation.source
            degenerate = False
            for _ in range(1000):
                coords = rng.standard_normal(source.dim) + 1j * rng.standard_normal(source.dim)
                if rng.random() < 0.5:
                    coords[rng.random(source.dim) < 0.5] = 0
                if not coords.any():
                    continue
                b1 = source.element(coords)
                b1 = b1 / np.linalg.norm(b1, 2)
                images = [expectation(b1 @ b2) for b2 in source.basis]
                if max(np.abs(image).max() for image in images) < 1e-12:
                    degenerate = True
                    break
            result = check_faithfulness(expectation)
            with self.subTest(expectation=repr(expectation)):
                if degenerate:
                    self.assertFalse(result)
                else:
                    self.assertTrue(result)
        self.assertFalse(check_faithfulness(expectations[-1]))


class ContextTests(SimpleTestCase):
    def test_block_context_validates(self):
        context = make_block_diagonal_context([2, 1], weights=[0.5, 0.5])
        checks = context.validate()
        self.assertTrue(all(report.passed for report in checks['reports'].values()))
        self.assertEqual(context.B.dim, 5)
        self.assertEqual(context.D.dim, 1)

    def test_weights_must_sum_to_one(self):
        with self.assertRaises(ConfigurationError):
            make_block_diagonal_context([1, 1], weights=[0.5, 0.6])
        with self.assertRaises(ConfigurationError):
            make_block_diagonal_context([1, 1], weights=[1.0, 0.0])

    def test_groups_must_partition_blocks(self):
        with self.assertRaises(ConfigurationError):
            make_grouped_diagonal_context(3, [[0, 1]])

    def test_kernel_of_F(self):
        context = make_grouped_diagonal_context(4, [[0, 1], [2, 3]])
        self.assertEqual(context.D.dim, 2)
        kernel = context.kernel_basis
        self.assertEqual(kernel.shape[0], 2)
        np.testing.assert_allclose(context.F(kernel), 0, atol=1e-12)
        self.assertTrue(context.B.contains(kernel))

    def test_trivial_kernel_when_D_equals_B(self):
        context = make_grouped_diagonal_context(2, [[0], [1]])
        self.assertEqual(context.kernel_basis.shape[0], 0)

    def test_description_round_trip(self):
        context = make_block_diagonal_context([2, 1], weights=[0.4, 0.6])
        rebuilt = context_from_description(context.description)
        x = np.arange(9.0).reshape(3, 3)
        np.testing.assert_allclose(rebuilt.tau(x), context.tau(x))

    def test_description_of_diagonal_algebra(self):
        context = context_from_description({'ambient_dim': 3})
        self.assertEqual(context.B.dim, 3)

    def test_malformed_description(self):
        with self.assertRaises(ConfigurationError):
            context_from_description({'blocks': [1, 1], 'ambient_dim': 3})
        with self.assertRaises(ConfigurationError):
            context_from_description({})


class ChainTests(SimpleTestCase):
    def test_diagonal_chain(self):
        chain = make_diagonal_chain(4, [[0, 1], [2, 3]])
        self.assertEqual((chain.top.dim, chain.middle.dim, chain.base.dim), (4, 2, 1))
        x = np.diag([1.0, 3.0, 5.0, 7.0])
        np.testing.assert_allclose(chain.top_to_middle(x), np.diag([2.0, 2.0, 6.0, 6.0]))
        np.testing.assert_allclose(chain.top_to_base(x), 4.0 * np.eye(4))
        for expectation in chain.expectations():
            self.assertTrue(check_conditional_expectation(expectation).passed)

    def test_partial_coarsening(self):
        chain = make_diagonal_chain(3, [[0], [1], [2]], base_groups=[[0, 1], [2]])
        np.testing.assert_allclose(chain.top_to_base(np.diag([1.0, 3.0, 5.0])), np.diag([2.0, 2.0, 5.0]))
