import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, TestCase

from freeprob.algebra_core import make_block_diagonal_context
from freeprob.cli import run
from freeprob.cumulant_engine import CumulantSeries, VariableTuple
from freeprob.freeness_check import lift_free_variables
from freeprob.models import ExperimentRun
from freeprob.serializers import series_to_json


def call(*argv):
    out, err = StringIO(), StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


class WorkspaceMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.workspace = Path(self._tmp.name)
        self.context = make_block_diagonal_context([1, 1])
        self.context_path = self.write('context.json', self.context.description)

    def write(self, name, data):
        path = self.workspace / name
        path.write_text(json.dumps(data))
        return str(path)

    def write_series(self, name, series, algebra='B'):
        return self.write(name, series_to_json(series, self.context, algebra))


class PartitionCommandTests(SimpleTestCase):
    def test_count_as_text(self):
        code, out, _ = call('nc', 'count', '4', '--format', 'text')
        self.assertEqual(code, 0)
        self.assertEqual(out.strip(), '14')

    def test_count_pairs_as_json(self):
        code, out, _ = call('nc', 'count', '6', '--pairs', '--no-timestamp')
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['count'], 5)

    def test_list_as_csv(self):
        code, out, _ = call('nc', 'list', '3', '--format', 'csv')
        self.assertEqual(code, 0)
        lines = out.strip().splitlines()
        self.assertEqual(len(lines), 6)
        self.assertIn('((()))', lines[1])

    def test_list_as_text(self):
        code, out, _ = call('nc', 'list', '3', '--format', 'text')
        self.assertEqual(code, 0)
        lines = out.strip().splitlines()
        self.assertEqual(len(lines), 5)
        self.assertIn('{{1,3},{2}}', lines)
        self.assertTrue(all(line.startswith('{{') for line in lines))

    def test_forest(self):
        code, out, _ = call('nc', 'forest', '{{1,4},{2,3}}')
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['n'], 4)

    def test_size_limit_is_a_usage_error(self):
        code, _, err = call('nc', 'count', '15')
        self.assertEqual(code, 64)
        self.assertIn('15', err)


class UsageTests(SimpleTestCase):
    def test_unknown_command(self):
        self.assertEqual(call('spectra')[0], 64)
        self.assertEqual(call()[0], 64)

    def test_unknown_action(self):
        self.assertEqual(call('nc', 'shuffle', '3')[0], 64)

    def test_help(self):
        self.assertEqual(call('bandmatrix', '--help')[0], 0)

    def test_missing_file(self):
        code, _, err = call('algebra', 'check', '/nonexistent/context.json')
        self.assertEqual(code, 64)
        self.assertIn('not found', err)


class FreenessCommandTests(WorkspaceMixin, SimpleTestCase):
    def test_lifted_series_factorizes(self):
        d_series = CumulantSeries(self.context.D, 1, 2)
        d_series.set_tensor((0,), np.zeros(1))
        d_series.set_tensor((0, 0), np.ones((1, 1)))
        path = self.write('d.json', series_to_json(d_series, self.context, 'D'))

        code, out, _ = call('freeness', 'lift', path, self.context_path, '--no-timestamp')
        self.assertEqual(code, 0)
        lifted = self.write('lifted.json', json.loads(out))

        code, out, _ = call('freeness', 'factorization', lifted, self.context_path)
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['verdict'], 'pass')

    def test_identity_covariance_fails(self):
        series = CumulantSeries(self.context.B, 1, 2)
        series.set_tensor((0,), np.zeros(2))
        series.set_tensor((0, 0), np.eye(2))
        path = self.write_series('k.json', series)
        code, out, _ = call('freeness', 'factorization', path, self.context_path)
        self.assertEqual(code, 1)
        self.assertAlmostEqual(json.loads(out)['max_deviation'], 0.5)

    def test_oracle_on_lifted_cumulants(self):
        d_series = CumulantSeries.random(self.context.D, 1, 3, np.random.default_rng(2))
        lifted = lift_free_variables(d_series, self.context).series
        path = self.write_series('lifted.json', lifted)
        code, out, _ = call('freeness', 'oracle', path, self.context_path, '--order', '3',
                            '--random-words', '10', '--seed', '4')
        self.assertEqual(code, 0, out)
        self.assertEqual(json.loads(out)['verdict'], 'pass')

    def test_oracle_defaults_to_order_six(self):
        variables = VariableTuple(self.context, np.array([[1.0, 0.5], [0.5, -1.0]]))
        path = self.write_series('moments.json', variables.moment_series(6))
        counts = {}
        for extra in ((), ('--order', '6'), ('--order', '4')):
            code, out, _ = call('freeness', 'oracle', path, self.context_path, *extra)
            self.assertIn(code, (0, 1, 2))
            counts[extra] = json.loads(out)['word_count']
        self.assertEqual(counts[()], counts[('--order', '6')])
        self.assertGreater(counts[()], counts[('--order', '4')])

    def test_restriction_hypothesis_fails(self):
        series = CumulantSeries(self.context.B, 1, 2)
        series.set_tensor((0,), np.array([1.0, 2.0]))
        series.set_tensor((0, 0), np.zeros((2, 2)))
        code, out, _ = call('freeness', 'restriction', self.write_series('k.json', series), self.context_path)
        self.assertEqual(code, 2)
        self.assertEqual(json.loads(out)['verdict'], 'hypothesis-fails')

    def test_semicircular_from_diagonal_kernel(self):
        eta = self.write('eta.json', {'diagonal': [[0.5, 0.5], [0.5, 0.5]]})
        code, out, _ = call('freeness', 'semicircular', eta, self.context_path)
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertTrue(payload['eta_one_scalar'])
        self.assertAlmostEqual(payload['moments']['4'], 2.0)

    def test_transitivity(self):
        series = CumulantSeries(make_block_diagonal_context([1, 1, 1, 1]).B, 1, 2)
        series.set_tensor((0,), np.zeros(4))
        series.set_tensor((0, 0), 0.25 * np.ones((4, 4)))
        path = self.write('top.json', series_to_json(series, make_block_diagonal_context([1, 1, 1, 1])))
        code, out, _ = call('freeness', 'transitivity', path, '--middle-groups', '0,1;2,3')
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['verdict'], 'holds')

    def test_bad_groups(self):
        path = self.write('top.json', {})
        self.assertEqual(call('freeness', 'transitivity', path, '--middle-groups', 'a;b')[0], 64)


class TransformCommandTests(WorkspaceMixin, SimpleTestCase):
    def test_round_trip(self):
        series = CumulantSeries.random(self.context.B, 1, 3, np.random.default_rng(8))
        path = self.write_series('k.json', series)
        code, out, _ = call('transform', 'cumulants-to-moments', path, '--no-timestamp')
        self.assertEqual(code, 0)
        moments = self.write('m.json', json.loads(out))
        code, out, _ = call('transform', 'moments-to-cumulants', moments, '--no-timestamp')
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(data['kind'], 'cumulant')
        recovered = {tuple(e['indices']): np.array(e['tensor']) for e in data['entries']}
        original = json.loads(Path(path).read_text())
        for entry in original['entries']:
            np.testing.assert_allclose(recovered[tuple(entry['indices'])], entry['tensor'], atol=1e-9)

    def test_short_action_names(self):
        series = CumulantSeries.random(self.context.B, 1, 3, np.random.default_rng(8))
        path = self.write_series('k.json', series)
        long_form = call('transform', 'cumulants-to-moments', path, '--no-timestamp')
        short_form = call('transform', 'moments', path, '--no-timestamp')
        self.assertEqual(short_form[:2], long_form[:2])
        moments = self.write('m.json', json.loads(long_form[1]))
        self.assertEqual(call('transform', 'cumulants', moments, '--no-timestamp')[:2],
                         call('transform', 'moments-to-cumulants', moments, '--no-timestamp')[:2])

    def test_canonical_fidelity(self):
        series = CumulantSeries.random(self.context.B, 1, 3, np.random.default_rng(9))
        code, out, _ = call('canonical', 'fidelity', '--cumulants', self.write_series('k.json', series))
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['verdict'], 'pass')

    def test_level_cap_is_numeric_error(self):
        series = CumulantSeries.random(self.context.B, 1, 2, np.random.default_rng(9))
        code, _, _ = call('canonical', 'moments', '--cumulants', self.write_series('k.json', series),
                          '--order', '4')
        self.assertEqual(code, 70)


class BandMatrixCommandTests(SimpleTestCase):
    def test_criterion_on_constant_profile(self):
        code, out, _ = call('bandmatrix', 'criterion', '--profile', 'builtin:const', '--format', 'text')
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith('true'))

    def test_predict_is_byte_stable_without_timestamp(self):
        args = ('bandmatrix', 'predict', '--profile', 'builtin:xy', '--orders', '4', '--no-timestamp')
        first, second = call(*args), call(*args)
        self.assertEqual(first[1], second[1])
        self.assertNotIn('generated_at', first[1])
        self.assertIn('generated_at', call(*args[:-1])[1])

    def test_run_writes_csv(self):
        with tempfile.TemporaryDirectory() as directory:
            out = Path(directory) / 'moments.csv'
            code, _, _ = call('bandmatrix', 'run', '--profile', 'builtin:checkerboard', '--n', '32',
                              '--trials', '3', '--seed', '1', '--format', 'csv', '--csv-table', 'moments',
                              '--out', str(out))
            self.assertEqual(code, 0)
            lines = out.read_text().strip().splitlines()
            self.assertEqual(lines[0], 'order,empirical,standard_error,predicted')
            self.assertEqual(len(lines), 9)

    def test_unknown_profile(self):
        self.assertEqual(call('bandmatrix', 'predict', '--profile', 'builtin:ring')[0], 64)


class RecordTests(TestCase):
    def test_record_stores_run(self):
        code, _, _ = call('bandmatrix', 'run', '--profile', 'builtin:const', '--n', '16', '--trials', '2',
                          '--seed', '3', '--record')
        self.assertEqual(code, 0)
        run_ = ExperimentRun.objects.get()
        self.assertEqual((run_.command, run_.action, run_.seed), ('bandmatrix', 'run', 3))
        self.assertEqual(run_.parameters['n'], 16)
        self.assertIn('moments', run_.results)

    def test_no_record_by_default(self):
        call('nc', 'count', '3')
        self.assertFalse(ExperimentRun.objects.exists())
