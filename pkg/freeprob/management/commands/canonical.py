from freeprob.canonical_model import CanonicalVariables, PrescribedCumulants
from freeprob.cumulant_engine import cumulants_from_moments
from freeprob.serializers import load_json, series_from_json, series_to_json

from ._base import FreeprobCommand


class Command(FreeprobCommand):
    help = 'Moments of the canonical variables with prescribed B-valued cumulants'
    command_name = 'canonical'
    verdict_codes = {'pass': 0, 'fail': 1}

    def add_actions(self, subparsers):
        moments = self.add_action(subparsers, 'moments', 'B-valued moment series of the canonical variables')
        moments.add_argument('--cumulants', required=True, help='Prescribed cumulant series (JSON)')
        moments.add_argument('--order', type=int, required=True, help='Highest moment order')
        moments.add_argument('--word-limit', type=int, help='Abort beyond this many expansion branches per moment')

        fidelity = self.add_action(subparsers, 'fidelity',
                                   'Recover the cumulants from the canonical moments and compare')
        fidelity.add_argument('--cumulants', required=True, help='Prescribed cumulant series (JSON)')
        fidelity.add_argument('--order', type=int, help='Highest order (default: the series cap)')
        fidelity.add_argument('--tolerance', type=float, default=1e-9)

    def _variables(self, path, word_limit=None):
        data = load_json(path)
        series, context = series_from_json(data, kind='cumulant')
        return CanonicalVariables(PrescribedCumulants(series), word_limit=word_limit), series, context, data

    def handle_moments(self, cumulants, order, word_limit, **options):
        variables, _, context, data = self._variables(cumulants, word_limit)
        return series_to_json(variables.moment_series(order), context, data.get('algebra', 'B'))

    def handle_fidelity(self, cumulants, order, tolerance, threads, **options):
        variables, prescribed, _, _ = self._variables(cumulants)
        order = order or prescribed.order_cap
        recovered = cumulants_from_moments(variables.moment_series(order), threads=threads)
        deviation = recovered.max_difference(prescribed, order)
        self.verdict = 'pass' if deviation < tolerance else 'fail'
        return {'order': order, 'max_deviation': deviation, 'tolerance': tolerance, 'verdict': self.verdict}
