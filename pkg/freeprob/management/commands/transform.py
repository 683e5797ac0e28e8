from freeprob.conf import setting
from freeprob.cumulant_engine import (
    VariableTuple, check_order_cap, cumulants_from_moments, moments_from_cumulants,
)
from freeprob.exceptions import ConfigurationError
from freeprob.serializers import decode_complex, load_context, load_json, series_from_json, series_to_json

from ._base import FreeprobCommand


class Command(FreeprobCommand):
    help = 'Convert between B-valued moment and cumulant series'
    command_name = 'transform'
    action_aliases = {'cumulants': 'moments-to-cumulants', 'moments': 'cumulants-to-moments'}

    def add_actions(self, subparsers):
        cumulants = self.add_action(subparsers, 'moments-to-cumulants', 'Cumulant series of a moment series')
        cumulants.add_argument('series', help='Moment series (JSON)')
        cumulants.add_argument('--order', type=int, help='Highest order (default: the series cap)')

        moments = self.add_action(subparsers, 'cumulants-to-moments', 'Moment series of a cumulant series')
        moments.add_argument('series', help='Cumulant series (JSON)')
        moments.add_argument('--order', type=int, help='Highest order (default: the series cap)')

        concrete = self.add_action(subparsers, 'from-matrices', 'Moment series of concrete matrix variables')
        concrete.add_argument('context', help='Context description (JSON)')
        concrete.add_argument('matrices', help='JSON with "matrices": list of N×N matrices of [re, im] pairs')
        concrete.add_argument('--order', type=int, default=setting('ORDER_CAP_DEFAULT'))
        concrete.add_argument('--cumulants', action='store_true', help='Emit the cumulant series instead')

    def handle_moments_to_cumulants(self, series, order, threads, **options):
        data = load_json(series)
        moments, context = series_from_json(data, kind='moment')
        cumulants = cumulants_from_moments(moments, order, threads=threads)
        return series_to_json(cumulants, context, data.get('algebra', 'B'))

    def handle_cumulants_to_moments(self, series, order, threads, **options):
        data = load_json(series)
        cumulants, context = series_from_json(data, kind='cumulant')
        moments = moments_from_cumulants(cumulants, order, threads=threads)
        return series_to_json(moments, context, data.get('algebra', 'B'))

    def handle_from_matrices(self, context, matrices, order, cumulants, threads, **options):
        ctx = load_context(context)
        data = load_json(matrices)
        if 'matrices' not in data:
            raise ConfigurationError('Expected a "matrices" list')
        variables = VariableTuple(ctx, decode_complex(data['matrices']))
        moments = variables.moment_series(check_order_cap(order))
        if cumulants:
            return series_to_json(cumulants_from_moments(moments, threads=threads), ctx)
        return series_to_json(moments, ctx)
