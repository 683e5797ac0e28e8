import numpy as np

from freeprob.algebra_core import make_diagonal_chain, make_grouped_diagonal_context
from freeprob.canonical_model import CanonicalVariables, PrescribedCumulants
from freeprob.cumulant_engine import MomentSeries
from freeprob.exceptions import ConfigurationError
from freeprob.freeness_check import (
    EXIT_CODES, check_factorization, check_restriction_theorem, check_semicircular_characterization,
    check_transitivity, compare_with_subalgebra_cumulants, freeness_oracle, lift_free_variables,
)
from freeprob.serializers import (
    eta_from_json, load_context, load_json, series_from_json, series_to_json,
)

from ._base import FreeprobCommand


def parse_groups(text):
    """``0,1;2,3`` → [[0, 1], [2, 3]]."""
    try:
        return [[int(i) for i in group.split(',')] for group in text.split(';') if group.strip()]
    except ValueError:
        raise ConfigurationError(f"Groups must look like 0,1;2,3, got {text!r}") from None


class Command(FreeprobCommand):
    help = 'Check freeness with amalgamation: factorization, oracle, restriction, semicircle, transitivity'
    command_name = 'freeness'
    verdict_codes = EXIT_CODES

    def add_actions(self, subparsers):
        factorization = self.add_action(subparsers, 'factorization', 'Does k factor as F∘k∘F?')
        factorization.add_argument('series', help='B-valued cumulant series (JSON)')
        factorization.add_argument('context', help='Context description (JSON)')
        factorization.add_argument('--order', type=int)

        lift = self.add_action(subparsers, 'lift', 'B-valued cumulants of variables free from B over D')
        lift.add_argument('series', help='D-valued cumulant series (JSON)')
        lift.add_argument('context', help='Context description (JSON)')

        oracle = self.add_action(subparsers, 'oracle', 'Evaluate F∘E on alternating centered words')
        oracle.add_argument('series', help='Moment or cumulant series over B (JSON)')
        oracle.add_argument('context', help='Context description (JSON)')
        oracle.add_argument('--order', type=int, default=6, help='Highest word order (at most 6)')
        oracle.add_argument('--seed', type=int, default=0, help='Seed for the random words')
        oracle.add_argument('--random-words', type=int, help='Number of random words')

        restriction = self.add_action(subparsers, 'restriction',
                                      'D-valued cumulants against the restriction of the B-valued ones')
        restriction.add_argument('series', help='B-valued cumulant series (JSON)')
        restriction.add_argument('context', help='Context description (JSON)')
        restriction.add_argument('--order', type=int)

        subalgebra = self.add_action(subparsers, 'subalgebra', 'k_B(b, …) against k_D(F(b), …)')
        subalgebra.add_argument('series', help='B-valued cumulant series (JSON)')
        subalgebra.add_argument('context', help='Context description (JSON)')
        subalgebra.add_argument('--order', type=int)

        semicircular = self.add_action(subparsers, 'semicircular',
                                       'Semicircle law iff η(1) is scalar, on the even moments')
        semicircular.add_argument('eta', help='Covariance map (JSON)')
        semicircular.add_argument('context', help='Context description (JSON)')
        semicircular.add_argument('--order', type=int, default=6)

        transitivity = self.add_action(subparsers, 'transitivity',
                                       'Freeness over a chain of diagonal algebras')
        transitivity.add_argument('series', help='Cumulant series over diag(ℂ^n) (JSON)')
        transitivity.add_argument('--middle-groups', required=True, help='Middle algebra as groups, e.g. 0,1;2,3')
        transitivity.add_argument('--base-groups', help='Base as groups of middle groups (default: scalars)')
        transitivity.add_argument('--order', type=int)

    def _series(self, path, context_path, kind='cumulant'):
        context = load_context(context_path)
        series, _ = series_from_json(load_json(path), context, kind=kind)
        return series, context

    def handle_factorization(self, series, context, order, **options):
        cumulants, ctx = self._series(series, context)
        report = check_factorization(cumulants, ctx.F, order)
        self.verdict = report.verdict
        return report.to_json()

    def handle_lift(self, series, context, **options):
        ctx = load_context(context)
        data = load_json(series)
        d_series, _ = series_from_json(data, ctx, kind='cumulant')
        return series_to_json(lift_free_variables(d_series, ctx).series, ctx)

    def handle_oracle(self, series, context, order, seed, random_words, threads, **options):
        ctx = load_context(context)
        data = load_json(series)
        loaded, _ = series_from_json(data, ctx)
        if isinstance(loaded, MomentSeries):
            provider = loaded
        else:
            canonical = CanonicalVariables(PrescribedCumulants(loaded))
            provider = canonical.moment_series(min(order, canonical.order_cap))
        report = freeness_oracle(provider, ctx, order, rng=np.random.default_rng(seed),
                                 random_words=random_words, threads=threads)
        self.verdict = report.verdict
        return report.to_json()

    def handle_restriction(self, series, context, order, **options):
        cumulants, ctx = self._series(series, context)
        report = check_restriction_theorem(cumulants, ctx, order)
        self.verdict = report.verdict
        return report.to_json()

    def handle_subalgebra(self, series, context, order, **options):
        cumulants, ctx = self._series(series, context)
        report = compare_with_subalgebra_cumulants(cumulants, ctx, order)
        self.verdict = 'pass' if report.passed else 'fail'
        return report.to_json()

    def handle_semicircular(self, eta, context, order, **options):
        ctx = load_context(context)
        eta_map, _ = eta_from_json(load_json(eta), ctx)
        report = check_semicircular_characterization(eta_map, ctx, order)
        self.verdict = report.verdict
        return report.to_json()

    def handle_transitivity(self, series, middle_groups, base_groups, order, **options):
        data = load_json(series)
        middle = parse_groups(middle_groups)
        n = sum(len(group) for group in middle)
        chain = make_diagonal_chain(n, middle, parse_groups(base_groups) if base_groups else None)
        top_context = make_grouped_diagonal_context(n, middle)
        top_series, _ = series_from_json(data, top_context, kind='cumulant')
        report = check_transitivity(chain, top_series, order)
        self.verdict = report.verdict
        return report.to_json()
