from freeprob.algebra_core import check_conditional_expectation, check_faithfulness
from freeprob.serializers import encode_complex, load_context

from ._base import FreeprobCommand


class Command(FreeprobCommand):
    help = 'Validate an inclusion D ⊂ B ⊂ M with its conditional expectations'
    command_name = 'algebra'
    verdict_codes = {'pass': 0, 'fail': 1}

    def add_actions(self, subparsers):
        check = self.add_action(subparsers, 'check', 'Check that E, F and F∘E are faithful conditional expectations')
        check.add_argument('context', help='Context description (JSON)')

        kernel = self.add_action(subparsers, 'kernel', 'Basis of ker F, the centered elements of B')
        kernel.add_argument('context', help='Context description (JSON)')

    def handle_check(self, context, **options):
        ctx = load_context(context)
        for algebra in (ctx.B, ctx.D):
            algebra.validate()
        reports = {
            'E': check_conditional_expectation(ctx.E),
            'F': check_conditional_expectation(ctx.F),
            'F∘E': check_conditional_expectation(ctx.tau),
        }
        faithfulness = check_faithfulness(ctx.F)
        passed = all(r.passed for r in reports.values()) and faithfulness.faithful
        self.verdict = 'pass' if passed else 'fail'
        return {
            'context': ctx.description,
            'dims': {'M': ctx.M.dim, 'B': ctx.B.dim, 'D': ctx.D.dim},
            'expectations': {name: report.to_json() for name, report in reports.items()},
            'faithful': faithfulness.faithful,
            'gram_rank': faithfulness.rank,
            'verdict': self.verdict,
        }

    def handle_kernel(self, context, **options):
        ctx = load_context(context)
        kernel = ctx.kernel_basis
        return {'context': ctx.description, 'dimension': len(kernel),
                'basis': encode_complex(ctx.B.coordinates(kernel)) if len(kernel) else []}
