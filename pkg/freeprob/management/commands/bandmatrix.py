import pandas as pd

from freeprob.band_matrix import (
    VarianceProfile, corollary_criterion, empirical_spectrum, predict_moments, semicircle_distance,
)
from freeprob.conf import setting

from ._base import FreeprobCommand


class Command(FreeprobCommand):
    help = 'Gaussian band matrices with a variance profile: sample, predict, criterion'
    command_name = 'bandmatrix'

    def add_actions(self, subparsers):
        run = self.add_action(subparsers, 'run', 'Sample band matrices and compare with the prediction')
        run.add_argument('--profile', required=True, help='builtin:const|xy|linear|checkerboard or a JSON file')
        run.add_argument('--n', type=int, default=512, help='Matrix size')
        run.add_argument('--trials', type=int, default=20)
        run.add_argument('--seed', type=int, required=True)
        run.add_argument('--bins', type=int, default=setting('HISTOGRAM_BINS'))
        run.add_argument('--csv-table', choices=['histogram', 'moments'], default='histogram',
                         help='Table written by --format csv')

        predict = self.add_action(subparsers, 'predict', 'Limit moments from the operator-valued semicircle')
        predict.add_argument('--profile', required=True)
        predict.add_argument('--orders', type=int, default=8, help='Highest moment order (at most 12)')
        predict.add_argument('--resolution', type=int, help='Grid used for the covariance kernel')
        predict.add_argument('--extrapolate', action='store_true',
                             help='Richardson estimate from the grid and its refinement')

        criterion = self.add_action(subparsers, 'criterion', 'Are the row integrals of the profile constant?')
        criterion.add_argument('--profile', required=True)
        criterion.add_argument('--tolerance', type=float)

    def handle_run(self, profile, n, trials, seed, bins, csv_table, threads, **options):
        variance = VarianceProfile.load(profile)
        sample = empirical_spectrum(n, variance, trials, seed, threads=threads)
        prediction = predict_moments(variance, 8)
        criterion = corollary_criterion(variance)
        reference = criterion.common_value if criterion.holds else prediction.moments[2]
        density, edges = sample.histogram(bins)
        self._frames = {
            'histogram': sample.histogram_frame(bins),
            'moments': sample.moments_frame(prediction.moments),
        }
        self._csv_table = csv_table
        return {
            'profile': variance.to_json(),
            'n': n,
            'trials': trials,
            'seed': seed,
            'moments': {str(k): v for k, v in sample.moments.items()},
            'standard_errors': {str(k): v for k, v in sample.standard_errors.items()},
            'predicted': {str(k): v for k, v in prediction.moments.items()},
            'fourth_moment_gap': sample.fourth_moment_gap,
            'criterion': criterion.to_json(),
            'semicircle_variance': reference,
            'ks_statistic': semicircle_distance(sample, reference) if reference > 0 else None,
            'histogram': {'edges': edges.tolist(), 'density': density.tolist()},
        }

    def handle_predict(self, profile, orders, resolution, extrapolate, **options):
        variance = VarianceProfile.load(profile)
        prediction = predict_moments(variance, orders, resolution, extrapolate=extrapolate)
        self._frames = {'moments': pd.DataFrame({'order': list(prediction.moments),
                                                 'predicted': list(prediction.moments.values())})}
        self._csv_table = 'moments'
        return {
            'profile': variance.to_json(),
            'resolution': prediction.resolution,
            'extrapolated': extrapolate,
            'moments': {str(k): v for k, v in prediction.moments.items()},
            'refinement_change': prediction.refinement_change,
            'coarse': prediction.coarse,
        }

    def handle_criterion(self, profile, tolerance, **options):
        variance = VarianceProfile.load(profile)
        result = corollary_criterion(variance, tolerance)
        return {'profile': variance.to_json(), **result.to_json()}

    def to_frame(self, payload):
        frames = getattr(self, '_frames', None)
        return frames[self._csv_table] if frames else None

    def write_text(self, payload):
        if 'holds' in payload:
            self.stdout.write(f"{str(payload['holds']).lower()} range={payload['range']:.3g}")
        else:
            super().write_text(payload)
