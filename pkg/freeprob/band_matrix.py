"""
Gaussian band matrices with a variance profile and their limiting spectrum.

The profile σ on [0,1]² is sampled at cell midpoints both for the random
matrices and for the predictor, so both see the same quadrature rule.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .conf import setting
from .cumulant_engine import evaluate_pair_bracketing
from .exceptions import ConfigurationError, MissingDataError, OrderCapError
from .nc_partitions import enumerate_nc2

logger = logging.getLogger(__name__)

MAX_TRACE_ORDER = 8


def _checkerboard(x, y):
    i = np.floor(np.asarray(x) * 4).clip(0, 3)
    j = np.floor(np.asarray(y) * 4).clip(0, 3)
    return np.where((i + j) % 2 == 0, 1.5, 0.5)


BUILTIN_PROFILES: Dict[str, Callable] = {
    'const': lambda x, y: np.ones(np.broadcast(x, y).shape),
    'xy': lambda x, y: 4 * np.asarray(x) * np.asarray(y),
    'linear': lambda x, y: 1 + np.asarray(x) + np.asarray(y),
    'checkerboard': _checkerboard,
}


def midpoints(m: int) -> np.ndarray:
    return (np.arange(m) + 0.5) / m


class VarianceProfile:
    """σ(x, y) ≥ 0, symmetric; either a function or an m×m grid of cell values."""

    def __init__(self, values=None, function: Optional[Callable] = None, name: str = 'custom',
                 resolution: Optional[int] = None):
        if values is None and function is None:
            raise ConfigurationError("A profile needs grid values or a function")
        self.function = function
        self.name = name
        if values is None:
            m = resolution or setting('PREDICTOR_RESOLUTION')
            x = midpoints(m)
            values = function(x[:, None], x[None, :])
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1] or values.shape[0] == 0:
            raise ConfigurationError(f"Profile grid must be square, got shape {values.shape}")
        if np.any(values < 0):
            raise ConfigurationError("Profile values must be non-negative")
        if not np.allclose(values, values.T, atol=1e-12):
            raise ConfigurationError("Profile must be symmetric")
        self.values = values

    def __repr__(self):
        return f"VarianceProfile({self.name}, m={self.resolution})"

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    @classmethod
    def builtin(cls, name: str) -> 'VarianceProfile':
        try:
            function = BUILTIN_PROFILES[name]
        except KeyError:
            raise ConfigurationError(
                f"Unknown built-in profile {name!r}; choose from {', '.join(BUILTIN_PROFILES)}") from None
        return cls(function=function, name=name)

    @classmethod
    def constant(cls, c: float) -> 'VarianceProfile':
        return cls(values=[[float(c)]], name=f'const({c})')

    @classmethod
    def from_json(cls, data: dict) -> 'VarianceProfile':
        if 'builtin' in data:
            return cls.builtin(data['builtin'])
        try:
            return cls(values=data['values'], name=data.get('name', 'custom'))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"Malformed profile description: {exc}") from exc

    @classmethod
    def load(cls, source: str) -> 'VarianceProfile':
        """``builtin:<name>`` or the path of a JSON profile file."""
        if source.startswith('builtin:'):
            return cls.builtin(source.split(':', 1)[1])
        path = Path(source)
        if not path.exists():
            raise ConfigurationError(f"Profile file not found: {source}")
        try:
            return cls.from_json(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"Profile file {source} is not valid JSON: {exc}") from exc

    def to_json(self) -> dict:
        if self.name in BUILTIN_PROFILES and self.function is BUILTIN_PROFILES[self.name]:
            return {'builtin': self.name}
        return {'name': self.name, 'values': self.values.tolist()}

    def at(self, x, y) -> np.ndarray:
        if self.function is not None:
            return self.function(x, y)
        m = self.resolution
        i = np.floor(np.asarray(x) * m).astype(int).clip(0, m - 1)
        j = np.floor(np.asarray(y) * m).astype(int).clip(0, m - 1)
        return self.values[i, j]

    def grid(self, m: int) -> np.ndarray:
        """σ at the midpoints of an m×m grid."""
        if self.function is None and m % self.resolution == 0:
            factor = m // self.resolution
            return np.repeat(np.repeat(self.values, factor, axis=0), factor, axis=1)
        x = midpoints(m)
        return np.asarray(self.at(x[:, None], x[None, :]), dtype=float) * np.ones((m, m))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_band_matrix(n: int, profile: VarianceProfile, seed=None) -> np.ndarray:
    """Hermitian G with E|g_ij|² = σ((i+½)/n, (j+½)/n)/n; diagonal entries real."""
    if n < 2:
        raise ConfigurationError(f"Matrix size must be at least 2, got {n}")
    rng = _rng(seed)
    variance = profile.grid(n) / n
    noise = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    upper = np.triu(noise * np.sqrt(variance), 1)
    diagonal = rng.standard_normal(n) * np.sqrt(np.diag(variance))
    return upper + upper.conj().T + np.diag(diagonal)


def trace_moments(G: np.ndarray) -> np.ndarray:
    """(1/n) tr(G^k) for k = 1..8 from three products."""
    n = G.shape[0]
    G2 = G @ G
    G3 = G2 @ G
    G4 = G2 @ G2
    traces = [
        np.trace(G), np.trace(G2), np.trace(G3), np.trace(G4),
        np.sum(G4 * G.T), np.sum(G4 * G2.T), np.sum(G4 * G3.T), np.sum(G4 * G4.T),
    ]
    return np.real(np.array(traces)) / n


@dataclass
class SpectralSample:
    n: int
    trials: int
    eigenvalues: np.ndarray
    trial_moments: np.ndarray
    seed: Optional[int] = None

    @property
    def pooled(self) -> np.ndarray:
        return np.sort(self.eigenvalues.ravel())

    @property
    def moments(self) -> Dict[int, float]:
        means = self.trial_moments.mean(axis=0)
        return {k + 1: float(v) for k, v in enumerate(means)}

    @property
    def standard_errors(self) -> Dict[int, float]:
        if self.trials < 2:
            return {k + 1: float('nan') for k in range(self.trial_moments.shape[1])}
        errors = self.trial_moments.std(axis=0, ddof=1) / np.sqrt(self.trials)
        return {k + 1: float(v) for k, v in enumerate(errors)}

    @property
    def fourth_moment_gap(self) -> float:
        m = self.moments
        return m[4] - 2 * m[2] ** 2

    def histogram(self, bins: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Trial-averaged eigenvalue density."""
        bins = setting('HISTOGRAM_BINS') if bins is None else bins
        return np.histogram(self.pooled, bins=bins, density=True)

    def histogram_frame(self, bins: Optional[int] = None) -> pd.DataFrame:
        density, edges = self.histogram(bins)
        return pd.DataFrame({'left': edges[:-1], 'right': edges[1:], 'density': density})

    def moments_frame(self, predicted: Optional[Dict[int, float]] = None) -> pd.DataFrame:
        frame = pd.DataFrame({
            'order': list(self.moments),
            'empirical': list(self.moments.values()),
            'standard_error': list(self.standard_errors.values()),
        })
        if predicted is not None:
            frame['predicted'] = [predicted.get(k, np.nan) for k in frame['order']]
        return frame


def empirical_spectrum(n: int, profile: VarianceProfile, trials: int, seed: int,
                       threads: Optional[int] = None) -> SpectralSample:
    """Independent trials seeded by (seed, trial); results do not depend on the schedule."""
    if trials < 1:
        raise ConfigurationError("At least one trial is needed")
    threads = setting('THREADS') if threads is None else threads

    def trial(index: int):
        G = sample_band_matrix(n, profile, np.random.default_rng([seed, index]))
        return np.linalg.eigvalsh(G), trace_moments(G)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(trial, range(trials)))
    else:
        results = [trial(index) for index in range(trials)]
    logger.info("Sampled %d band matrices of size %d (profile %s)", trials, n, profile.name)
    return SpectralSample(
        n=n,
        trials=trials,
        eigenvalues=np.array([eig for eig, _ in results]),
        trial_moments=np.array([m for _, m in results]),
        seed=seed,
    )


@dataclass
class MomentPrediction:
    moments: Dict[int, float]
    resolution: int
    refinement_change: Optional[float] = None
    coarse: bool = False

    def as_list(self) -> List[float]:
        return [self.moments[k] for k in sorted(self.moments)]


def _predict_at(profile: VarianceProfile, max_order: int, m: int) -> Dict[int, float]:
    kernel = profile.grid(m)
    unit = np.ones(m)

    def eta(f):
        return kernel @ f / m

    moments = {}
    for order in range(1, max_order + 1):
        if order % 2:
            moments[order] = 0.0
            continue
        total = sum(evaluate_pair_bracketing(p, eta, unit, np.multiply) for p in enumerate_nc2(order))
        moments[order] = float(np.mean(total))
    return moments


def predict_moments(profile: VarianceProfile, max_order: int = 8, resolution: Optional[int] = None,
                    check_refinement: bool = True, extrapolate: bool = False) -> MomentPrediction:
    """Limit moments ∫ t^k dμ of the band ensemble from η(f)(x) = ∫ σ(x,y) f(y) dy.

    With ``extrapolate`` the result is the Richardson estimate from m and 2m,
    which removes the O(1/m²) midpoint error for smooth profiles.
    """
    limit = setting('PREDICTOR_MAX_ORDER')
    if not 1 <= max_order <= limit:
        raise OrderCapError(f"Predictor order {max_order} outside 1..{limit}")
    m = resolution or setting('PREDICTOR_RESOLUTION')
    moments = _predict_at(profile, max_order, m)
    prediction = MomentPrediction(moments, m)
    if check_refinement or extrapolate:
        refined = _predict_at(profile, max_order, 2 * m)
        change = max(abs(refined[k] - moments[k]) for k in moments)
        prediction.refinement_change = change
        if change > setting('REFINEMENT_TOLERANCE'):
            prediction.coarse = True
            logger.warning("Resolution %d is too coarse for %s: refining changes moments by %.2e",
                           m, profile.name, change)
        if extrapolate:
            prediction.moments = {k: (4 * refined[k] - moments[k]) / 3 for k in moments}
    return prediction


@dataclass
class CriterionResult:
    holds: bool
    range: float
    row_integrals: np.ndarray = field(repr=False)
    tolerance: float = 0.0

    @property
    def common_value(self) -> Optional[float]:
        return float(self.row_integrals.mean()) if self.holds else None

    def to_json(self):
        return {'holds': self.holds, 'range': self.range, 'tolerance': self.tolerance,
                'common_row_integral': self.common_value,
                'row_integral_min': float(self.row_integrals.min()),
                'row_integral_max': float(self.row_integrals.max())}


def corollary_criterion(profile: VarianceProfile, tolerance: Optional[float] = None,
                        resolution: Optional[int] = None) -> CriterionResult:
    """The limit is a semicircle iff the row integrals r(x) = ∫ σ(x,y) dy are constant."""
    tolerance = setting('TOLERANCE') if tolerance is None else tolerance
    m = resolution or (profile.resolution if profile.function is None else setting('PREDICTOR_RESOLUTION'))
    rows = profile.grid(m).mean(axis=1)
    spread = float(rows.max() - rows.min())
    return CriterionResult(spread < tolerance, spread, rows, tolerance)


def semicircle_cdf(x, c: float = 1.0) -> np.ndarray:
    if c <= 0:
        raise ValueError(f"Semicircle variance must be positive, got {c}")
    radius = 2 * np.sqrt(c)
    x = np.clip(np.asarray(x, dtype=float), -radius, radius)
    return 0.5 + x * np.sqrt(4 * c - x ** 2) / (4 * np.pi * c) + np.arcsin(x / radius) / np.pi


def semicircle_density(x, c: float = 1.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    inside = np.clip(4 * c - x ** 2, 0, None)
    return np.sqrt(inside) / (2 * np.pi * c)


def sample_semicircle(size: int, c: float = 1.0, seed=None) -> np.ndarray:
    """Exact semicircle draws: 2√c (2·Beta(3/2, 3/2) − 1)."""
    return 2 * np.sqrt(c) * (2 * _rng(seed).beta(1.5, 1.5, size) - 1)


def semicircle_distance(sample, c: float = 1.0) -> float:
    """Kolmogorov–Smirnov distance of pooled eigenvalues (or raw values) to the semicircle of variance c."""
    if c <= 0:
        raise ValueError(f"Semicircle variance must be positive, got {c}")
    values = sample.pooled if isinstance(sample, SpectralSample) else np.ravel(np.asarray(sample, dtype=float))
    if values.size == 0:
        raise MissingDataError("No eigenvalues to compare")
    return float(stats.kstest(values, lambda x: semicircle_cdf(x, c)).statistic)
