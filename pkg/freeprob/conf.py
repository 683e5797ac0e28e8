"""Access to the ``FREEPROB`` settings block with library defaults."""

from django.conf import settings

DEFAULTS = {
    'TOLERANCE': 1e-9,
    'NC_MAX_SIZE': 14,
    'NC2_MAX_SIZE': 16,
    'ORDER_CAP_DEFAULT': 6,
    'ORDER_CAP_MAX': 8,
    'WORD_LIMIT': 10 ** 6,
    'PREDICTOR_RESOLUTION': 64,
    'PREDICTOR_MAX_ORDER': 12,
    'REFINEMENT_TOLERANCE': 1e-3,
    'PASS_TOLERANCE': 1e-8,
    'FAIL_THRESHOLD': 1e-3,
    'ORACLE_RANDOM_WORDS': 200,
    'HISTOGRAM_BINS': 60,
    'THREADS': 1,
}


def setting(name):
    """Return ``settings.FREEPROB[name]``, or the default outside a configured project."""
    if name not in DEFAULTS:
        raise KeyError(f"Unknown freeprob setting: {name}")
    if settings.configured:
        return getattr(settings, 'FREEPROB', {}).get(name, DEFAULTS[name])
    return DEFAULTS[name]
