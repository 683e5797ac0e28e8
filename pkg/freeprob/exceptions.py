class FreeProbabilityError(Exception):
    """Base class for errors raised by the freeprob computations."""


class SizeLimitError(FreeProbabilityError, ValueError):
    """A combinatorial enumeration was asked for beyond its cap."""


class ConfigurationError(FreeProbabilityError, ValueError):
    """Inconsistent context, profile or series description."""


class DimensionMismatchError(FreeProbabilityError, ValueError):
    """Matrices or coefficient vectors of the wrong shape."""


class OrderCapError(FreeProbabilityError):
    """A series or multiplicative map was evaluated beyond its order cap."""


class LevelCapError(FreeProbabilityError):
    """A canonical-model ladder generator exceeds the truncation level."""


class WordLimitError(FreeProbabilityError):
    """Canonical-model expansion produced more words than allowed."""


class MissingDataError(FreeProbabilityError):
    """Moment or cumulant data needed for a computation is absent."""


class HypothesisError(FreeProbabilityError):
    """The hypothesis of a check does not hold, so the check cannot run."""
