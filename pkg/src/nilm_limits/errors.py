"""Exception hierarchy.

Input and configuration problems derive from :class:`InputError` (CLI exit
code 2); numerical failures derive from :class:`NumericalError` (exit code 3).
"""


class NilmLimitsError(Exception):
    """Base class for every error raised by this package."""


class InputError(NilmLimitsError, ValueError):
    pass


class NumericalError(NilmLimitsError, ArithmeticError):
    pass


# signal ingestion and composition
class EmptySignal(InputError):
    pass


class ParseError(InputError):
    pass


class NonMonotoneTime(InputError):
    pass


class OutOfRange(InputError):
    pass


class LengthMismatch(InputError):
    pass


class UnknownSource(InputError):
    pass


class PhaseOutOfRange(InputError):
    pass


class TooShort(InputError):
    pass


# detection
class DimensionMismatch(InputError):
    pass


class EmptyScenarioSet(InputError):
    pass


class EmptyCollection(InputError):
    pass


class ZeroPrior(InputError):
    pass


class InvalidPrior(InputError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class DegenerateHypotheses(NumericalError):
    """Two hypotheses share a mean, so no likelihood threshold separates them."""


class ZeroNormal(NumericalError):
    pass


class DuplicateMean(NumericalError):
    pass


class ConfigError(InputError):
    pass
