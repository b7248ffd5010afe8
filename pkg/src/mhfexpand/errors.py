"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MHFError(Exception):
    """Base class for every error raised by this package."""


class IdenticallyZero(MHFError, ZeroDivisionError):
    """A series that vanishes within its truncation was inverted."""


class ConstantPole(MHFError, ZeroDivisionError):
    """A constant Pochhammer residue requires division by zero."""


class IntegerParameter(MHFError, ValueError):
    """A Pochhammer identity was applied to an integer parameter."""


class UnsupportedForm(MHFError, ValueError):
    """An index form cannot be rewritten by the requested identity."""


class MixedSignForm(MHFError, ValueError):
    """A vanishing upper parameter carries a form with mixed signs."""


class NotNormalized(MHFError, ValueError):
    """An epsilon-dependent factor has a form the derivative engine rejects."""


class SingularLower(MHFError, ValueError):
    """A Taylor expansion was requested for a possibly singular function."""


class TruncationTooShallow(MHFError, ValueError):
    """Input series were not expanded far enough for the requested order."""


class DenominatorZero(MHFError, ZeroDivisionError):
    """A denominator Pochhammer symbol vanishes inside the summation box."""

    def __init__(self, message: str, index: tuple[int, ...] | None = None):
        super().__init__(message)
        self.index = index


class GammaPoleUnhandled(MHFError, ValueError):
    """A Gamma factor sits exactly on a pole with no epsilon regulator."""


class SchemaError(MHFError, ValueError):
    """Input document does not follow the documented schema."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class NormalizationError(SchemaError):
    """Input parsed but could not be brought into normal form."""


class PrecisionLoss(UserWarning):
    """Floating summation lost many digits to cancellation."""


class IllConditioned(UserWarning):
    """Finite-difference fit residual exceeds its tolerance."""
