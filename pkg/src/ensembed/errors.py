"""Exception types shared across the package."""


class EnsembedError(Exception):
    """Base class for all package errors."""


class ValidationError(EnsembedError):
    """Bad user input (configs, CSV schemas, parameter ranges)."""


class OutOfHistory(EnsembedError):
    """A delay coordinate reaches before the first recorded sample."""


class LengthMismatch(EnsembedError):
    """Two embedding codes of different bit lengths were compared."""


class SeriesTooShort(EnsembedError):
    """The series is shorter than the filter support."""


class InsufficientHistory(EnsembedError):
    """Not enough observed target values to restore a filtered forecast."""


class EmptyLibrary(EnsembedError):
    """No neighbor candidates remain after exclusions."""


class MissingFuture(EnsembedError):
    """A neighbor has no stored future value for the requested horizon."""


class NoValidSamples(EnsembedError):
    """A fitness split contains no time index with a scorable forecast."""


class InsufficientVariables(EnsembedError):
    """Fewer variables than the requested nondelay embedding dimension."""


class NonFiniteState(EnsembedError):
    """A generator trajectory left the finite range (blow-up)."""


class ParseError(ValidationError):
    """A CSV cell could not be parsed; carries 1-based row/column."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class MissingColumn(ValidationError):
    """A referenced column name is absent from the CSV header."""


class EmptyGrid(EnsembedError):
    """No common in-sample (t, p) grid across ensemble members."""


class PoolUnderfullWarning(UserWarning):
    """Diversity pruning exhausted candidates before the pool filled."""
