"""Exception hierarchy.

``InputError`` covers bad data (CLI exit 1); ``PreconditionError`` covers
data that is valid but violates what a particular statistic needs (exit 2).
"""


class GerberError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GerberError, ValueError):
    """Invalid or unusable input data."""


class EmptyFileError(InputError):
    pass


class InvalidCellError(InputError):
    """A cell that is not a finite real number."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class RaggedRowsError(InputError):
    pass


class DuplicateLabelError(InputError):
    pass


class TooFewPeriodsError(InputError):
    pass


class ZeroVarianceError(InputError):
    """One or more return columns are constant."""

    def __init__(self, message, labels=()):
        super().__init__(message)
        self.labels = tuple(labels)


class DimensionError(GerberError, ValueError):
    pass


class PreconditionError(GerberError, ValueError):
    """A statistic's denominator would vanish for the given data."""

    def __init__(self, message, labels=(), pairs=()):
        super().__init__(message)
        self.labels = tuple(labels)
        self.pairs = tuple(pairs)


class AsymmetricMatrixError(GerberError, ValueError):
    pass
