"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code (see ``eventimpact.cli``).
"""


class EventImpactError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(EventImpactError, ValueError):
    exit_code = 2


class FormatError(ValidationError):
    """Malformed input file (CSV, JSONL, config)."""


class RangeError(EventImpactError, IndexError):
    """A requested date range is not covered by a series."""

    exit_code = 3

    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = missing


class DataAvailabilityError(RangeError):
    """A window (including its fallback) cannot be assembled from the data."""


class InsufficientDataError(EventImpactError):
    exit_code = 3


class NumericError(EventImpactError, ArithmeticError):
    exit_code = 4


class FitError(NumericError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
