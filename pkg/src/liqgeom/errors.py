"""Exception hierarchy.

Three families map onto CLI exit codes: validation (1), data (2) and
numerical (3) failures.
"""

from __future__ import annotations


class LiqgeomError(Exception):
    exit_code = 1


class ValidationError(LiqgeomError, ValueError):
    exit_code = 1


class DataError(LiqgeomError):
    exit_code = 2


class NumericalError(LiqgeomError):
    exit_code = 3


class ConfigError(ValidationError):
    def __init__(self, field, reason):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class DomainError(NumericalError, ValueError):
    pass


# spectral
class NonConvergence(NumericalError):
    pass


class Disconnected(NumericalError):
    pass


class DimensionMismatch(ValidationError):
    pass


class WindowTooShort(ValidationError):
    pass


# order-book geometry
class EmptySide(DataError):
    pass


class DegenerateProjection(DataError):
    pass


class CrossedBook(DataError):
    def __init__(self, timestamp, detail=""):
        msg = f"crossed book at timestamp {timestamp}"
        super().__init__(f"{msg}: {detail}" if detail else msg)
        self.timestamp = timestamp


class MixedSides(ValidationError):
    pass


class MixedK(ValidationError):
    pass


# fitting
class FitError(NumericalError):
    pass


class InsufficientData(FitError):
    pass


class AllStartsFailed(FitError):
    pass


class MismatchedData(ValidationError):
    pass


class SeriesTooShort(ValidationError):
    pass


class TooSparse(DataError):
    pass


# ingestion
class ParseError(DataError):
    def __init__(self, line, column, reason):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class BadHeader(DataError):
    pass


class UnsortedInput(DataError):
    pass


class EmptyInput(DataError):
    pass
