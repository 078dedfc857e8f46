"""Exception hierarchy.

The CLI maps each category onto an exit status, so every raised error
should derive from one of the three categories below.
"""


class AptError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 2


class ConfigError(AptError, ValueError):
    """Invalid, missing or conflicting configuration values."""

    exit_code = 1

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(AptError, ArithmeticError):
    """A numerical procedure failed or produced an inconsistent result."""

    exit_code = 2


class DataError(AptError, ValueError):
    """Malformed or insufficient input data."""

    exit_code = 3

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UncalibratedError(ConfigError):
    """The coupling constant g is neither given nor derivable."""
