"""Exception types shared across the package."""


class NumericFailure(ArithmeticError):
    """A computation produced non-finite values or failed to converge.

    ``estimate`` carries the best value available when the failure was
    detected (``None`` if there is nothing meaningful to report).
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class InsufficientDataError(ValueError):
    """Too few usable samples for a statistical estimate."""


class LibSVMParseError(ValueError):
    """Malformed LIBSVM input; ``lineno`` is 1-based."""

    def __init__(self, message, lineno):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ConfigError(ValueError):
    """Malformed configuration file or stored trace."""
