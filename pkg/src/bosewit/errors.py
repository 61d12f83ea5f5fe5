"""Exception types shared across the package."""


class BosewitError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BosewitError, ValueError):
    """Parameters outside the supported range (space size, truncation, caps)."""


class UsageError(BosewitError, ValueError):
    """Invalid call: mismatched spaces, non-Hermitian input, wrong sector."""


class NumericalValidationError(BosewitError, ArithmeticError):
    """A density operator failed its Hermiticity, trace or positivity check."""
