"""Exception types raised across the package."""


class MMAPError(Exception):
    """Base class for all package errors."""


class InvalidGridError(MMAPError, ValueError):
    pass


class DegenerateFieldError(MMAPError, ValueError):
    pass


class AssemblyError(MMAPError, ValueError):
    pass


class SingularDiagonalError(MMAPError, ZeroDivisionError):
    pass


class SingularFactorizationError(MMAPError, ArithmeticError):
    """A pivot vanished (relative to the matrix scale) during factorization."""


class NotSPDError(SingularFactorizationError):
    """Cholesky met a non-positive pivot."""


class UnsupportedVariantError(MMAPError, ValueError):
    pass


class DenseSizeError(MMAPError, ValueError):
    """Refused to build a dense object beyond the configured size guard."""


class DiagnosticUnavailableError(MMAPError, RuntimeError):
    pass
