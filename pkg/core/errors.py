"""
Torus LSI - Errors Module
Exception hierarchy shared by the algebra, spectral and verification layers.
"""


class TorusLSIError(Exception):
    """Base class for every error raised by the library."""


class IncompatibleElementsError(TorusLSIError, ValueError):
    """Binary operation on elements carrying different theta values."""


class NormalizationError(TorusLSIError, ValueError):
    """An operation needs trace(a) = 1 and did not get it."""


class PreconditionError(TorusLSIError, ValueError):
    """Arguments outside the domain of an operation (aliasing q, gcd, slope...)."""


class NotSelfAdjointError(PreconditionError):
    """A self-adjointness precondition failed."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class PositivityError(TorusLSIError, ArithmeticError):
    """Spectrum (or sampled symbol) not strictly positive."""

    def __init__(self, message: str, margin: float):
        super().__init__(f"{message} (margin {margin:.3e})")
        self.margin = margin


class DivergenceError(TorusLSIError, ArithmeticError):
    """Power series evaluated outside its disc of convergence."""


class NumericalError(TorusLSIError, RuntimeError):
    """Eigensolver failure or a residual above tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class EnumerationCapError(TorusLSIError, ValueError):
    """A combinatorial enumeration would exceed its configured cap."""

    def __init__(self, what: str, requested: int, cap: int):
        super().__init__(f"{what}: requested {requested}, cap is {cap}")
        self.requested = requested
        self.cap = cap


class ElementFormatError(TorusLSIError, ValueError):
    """Malformed element file."""
