"""
Exceptions raised by krylovlab.

Every error derives from KrylovLabError and from the builtin it refines, so
callers may catch either.
"""
from typing import Optional


class KrylovLabError(Exception):
    """Base class for all krylovlab errors."""


class DegenerateSpectrum(KrylovLabError, ValueError):
    """Two eigenvalues of a spectrum coincide and could not be separated."""


class DimensionError(KrylovLabError, ValueError):
    """A vector does not match the dimension of the model."""


class UnknownSpectralIndex(KrylovLabError, IndexError):
    """A spectral index is not part of the model's index set."""


class SpectrumHit(KrylovLabError, ArithmeticError):
    """A resolvent was requested at (or too close to) an eigenvalue."""


class ZeroVector(KrylovLabError, ValueError):
    """A Krylov subspace was requested for the zero vector."""


class DatumNotInRange(KrylovLabError, ValueError):
    """The datum g has a kernel component, so Af = g has no solution."""


class NotSimpleSpectrum(KrylovLabError, ValueError):
    """The model violates the cyclicity preconditions."""


class ContourTouchesSpectrum(KrylovLabError, ValueError):
    """A contour passes through or too close to the spectrum."""


class InvalidContour(KrylovLabError, ValueError):
    """A contour is malformed (overlapping circles, bad radius, ...)."""


class InseparableSpectrum(KrylovLabError, ValueError):
    """A spectrum split has zero gap."""


class DegreeTooLarge(KrylovLabError, OverflowError):
    """Monomial moments of the requested degree would overflow."""


class ModelInvariantError(KrylovLabError, ArithmeticError):
    """A freshly built model fails one of its numerical invariants."""


class CrossCheckMismatch(KrylovLabError, ArithmeticError):
    """Two independent routes to the same quantity disagree."""


class ParseError(KrylovLabError, ValueError):
    """A suite file is not valid JSON."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")


class ValidationError(KrylovLabError, ValueError):
    """A suite file parses but violates the suite schema."""

    def __init__(self, message: str, field: str = ""):
        self.field = field
        prefix = f"{field}: " if field else ""
        super().__init__(f"{prefix}{message}")
