"""Exception types raised across the package."""

from __future__ import annotations


class SkewEigError(Exception):
    """Base class for all errors raised by this package."""


class NotSkewSymmetric(SkewEigError):
    """The input matrix is not exactly skew-symmetric."""


class NonSquare(SkewEigError):
    """A square matrix was required."""


class DimensionMismatch(SkewEigError):
    """Operand shapes are incompatible."""


class ParseError(SkewEigError):
    """A Matrix Market file could not be parsed.

    Carries the 1-based line number of the offending line in ``lineno``.
    """

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class UnsupportedField(SkewEigError):
    """The Matrix Market field (complex, pattern, ...) is not supported."""


class ZeroStartVector(SkewEigError):
    """The starting vector has zero (or numerically zero) norm."""


class Breakdown(SkewEigError):
    """The bidiagonalization produced a numerically zero coefficient.

    ``which`` is ``"beta"`` or ``"gamma"``; ``step`` is the 1-based step
    index at which the coefficient vanished.  A gamma breakdown means the
    computed triplets are exact (an invariant subspace has been captured).
    """

    def __init__(self, which: str, step: int, value: float):
        super().__init__(f"{which}_{step} = {value:.3e} is numerically zero")
        self.which = which
        self.step = step
        self.value = value


class VectorAnnihilated(SkewEigError):
    """Reorthogonalization reduced a vector to numerical noise."""


class DegenerateRestart(SkewEigError):
    """The restart vector vanished; the caller must reseed."""


class NoConvergence(SkewEigError):
    """An iteration exceeded its sweep or restart budget."""


class InvalidOptions(SkewEigError):
    """Solver options violate their invariants."""


class MatrixAllZero(SkewEigError):
    """The matrix has no nonzero entries."""
