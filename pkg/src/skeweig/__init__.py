"""Conjugate eigenpairs of large sparse real skew-symmetric matrices.

The eigenvalues of a real skew-symmetric matrix come in conjugate purely
imaginary pairs ``+/- i*sigma``.  This package computes the ``k`` pairs
of largest magnitude entirely in real arithmetic, by an implicitly
restarted Lanczos bidiagonalization specialised to the skew-symmetric
structure, with two-sided partial reorthogonalization.

Entry points: :func:`solve` with a :class:`SkewSparseMatrix`, the
scikit-learn style :class:`SkewEigenSolver`, or the ``skeweig`` command
line tool.
"""

from .errors import (
    Breakdown,
    DegenerateRestart,
    DimensionMismatch,
    InvalidOptions,
    MatrixAllZero,
    NonSquare,
    NoConvergence,
    NotSkewSymmetric,
    ParseError,
    SkewEigError,
    UnsupportedField,
    VectorAnnihilated,
    ZeroStartVector,
)
from .estimator import SkewEigenSolver
from .mmio import read_matrix_market, read_matrix_market_general, write_matrix_market
from .solver import (
    ConjugateEigenpair,
    CycleRecord,
    RitzTriplet,
    SolveResult,
    SolverOptions,
    recover_eigenpairs,
    solve,
)
from .sparse import SkewSparseMatrix, block_embed, skew_symmetrize

__version__ = "0.1.0"

__all__ = [
    "Breakdown",
    "ConjugateEigenpair",
    "CycleRecord",
    "DegenerateRestart",
    "DimensionMismatch",
    "InvalidOptions",
    "MatrixAllZero",
    "NoConvergence",
    "NonSquare",
    "NotSkewSymmetric",
    "ParseError",
    "RitzTriplet",
    "SkewEigError",
    "SkewEigenSolver",
    "SkewSparseMatrix",
    "SolveResult",
    "SolverOptions",
    "UnsupportedField",
    "VectorAnnihilated",
    "ZeroStartVector",
    "block_embed",
    "read_matrix_market",
    "read_matrix_market_general",
    "recover_eigenpairs",
    "skew_symmetrize",
    "solve",
    "write_matrix_market",
    "__version__",
]
