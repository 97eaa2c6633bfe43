"""Numerics on the truncated Bargmann-Fock space.

Modules
-------
fock_core : basis, falling factorials, monomial operators and banded matrices
xform     : Gauss-Hermite quadrature, the Bargmann transform and its relatives
tridiag   : tridiagonal inverses, Sturm bisection, Jacobi-matrix tools
spectra   : operator presets, complex eigensolver, domination certificates
trace     : regularized first-order and contour trace sums
evolve    : linear Cauchy problems on coefficient space
cli       : command-line front end
"""

from .errors import (ContourCollisionError, ConvergenceError, NumericalError, SingularMatrixError,
                     ValidationError)
from .fock_core import (BandedMatrix, CoeffVec, HamiltonianSpec, MonomialTerm, apply_op, basis_eval,
                        build_matrix, falling_factorial, inner, monomial_entry)

__version__ = "0.1.0"

__all__ = [
    "BandedMatrix", "CoeffVec", "ContourCollisionError", "ConvergenceError", "HamiltonianSpec",
    "MonomialTerm", "NumericalError", "SingularMatrixError", "ValidationError", "apply_op",
    "basis_eval", "build_matrix", "falling_factorial", "inner", "monomial_entry",
]
