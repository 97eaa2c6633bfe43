"""Exception types shared across modules.

The CLI maps ``ValidationError`` to exit status 2 and ``NumericalError``
(and subclasses) to exit status 3.
"""


class ValidationError(ValueError):
    """Bad input: wrong dimensions, out-of-range parameters, malformed specs."""


class NumericalError(RuntimeError):
    """A computation could not deliver a trustworthy result."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap."""


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is singular to working precision."""


class ContourCollisionError(NumericalError):
    """A contour passes through (or too close to) a reference eigenvalue."""
