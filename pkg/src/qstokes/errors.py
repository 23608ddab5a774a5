"""Exception hierarchy.

Domain errors (bad inputs, excluded points) derive from ``ValueError``;
numerical failures (truncation or quadrature that did not settle) derive
from ``ArithmeticError``.  The CLI maps the first family to exit code 2.
"""


class QStokesError(Exception):
    pass


class DomainError(QStokesError, ValueError):
    """Input outside the domain of the requested function."""


class DivergentSeriesError(DomainError):
    pass


class ConvergenceRadiusError(DomainError):
    pass


class PoleError(DomainError):
    pass


class SpiralPoleError(PoleError):
    """Evaluation point lies on an excluded q-spiral."""


class ZeroProximityError(DomainError):
    pass


class NonConvergence(QStokesError, ArithmeticError):
    pass


class TailError(NonConvergence):
    pass


class QuadratureError(NonConvergence):
    pass


class ConsistencyError(QStokesError, ArithmeticError):
    """Two independent evaluation routes disagree."""
