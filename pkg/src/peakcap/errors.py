"""Exception hierarchy shared by all peakcap modules."""


class PeakcapError(Exception):
    """Base class for every error raised by peakcap."""


class DomainError(PeakcapError, ValueError):
    """An argument lies outside the domain of the operation."""


class QuadratureOrderError(DomainError):
    """Requested quadrature order is outside the supported range."""


class EvaluationError(PeakcapError, ArithmeticError):
    """An integrand produced a non-finite value at a quadrature node."""


class InvalidDistributionError(PeakcapError, ValueError):
    """A candidate input distribution violates its invariants."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class RegimeError(PeakcapError):
    """The solver was asked to work outside the regime it can justify."""


class ConvergenceError(PeakcapError):
    """An iterative method stopped before meeting its tolerance.

    ``best`` carries the best iterate available when iteration stopped.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class EndpointError(DomainError):
    """Derivative requested at an end of the arc, where dx2/dx1 diverges."""
