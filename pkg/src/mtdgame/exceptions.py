"""Exception hierarchy shared by the solver, simulator and harness."""


class MTDError(Exception):
    """Base class for all package errors."""


class ValidationError(MTDError, ValueError):
    """Input violates a structural requirement (shape, stochasticity, bounds)."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class GridLookupError(MTDError, KeyError):
    """A defense period is not on the precomputed overlap grid."""

    def __str__(self):
        return str(self.args[0]) if self.args else "grid lookup failed"


class DomainError(MTDError, ValueError):
    """Numerical domain violation, e.g. a non-positive expected overlap."""


class PreconditionError(MTDError, ValueError):
    """A solver hypothesis (such as alpha <= 1/(n*rho)) does not hold."""


class NonConvergence(MTDError, RuntimeError):
    """Value iteration hit its iteration cap before the span test passed."""

    def __init__(self, message, span=None, iterations=None):
        super().__init__(message)
        self.span = span
        self.iterations = iterations
