class CqpsError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(CqpsError, ValueError):
    """Input violates a documented precondition."""


class ConvergenceError(CqpsError, RuntimeError):
    """An iterative or truncated computation did not converge.

    ``details`` carries whatever diagnostic the raiser had at hand (iteration
    counts, the two energy lists of a basis-doubling check, ...).
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class OptimizationError(CqpsError, RuntimeError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class IdentifiabilityError(ValidationError):
    """Data cannot constrain the requested parameters."""
