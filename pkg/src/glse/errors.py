"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid or unsupported combination of inputs."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """A fixed-point or root-finding loop failed to converge.

    Carries the last residuals so callers can diagnose or widen brackets.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals) if residuals else {}
