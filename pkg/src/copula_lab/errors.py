"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation (boundary or out of range)."""


class ParameterError(ValueError):
    """A distribution or copula parameter violates its family's constraints."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed; ``trace`` holds the iterates visited."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class SingularInformationError(ArithmeticError):
    """Information matrix is singular or too badly conditioned to invert."""

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class SamplingError(RuntimeError):
    """Importance weights are all zero or non-finite."""


class FitError(RuntimeError):
    """Optimizer failed; ``best`` carries the best iterate found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
