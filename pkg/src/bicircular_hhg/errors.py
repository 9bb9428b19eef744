"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A configuration or domain object failed its invariants."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class GridError(ValueError):
    """A time grid cannot support the requested computation."""


class NumericalError(ArithmeticError):
    """A non-finite value appeared inside a numerical kernel."""


class UndefinedStatisticError(ValueError):
    """A statistic was requested for a harmonic with zero intensity."""


class ChannelNotFoundError(LookupError):
    pass


class EnsembleError(RuntimeError):
    """A single-sample run inside an ensemble failed."""

    def __init__(self, message, node_index=None, alpha=None):
        super().__init__(message)
        self.node_index = node_index
        self.alpha = alpha

    def __reduce__(self):
        return type(self), (self.args[0], self.node_index, self.alpha)
