"""Exception hierarchy shared by all swent modules."""


class SwentError(Exception):
    """Base class for library errors."""


class DimensionError(SwentError, ValueError):
    """Array shapes or block partitions do not fit together."""


class ValidationError(SwentError, ValueError):
    """An input violates a documented precondition."""


class HorizonError(SwentError, ValueError):
    """A query reaches past the horizon a signal was generated for."""


class RefusalError(SwentError):
    """A bound cannot be evaluated because its hypotheses fail.

    Raised, for instance, when a mode constant is infinite for a persistent
    mode, or when the limit box is requested for a system that is not
    uniformly ultimately bounded.
    """


class DivergenceError(SwentError, ArithmeticError):
    """Numerical solution left the admissible region."""

    def __init__(self, message, time=None, partial=None):
        super().__init__(message)
        self.time = time
        self.partial = partial


class ResolutionError(SwentError, ValueError):
    """A sampling grid is too coarse for the requested radius."""
