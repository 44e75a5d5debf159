"""Exception hierarchy shared by every module."""


class ConvexCyclicError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(ConvexCyclicError, ValueError):
    pass


class DimensionMismatch(InvalidArgument):
    pass


class InvalidSpec(InvalidArgument):
    pass


class NumericalError(ConvexCyclicError, ArithmeticError):
    """Failures caused by floating point limits rather than bad input."""


class NumericalOverflow(NumericalError):
    def __init__(self, message, last_safe_n=None):
        super().__init__(message)
        self.last_safe_n = last_safe_n


class EigensolverFailure(NumericalError):
    pass


class NegativeCoefficient(InvalidArgument):
    pass


class SumNotOne(InvalidArgument):
    pass


class DegreeTooLarge(InvalidArgument):
    pass


class TooManyPoints(InvalidArgument):
    pass


class ZeroFunctional(InvalidArgument):
    pass


class EmptySpectrum(InvalidArgument):
    pass


class ZeroCoordinateAtPair(InvalidArgument):
    pass


class InvalidScale(InvalidArgument):
    pass


class NotOutsideDisk(InvalidArgument):
    pass


class NoExponentFound(NumericalError):
    pass


class OracleMiss(ConvexCyclicError):
    """The epsilon oracle found no exponent within the contraction bound.

    ``partial`` holds the exponents and residual norms gathered before the
    miss so callers can inspect how far the construction got.
    """

    def __init__(self, step, best_ratio, partial=None):
        super().__init__(
            f"no orbit point within epsilon of the residual at step {step} "
            f"(best ratio {best_ratio:.6g})"
        )
        self.step = step
        self.best_ratio = best_ratio
        self.partial = partial or {}


class ConfigError(ConvexCyclicError, ValueError):
    """Experiment configuration problem; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
