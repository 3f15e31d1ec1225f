"""Exception types raised by the library."""


class ExpSamplingError(Exception):
    """Base class for all library errors."""


class UnsupportedOrderError(ExpSamplingError, ValueError):
    pass


class NumericDomainError(ExpSamplingError, ArithmeticError):
    """A function evaluation produced a non-finite value or left its domain."""


class ToleranceNotMetError(ExpSamplingError, RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget."""


class InvalidGridError(ExpSamplingError, ValueError):
    pass


class MissingDerivativeError(ExpSamplingError, LookupError):
    """An analytic Mellin derivative was required but not registered."""


class ConditionViolationError(ExpSamplingError, ValueError):
    """A kernel does not satisfy a requested moment/summability condition."""


class InsufficientDataError(ExpSamplingError, ValueError):
    pass


class AtNumericFloorError(ExpSamplingError, ValueError):
    """All errors sit at round-off level, so no rate can be fitted."""


class BoundViolatedError(ExpSamplingError, AssertionError):
    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = rows or []


class ConfigError(ExpSamplingError, ValueError):
    pass
