"""Exception hierarchy shared by all modules."""


class AwgnTypesError(Exception):
    pass


class DomainError(AwgnTypesError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class NumericalError(AwgnTypesError, ArithmeticError):
    """A computed quantity failed its own self-consistency check."""


class QuadratureError(NumericalError):
    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class BracketError(NumericalError):
    pass


class InfeasibleError(AwgnTypesError):
    """The feasible set of an optimization is empty."""


class CeilingError(AwgnTypesError):
    """An enumeration or simulation would exceed its configured size ceiling."""


class HypothesisViolation(AwgnTypesError, ValueError):
    """Parameters fall outside the region where a construction is valid."""


class ConstraintViolation(AwgnTypesError, ValueError):
    pass
