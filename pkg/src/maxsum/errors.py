"""Exception hierarchy shared by every module."""


class MaxSumError(Exception):
    """Base class for all package errors."""


class DomainError(MaxSumError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(MaxSumError, ArithmeticError):
    """A computation could not reach its accuracy contract."""


class IterationCapError(NumericalError):
    """An iterative scheme hit its hard iteration cap."""


class MassDefectError(NumericalError):
    """Grid truncation lost more probability mass than allowed."""


class UnderflowError(NumericalError):
    """A quantity needed by a probe underflowed double precision."""
