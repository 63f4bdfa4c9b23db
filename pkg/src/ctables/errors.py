class CTablesError(Exception):
    """Base class for all package errors."""


class InvalidMargins(CTablesError, ValueError):
    pass


class SumMismatch(InvalidMargins):
    pass


class EmptyMargin(InvalidMargins):
    pass


class DegenerateMargin(InvalidMargins):
    pass


class ZeroTotal(InvalidMargins):
    pass


class DomainError(CTablesError, ValueError):
    pass


class CriticalPoint(DomainError):
    pass


class ResourceLimit(CTablesError):
    pass


class ExactOverflowPolicy(CTablesError):
    pass


class NoConvergence(CTablesError):
    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InfeasibleBlock(CTablesError):
    pass
