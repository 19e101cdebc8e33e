"""
Exception hierarchy for the operator inequality toolkit.
Every error raised on purpose by the package derives from OpJensenError.
"""
from typing import Optional


class OpJensenError(Exception):
    """Base class for all package errors"""
    pass


class ParserError(OpJensenError):
    """Raised when a function or policy specifier cannot be parsed"""

    def __init__(self, message: str, spec: str = "", position: Optional[int] = None):
        self.spec = spec
        self.position = position
        if position is not None:
            message = f"{message} (at position {position} in {spec!r})"
        super().__init__(message)


class DomainError(OpJensenError):
    """Raised when an eigenvalue falls outside the domain of f"""

    def __init__(self, message: str, value: Optional[float] = None):
        self.value = value
        super().__init__(message)


class SpectrumError(OpJensenError):
    """Non-positive, degenerate or uncontained spectrum"""
    pass


class EigenSolverError(OpJensenError):
    """Eigensolver failed to converge"""

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        super().__init__(message)


class NonNegativityError(OpJensenError):
    """A function required to be nonnegative took a negative value"""
    pass


class PreconditionError(OpJensenError):
    """An operation was called outside its stated preconditions"""
    pass


class BracketingError(OpJensenError):
    """Bisection was started on an interval without a sign change"""

    def __init__(self, message: str, lo_value: float, hi_value: float):
        self.lo_value = lo_value
        self.hi_value = hi_value
        super().__init__(f"{message}: g(lo)={lo_value:.6e}, g(hi)={hi_value:.6e}")


class ObjectiveError(OpJensenError):
    """F(u, v) could not be evaluated or is not monotone in u"""
    pass


class SubdivisionError(OpJensenError):
    """A piece of the subdivision has f'' of mixed sign"""
    pass


class ConverseError(OpJensenError):
    """Converse constants cannot be computed for this f"""
    pass


class ConfigError(OpJensenError):
    """Invalid campaign configuration"""
    pass
