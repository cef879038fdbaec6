"""Exception hierarchy shared by every module of the package."""


class XiError(Exception):
    """Base class for all package errors."""


class ParameterError(XiError, ValueError):
    """Invalid parameters for a series, a combinatorial sum or a precondition."""


class DomainError(XiError, ValueError):
    """Argument outside the domain where the function is defined."""


class SingularityError(DomainError):
    """Evaluation requested exactly on a kernel singularity (r == rho)."""


class CalibrationError(XiError):
    """Per-sample ratios disagree: the discrepancy is not one global constant."""


class ConvergenceError(XiError, ArithmeticError):
    """A vectorised evaluation could not reach the requested tolerance."""


class ValidationError(XiError, ValueError):
    """Invalid operator input (field positivity, mesh size, file contents)."""


class SymmetryError(XiError, ArithmeticError):
    """Weighted symmetrisation residual above the accepted tolerance."""
