"""Exception hierarchy shared across the package."""


class CopregError(Exception):
    """Base class for all copreg errors."""


class ParameterError(CopregError):
    """Copula or marginal parameters outside their admissible domain."""


class DomainError(CopregError):
    """Function argument outside its domain (e.g. pseudo-observation on the boundary)."""


class ConditioningError(CopregError):
    """Correlation matrix too close to singular for a reliable gradient."""


class InsufficientDataError(CopregError):
    """Too few observations for the requested estimator."""


class DegenerateDataError(CopregError):
    """Data degenerate for the task (zero scale, single response class, ...)."""


class SingularDesignError(CopregError):
    """Rank-deficient design matrix in a least-squares fit."""


class ConvergenceError(CopregError):
    """Optimizer exhausted its iteration budget far from stationarity.

    Carries the last iterate so callers can inspect or resume.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class WeightUnderflowError(CopregError):
    """All Monte-Carlo weights underflowed to zero for one observation."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DivergenceError(CopregError):
    """Non-finite gradient encountered during a fitting loop."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NumericError(CopregError):
    """Numerical evaluation produced a non-finite result."""
