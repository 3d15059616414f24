"""Exception hierarchy shared by every stage of the census pipeline."""


class CensusError(Exception):
    """Base class for all errors raised by :mod:`crcensus`."""


class DomainError(CensusError, ValueError):
    """An argument lies outside the admissible domain (e.g. beta outside [2, 4))."""


class PoleError(CensusError, ValueError):
    """The Cayley transform was evaluated at the excluded point (0, -1)."""


class SingularityError(CensusError, ValueError):
    """A kernel was evaluated at coincident points."""


class NumericalInconsistency(CensusError, ArithmeticError):
    """A quantity that must be constant varied beyond its tolerance."""


class ConvergenceError(CensusError, ArithmeticError):
    """Adaptive quadrature did not reach its tolerance.

    The best available estimate is kept on the exception.
    """

    def __init__(self, message, value=float("nan"), abs_error=float("inf")):
        super().__init__(message)
        self.value = value
        self.abs_error = abs_error


class DegenerateProfile(CensusError, ValueError):
    """The flatness sum b1 + b2 + kappa' b0 vanishes numerically."""


class MarginalCase(CensusError, ArithmeticError):
    """Least eigenvalue within the positive-definiteness margin of zero."""

    def __init__(self, message, rho=float("nan")):
        super().__init__(message)
        self.rho = rho


class ConditionCViolation(CensusError):
    """An interaction matrix is (numerically) degenerate, so condition (C) fails."""

    def __init__(self, message, subset=(), rho=float("nan")):
        super().__init__(message)
        self.subset = tuple(subset)
        self.rho = rho


class InternalInconsistency(CensusError, AssertionError):
    """A consistency identity that must hold by construction was violated."""


class RegimeError(CensusError, ValueError):
    """A bubble ensemble left the regime where the reduced expansion is valid."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class ConfigError(CensusError, ValueError):
    """Invalid census configuration; ``violations`` lists every problem found."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)
