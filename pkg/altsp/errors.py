"""
Exception hierarchy shared by the library and the CLI.

The CLI maps ``ConfigError`` to exit code 2 and every ``NumericalError`` to
exit code 3.
"""


class AltspError(Exception):
    """Base class for all errors raised by altsp."""


class ConfigError(AltspError):
    """A configuration document or command-line value is invalid."""


class DomainError(AltspError, ValueError):
    """A parameter lies outside its mathematical domain."""


class InputError(AltspError, ValueError):
    """Input data is malformed or insufficient."""


class NumericalError(AltspError):
    """A numerical routine failed or produced an unusable value."""


class SingularFisherError(NumericalError):
    def __init__(self, message: str, directions=None, condition: float = None):
        super().__init__(message)
        self.directions = list(directions or [])
        self.condition = condition


class DegenerateRiskError(NumericalError):
    """z_alpha equals z_(1-beta), so the acceptability constant is undefined."""


class InfeasibleDesignError(NumericalError):
    def __init__(self, message: str, best_residual: float = None):
        super().__init__(message)
        self.best_residual = best_residual


class AllocationError(NumericalError):
    pass


class FitConvergenceError(NumericalError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class ComparisonError(NumericalError):
    pass


class NegativeVarianceError(NumericalError):
    """A variance assembled from covariance pieces came out negative."""
