"""
Exception hierarchy shared by every layer of the suite.

Each class carries the process exit code the CLI reports for it. Classes
with extra fields define __reduce__ so they survive the trip back from a
worker process intact.
"""


class SimulationError(Exception):
    exit_code = 3


class ConfigError(SimulationError):
    """Bad configuration or CLI usage. Carries the offending line when known."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        self.message = message
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

    def __reduce__(self):
        return type(self), (self.message, self.line)


class NumericFailure(SimulationError, ArithmeticError):
    """Quadrature or root finding did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        self.message = message
        self.achieved = achieved
        if achieved is not None:
            message = f"{message} (achieved error estimate {achieved:.3e})"
        super().__init__(message)

    def __reduce__(self):
        return type(self), (self.message, self.achieved)


class DomainError(SimulationError, ValueError):
    pass


class CalibrationError(SimulationError):
    pass


class SamplerError(SimulationError):
    def __init__(self, message: str, beta: float | None = None, scheme: str | None = None):
        self.beta = beta
        self.scheme = scheme
        super().__init__(message)

    def __reduce__(self):
        return type(self), (self.args[0], self.beta, self.scheme)


class RunFailure(SimulationError):
    def __init__(self, message: str, replication: int | None = None, seed: int | None = None):
        self.replication = replication
        self.seed = seed
        super().__init__(message)

    def __reduce__(self):
        return type(self), (self.args[0], self.replication, self.seed)


class NotLightTailedError(SimulationError):
    pass


class UnsupportedInstanceError(SimulationError):
    pass


class ValidationFailure(SimulationError):
    exit_code = 4


class UnstableSamplerWarning(RuntimeWarning):
    """Partial sums of the second-moment series keep growing."""
