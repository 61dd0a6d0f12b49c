"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class BreakageError(Exception):
    """Base class for every error raised by the package."""


class RangeError(BreakageError, ValueError):
    """An index or range argument is outside the admissible domain."""


class DomainError(BreakageError, ValueError):
    """A scalar argument lies outside the domain of a function."""


class ModeError(BreakageError, ValueError):
    """Exact rational evaluation was requested for an irrational rule."""


class ValidationError(BreakageError):
    """A kinetic object failed certification."""

    def __init__(self, message: str, report=None) -> None:
        super().__init__(message)
        self.report = report


class PreconditionError(BreakageError):
    """An operation was called on inputs violating its preconditions."""


class ConfigError(BreakageError):
    """A scenario file or command-line specification could not be parsed."""


class IntegrationError(BreakageError):
    """Time stepping failed.  ``time`` holds the start of the failing step."""

    def __init__(self, message: str, time: float | None = None) -> None:
        super().__init__(message)
        self.time = time


class ConvergenceError(IntegrationError):
    """Newton iteration did not reach the requested residual."""

    def __init__(self, message: str, residual: float, time: float | None = None) -> None:
        super().__init__(message, time)
        self.residual = residual


class SolverError(IntegrationError):
    """The Newton linear system was singular."""


class NegativityError(IntegrationError):
    """A step produced a component below the admissible round-off floor."""
