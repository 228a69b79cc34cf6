"""Exception hierarchy shared by every module."""

from __future__ import annotations


class LockSpringError(Exception):
    """Base class for all toolkit errors."""

    kind = "error"


class ValidationError(LockSpringError, ValueError):
    """An input violates a documented invariant.

    ``field`` names the offending attribute so callers (and the CLI) can
    point at it.
    """

    kind = "validation"

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class RangeError(LockSpringError, ValueError):
    """A deflection or command left the mechanism's physical range."""

    kind = "range"


class CableFailureError(LockSpringError):
    """Cable tension exceeds the breaking strength."""

    kind = "cable_failure"


class UndefinedEfficiencyError(LockSpringError):
    """No stored energy in a trace, so efficiency has no meaning."""

    kind = "undefined_efficiency"


class InfeasibleDesignError(LockSpringError):
    """The design search found no candidate satisfying the constraints."""

    kind = "infeasible"

    def __init__(self, message: str, violation_counts: dict[str, int]):
        self.violation_counts = dict(violation_counts)
        super().__init__(message)


class ConfigError(LockSpringError):
    """Config file problem, located by path and line."""

    kind = "config"

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(loc + message)


class TraceFormatError(LockSpringError):
    """Trace CSV problem, located by path and row (1-based file line)."""

    kind = "trace_format"

    def __init__(self, message: str, path: str | None = None, row: int | None = None):
        self.path = path
        self.row = row
        loc = ""
        if path is not None:
            loc = f"{path}:{row}: " if row is not None else f"{path}: "
        super().__init__(loc + message)
