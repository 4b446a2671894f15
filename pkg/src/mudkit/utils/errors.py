"""Exception hierarchy shared by the library and the CLI."""
from typing import Optional


class MudkitError(Exception):
    """Base class for every error raised by mudkit."""


class DomainError(MudkitError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConvergenceError(MudkitError, ArithmeticError):
    """A series, continued fraction or quadrature did not reach its tolerance."""

    def __init__(self, message: str, where: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.where = where

    def at(self, where: str) -> "ConvergenceError":
        """Return a copy tagged with the location (e.g. a sweep grid point)."""
        return ConvergenceError(self.message, where=where)

    def __str__(self) -> str:
        if self.where:
            return f"{self.message} (at {self.where})"
        return self.message


class ScenarioError(MudkitError, ValueError):
    """Invalid distribution, scenario or sweep description.

    ``field`` is the dotted path of the offending entry, e.g. ``count.success``.
    """

    def __init__(self, field: str, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.field = field
        self.message = message
        self.line = line

    def under(self, prefix: str) -> "ScenarioError":
        """Return a copy whose field path is nested under ``prefix``."""
        return ScenarioError(f"{prefix}.{self.field}", self.message, self.line)

    def __str__(self) -> str:
        location = f"line {self.line}: " if self.line is not None else ""
        return f"{location}{self.field}: {self.message}"
