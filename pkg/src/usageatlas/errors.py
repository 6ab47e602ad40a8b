"""Exception types shared across the toolkit.

Exit-code mapping for the CLI: ValidationError (and subclasses) -> 1,
DependencyError -> 2, anything else -> 3.
"""

from __future__ import annotations


class UsageAtlasError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(UsageAtlasError):
    """Input violates a documented precondition or schema."""


class ParseError(ValidationError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NotFoundError(ValidationError):
    """A referenced site/cluster does not exist."""


class InvalidPairError(ValidationError):
    """Pairwise operation applied to an invalid pair (e.g. a site with itself)."""


class UndefinedMetricError(ValidationError):
    """Metric has no defined value for this input (e.g. distance of the full node set)."""


class DependencyError(UsageAtlasError):
    """A required upstream artifact is missing; names the expected file."""
