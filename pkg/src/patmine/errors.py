"""Exception hierarchy shared across the toolchain."""

from __future__ import annotations


class PatmineError(Exception):
    """Base class for all toolchain errors."""


class CsvParseError(PatmineError):
    """A CSV source is malformed. Carries the physical line number (header = line 1)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(PatmineError):
    """Loaded data violates a knowledge-base invariant."""


class ContractViolation(PatmineError):
    """A caller or backend broke an interface contract (empty text, dimension mismatch, ...)."""


class TransportError(PatmineError):
    """A backend or remote endpoint could not be reached or misbehaved."""


class RateLimitError(TransportError):
    """The hosting API rate limit was exhausted after retries."""


class CredentialError(TransportError):
    """The hosting API rejected the supplied credentials."""


class ConversionError(PatmineError):
    """A notebook could not be converted. Carries the offending path."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class ScriptParseError(PatmineError):
    """A converted script could not be parsed into a syntax tree."""


class AggregationError(PatmineError):
    """A match row could not be aggregated (for example, an unknown concept)."""


class PreconditionError(PatmineError):
    """A pipeline stage was requested without its prerequisite artifacts."""


class ConfigError(PatmineError):
    """The pipeline configuration is missing, malformed, or carries unknown keys."""
