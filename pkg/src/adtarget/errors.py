"""Exception types shared across the package."""

from __future__ import annotations


class AdTargetError(Exception):
    """Base class for all package errors."""


class DomainError(AdTargetError, ValueError):
    """A value lies outside its admissible range."""


class SchemaError(AdTargetError, ValueError):
    """Input is syntactically valid but misses required structure."""


class ParseError(AdTargetError, ValueError):
    """Input cannot be parsed; carries the location when known."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class OracleLimitError(AdTargetError, ValueError):
    """Enumeration would exceed the oracle's size limit."""
