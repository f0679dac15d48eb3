"""Exception hierarchy for the format-description engine.

Every error raised on purpose by this package derives from FmtGleanError,
so callers (and the CLI exit-code mapping) can distinguish engine errors
from genuine bugs.  The subclasses mirror the pipeline stages: schema
handling, data parsing, gleaning, and registry handling.
"""

from __future__ import annotations


class FmtGleanError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(FmtGleanError):
    """The format description itself is unusable.

    Raised for malformed schema XML, unsupported schema constructs,
    duplicate or unresolved type names, invalid annotation values,
    pattern dialect violations, and unbounded recursion.
    """

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message)
        self.line = line
        self.column = column


class PatternError(SchemaError):
    """A delimiter pattern is outside the supported regex dialect."""


class ExprError(SchemaError):
    """An annotation expression does not parse."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ParseError(FmtGleanError):
    """The input bytes do not match the format description.

    ``offset`` is the absolute input offset where parsing failed, when
    known.
    """

    def __init__(self, message: str, *, offset: int | None = None):
        if offset is not None:
            message = f"{message} at byte {offset}"
        super().__init__(message)
        self.offset = offset


class WindowOverrunError(ParseError):
    """A scan or rollback needed more bytes than the backtrack window holds."""


class EvalError(ParseError):
    """An expression could not be evaluated (unresolved reference, division by zero)."""


class EmitError(FmtGleanError):
    """The event stream cannot form a well-formed document."""


class GleanError(FmtGleanError):
    """A transform could not be loaded or applied."""


class UnsupportedXsltError(GleanError):
    """The stylesheet uses a construct outside the supported subset."""


class RegistryError(FmtGleanError):
    """The format registry is malformed, or no rule matches an input."""
