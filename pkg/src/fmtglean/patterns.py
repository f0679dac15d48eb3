"""Delimiter patterns and the restricted regex dialect.

Separator / terminator / ignore annotations carry either a literal string
or a regular expression.  The regex dialect is deliberately frozen to the
linear-time subset:

    alternation        a|b
    grouping           ( ... )        plain groups only
    character classes  [abc] [^abc] [a-z]
    repetition         * + ? {m} {m,} {m,n}      greedy only
    dot                .
    escapes            \\r \\n \\t \\s and \\<punctuation>

Backreferences, lookaround, anchors (^ $), lazy/possessive quantifiers and
inline flags are rejected up front with a diagnostic naming the construct.
Patterns are matched against raw bytes, so sources must be ASCII.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .errors import PatternError

# Characters that mark a source as a regular expression rather than a
# literal string when the annotation does not say which it is.
_METACHARS = set("\\|[](){}*+?.^$")

# Escape letters with their usual regex meaning; everything else
# alphanumeric after a backslash is rejected.
_ESCAPE_LETTERS = set("rnts")


@dataclass(frozen=True)
class Pattern:
    """A delimiter pattern: ``kind`` is "regexp" or "string"."""

    kind: str
    source: str

    def __post_init__(self):
        if self.kind not in ("regexp", "string"):
            raise PatternError(f"unknown pattern kind: {self.kind!r}")


def classify_source(source: str) -> str:
    """Guess the kind of a pattern whose annotation did not pin one down.

    Any regex metacharacter in the source means "regexp", else "string".
    """
    return "regexp" if any(c in _METACHARS for c in source) else "string"


def make_pattern(source: str, kind: str | None = None) -> Pattern:
    """Build a Pattern, classifying the source when kind is None or the
    draft's undecided "regexp or string"."""
    if kind is None or kind == "regexp or string":
        kind = classify_source(source)
    return Pattern(kind, source)


def validate_regexp(source: str) -> None:
    """Reject sources outside the frozen dialect.

    Raises PatternError naming the offending construct and its position.
    Acceptance here still leaves final syntax checking to re.compile.
    """
    if source == "":
        raise PatternError("empty pattern")
    try:
        source.encode("ascii")
    except UnicodeEncodeError as exc:
        raise PatternError(f"pattern is not ASCII at position {exc.start}") from None

    i = 0
    n = len(source)
    in_class = False
    prev_quant = False
    while i < n:
        c = source[i]
        if in_class:
            if c == "\\":
                if i + 1 >= n:
                    raise PatternError(f"dangling backslash at position {i}")
                nxt = source[i + 1]
                if nxt.isalnum() and nxt not in _ESCAPE_LETTERS:
                    raise PatternError(f"unsupported escape \\{nxt} at position {i}")
                i += 2
                continue
            if c == "]":
                in_class = False
            i += 1
            continue
        if c == "\\":
            if i + 1 >= n:
                raise PatternError(f"dangling backslash at position {i}")
            nxt = source[i + 1]
            if nxt.isalnum() and nxt not in _ESCAPE_LETTERS:
                raise PatternError(f"unsupported escape \\{nxt} at position {i}")
            prev_quant = False
            i += 2
            continue
        if c == "[":
            in_class = True
            prev_quant = False
            i += 1
            # a leading ^ inside a class is negation, not an anchor
            if i < n and source[i] == "^":
                i += 1
            # a literal ] is allowed first in a class
            if i < n and source[i] == "]":
                i += 1
            continue
        if c == "^" or c == "$":
            raise PatternError(f"unsupported anchor {c} at position {i}")
        if c == "(":
            if i + 1 < n and source[i + 1] == "?":
                raise PatternError(f"unsupported group extension (? at position {i}")
            prev_quant = False
            i += 1
            continue
        if c in "*+?":
            if prev_quant:
                raise PatternError(f"unsupported lazy or stacked quantifier at position {i}")
            prev_quant = True
            i += 1
            continue
        if c == "{":
            end = _braced_quantifier_end(source, i)
            if end is not None:
                if prev_quant:
                    raise PatternError(f"unsupported lazy or stacked quantifier at position {i}")
                prev_quant = True
                i = end
                continue
            # not quantifier syntax; re treats a lone { as a literal
            prev_quant = False
            i += 1
            continue
        prev_quant = False
        i += 1
    if in_class:
        raise PatternError("unterminated character class")


def _braced_quantifier_end(source: str, start: int) -> int | None:
    """Return the index just past a {m} {m,} {m,n} quantifier, else None."""
    m = re.match(r"\{\d+(,\d*)?\}", source[start:])
    return start + m.end() if m else None


@lru_cache(maxsize=256)
def compile_pattern(pattern: Pattern) -> re.Pattern[bytes]:
    """Compile a Pattern for matching over bytes.

    String-kind sources are matched literally.  Regexp sources are
    dialect-checked first.  Either way a pattern that can match zero
    bytes is rejected, because a zero-width delimiter never advances
    the input.
    """
    if pattern.kind == "string":
        if pattern.source == "":
            raise PatternError("empty pattern")
        try:
            literal = pattern.source.encode("ascii")
        except UnicodeEncodeError as exc:
            raise PatternError(f"pattern is not ASCII at position {exc.start}") from None
        compiled = re.compile(re.escape(literal))
    else:
        validate_regexp(pattern.source)
        try:
            compiled = re.compile(pattern.source.encode("ascii"))
        except re.error as exc:
            raise PatternError(f"pattern does not compile: {exc}") from None
    if compiled.search(b"") is not None:
        raise PatternError(f"pattern can match the empty string: {pattern.source!r}")
    return compiled
