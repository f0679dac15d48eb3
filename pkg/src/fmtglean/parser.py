"""Stream parser: interpret a ResolvedModel over bytes, emitting events.

The walk is speculative where the format demands it (choice alternatives,
occurrences beyond the declared minimum) and streaming everywhere else:
committed events leave the parser at occurrence-loop boundaries, so an
unbounded repetition never accumulates in memory.

Delimiter semantics: a value's token ends at the earliest position where
the element's terminator or separator matches; at equal positions the
terminator's alternatives are tried first, and within one pattern the
leftmost alternative wins (so separator "A|AB" on input "AB" consumes
"A").  The matched delimiter is consumed along with the value.  End of
input delimits the final value of a text element that has no other way
to end.
"""

from __future__ import annotations

import io
import re
import struct
from functools import lru_cache
from typing import BinaryIO, Callable, Iterator, Mapping, Union

from .errors import EvalError, ParseError
from .events import END, START, VALUE, WARNING, ParseEvent
from .exprs import BinOp, Expr, Lit, Ref
from .model import SIMPLE_TYPES, DfdlProps, ResolvedElement, ResolvedModel, ResolvedType
from .patterns import Pattern, compile_pattern
from .stream import ByteWindow

Hooks = Mapping[str, Callable[[bytes], bytes]]


class Scope:
    """Stack of frames mapping element name -> last parsed scalar value.

    A frame is pushed for every open complex element; scalar children
    (hidden ones included) are recorded in their parent's frame.  A path
    reference with k leading "../" steps reads the frame k levels up.
    """

    __slots__ = ("frames",)

    def __init__(self):
        self.frames: list[dict] = [{}]

    def push(self):
        self.frames.append({})

    def pop(self):
        self.frames.pop()

    def record(self, name: str, value):
        self.frames[-1][name] = value

    def lookup(self, ups: int, name: str):
        idx = len(self.frames) - 1 - ups
        if idx < 0:
            raise EvalError(f"unresolved reference: {'../' * ups}{name}")
        frame = self.frames[idx]
        if name not in frame:
            raise EvalError(f"unresolved reference: {'../' * ups}{name}")
        return frame[name]

    def fork(self) -> "Scope":
        other = Scope.__new__(Scope)
        other.frames = [dict(f) for f in self.frames]
        return other

    def adopt(self, other: "Scope"):
        self.frames = other.frames


def eval_expr(expr: Expr, scope: Scope) -> int:
    """Evaluate an annotation expression to an integer.

    Division truncates toward zero; dividing by zero and references to
    values that were never parsed (or are not integers) raise EvalError.
    """
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Ref):
        value = scope.lookup(expr.ups, expr.name)
        if not isinstance(value, int):
            raise EvalError(f"reference {'../' * expr.ups}{expr.name} is not an integer")
        return value
    left = eval_expr(expr.left, scope)
    right = eval_expr(expr.right, scope)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if right == 0:
        raise EvalError("division by zero")
    q = left // right
    if q < 0 and q * right != left:
        q += 1
    return q


# ---------------------------------------------------------------------------
# Value readers

_CODECS = {"US-ASCII": "ascii", "UTF-8": "utf-8"}

_INT_TOKEN = {
    2: re.compile(rb"[+-]?[01]+\Z"),
    8: re.compile(rb"[+-]?[0-7]+\Z"),
    10: re.compile(rb"[+-]?[0-9]+\Z"),
    16: re.compile(rb"[+-]?[0-9A-Fa-f]+\Z"),
}
_FLOAT_TOKEN = re.compile(rb"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?\Z")

_INT_BITS = {"byte": 8, "int": 32, "long": 64}


def _convert_text(token: bytes, base_simple: str, props: DfdlProps, offset: int):
    """Strict token conversion: no whitespace trimming, declared base only."""
    if base_simple == "string":
        try:
            return token.decode(_CODECS[props.charset])
        except UnicodeDecodeError:
            raise ParseError(f"token is not valid {props.charset}", offset=offset) from None
    if base_simple in _INT_BITS:
        if _INT_TOKEN[props.base].fullmatch(token) is None:
            raise ParseError(
                f"cannot convert {token!r} to {base_simple} (base {props.base})", offset=offset)
        value = int(token, props.base)
        bits = _INT_BITS[base_simple]
        if not -(1 << (bits - 1)) <= value <= (1 << (bits - 1)) - 1:
            raise ParseError(f"integer {value} out of range for {base_simple}", offset=offset)
        return value
    # float | double
    if _FLOAT_TOKEN.fullmatch(token) is None:
        raise ParseError(f"cannot convert {token!r} to {base_simple}", offset=offset)
    return float(token)


@lru_cache(maxsize=256)
def _delimiter_regex(terminator: Pattern | None, separator: Pattern | None) -> re.Pattern[bytes] | None:
    """One combined scan pattern per element: terminator alternatives
    first so they win position ties against the separator."""
    parts = []
    for pattern in (terminator, separator):
        if pattern is not None:
            parts.append(b"(?:" + compile_pattern(pattern).pattern + b")")
    if not parts:
        return None
    return re.compile(b"|".join(parts))


def read_text_value(props: DfdlProps, win: ByteWindow, scope: Scope,
                    base_simple: str = "string"):
    """Read one text-represented value.

    Returns (value, start, end) where start..end is the full consumed
    span: skipped ignore prefix, token, and the delimiter that ended it.
    """
    start = win.pos
    if props.ignore is not None:
        m = win.match_prefix(compile_pattern(props.ignore))
        if m is not None:
            win.advance_to(m[1])
    token_start = win.pos
    if props.length_expr is not None:
        token = win.read_exact(eval_expr(props.length_expr, scope))
    else:
        # no delimiter declared: the value runs to end of input
        delim = _delimiter_regex(props.terminator, props.separator) or _NEVER
        got = win.scan_token(delim)
        if got is None:
            token = win.rest_of_window()
            if token == b"":
                raise ParseError("unexpected end of input", offset=win.pos)
            win.advance_to(win.pos + len(token))
        else:
            token = got[0]
    value = _convert_text(token, base_simple, props, token_start)
    return value, start, win.pos


class _TextPlan:
    """Per-element fast path for text values: the delimiter regex, token
    pattern, and bounds are resolved once instead of per occurrence.
    read() must stay in lockstep with read_text_value above."""

    __slots__ = ("props", "base_simple", "ignore_re", "delim_re", "length_expr",
                 "token_re", "base", "lo", "hi")

    def __init__(self, el: ResolvedElement):
        p = el.props
        self.props = p
        self.base_simple = el.base_simple
        self.ignore_re = compile_pattern(p.ignore) if p.ignore is not None else None
        self.delim_re = _delimiter_regex(p.terminator, p.separator) or _NEVER
        self.length_expr = p.length_expr
        bits = _INT_BITS.get(el.base_simple)
        if bits is not None:
            self.token_re = _INT_TOKEN[p.base]
            self.base = p.base
            self.lo = -(1 << (bits - 1))
            self.hi = (1 << (bits - 1)) - 1
        else:
            self.token_re = None

    def read(self, win: ByteWindow, scope: Scope):
        start = win.pos
        if self.ignore_re is not None:
            m = win.match_prefix(self.ignore_re)
            if m is not None:
                win.advance_to(m[1])
        token_start = win.pos
        if self.length_expr is not None:
            token = win.read_exact(eval_expr(self.length_expr, scope))
        else:
            got = win.scan_token(self.delim_re)
            if got is None:
                token = win.rest_of_window()
                if token == b"":
                    raise ParseError("unexpected end of input", offset=win.pos)
                win.advance_to(win.pos + len(token))
            else:
                token = got[0]
        if self.token_re is not None:
            # integer conversion inlined; other types take the shared path
            if self.token_re.fullmatch(token) is None:
                raise ParseError(
                    f"cannot convert {token!r} to {self.base_simple} (base {self.base})",
                    offset=token_start)
            value = int(token, self.base)
            if not self.lo <= value <= self.hi:
                raise ParseError(f"integer {value} out of range for {self.base_simple}",
                                 offset=token_start)
        else:
            value = _convert_text(token, self.base_simple, self.props, token_start)
        return value, start, win.pos


_NEVER = re.compile(b"(?!)")  # matches nothing: used to scan for plain end-of-input


def read_binary_value(props: DfdlProps, win: ByteWindow, scope: Scope,
                      base_simple: str = "int"):
    """Read one binary value at its declared width and byte order.

    Returns (value, start, end).
    """
    start = win.pos
    if props.length_expr is not None:
        width = eval_expr(props.length_expr, scope)
        if width < 0:
            raise ParseError(f"negative length {width}", offset=start)
    else:
        width = SIMPLE_TYPES[base_simple]
    raw = win.read_exact(width)
    if base_simple in _INT_BITS:
        value = int.from_bytes(raw, "big" if props.byte_order == "big-endian" else "little",
                               signed=True)
    elif base_simple in ("float", "double"):
        if width not in (4, 8):
            raise ParseError(f"floating-point width must be 4 or 8, got {width}", offset=start)
        fmt = (">" if props.byte_order == "big-endian" else "<") + ("f" if width == 4 else "d")
        value = struct.unpack(fmt, raw)[0]
    else:  # string
        try:
            value = raw.decode(_CODECS[props.charset])
        except UnicodeDecodeError:
            raise ParseError(f"value is not valid {props.charset}", offset=start) from None
    return value, start, win.pos


def external_transform_hook(name: str, data: bytes, hooks: Hooks | None) -> bytes:
    """Run a caller-registered byte transform (decompression and the like)."""
    if not hooks or name not in hooks:
        raise ParseError(f"unregistered external transform: {name}")
    return hooks[name](data)


# ---------------------------------------------------------------------------
# The walk


class _Walker:
    def __init__(self, model: ResolvedModel, win: ByteWindow, hooks: Hooks | None):
        self.model = model
        self.ns = model.target_namespace
        self.win = win
        self.hooks = hooks
        self._plans: dict[int, _TextPlan] = {}

    # Every generator below yields committed chunks (lists of events).

    def stream_occurrences(self, el: ResolvedElement, scope: Scope, hidden: bool):
        win = self.win
        if el.props.condition_expr is not None and eval_expr(el.props.condition_expr, scope) == 0:
            return
        count = 0
        while count < el.min_occurs:
            occurrence_start = win.pos
            try:
                yield from self.stream_one(el, scope, hidden)
            except ParseError as exc:
                if win.pos == occurrence_start and not isinstance(exc, EvalError):
                    # inner message already names its own byte position
                    err = ParseError(
                        f"occurrence count below minimum for element {el.name!r}: "
                        f"got {count}, need {el.min_occurs}: {exc}")
                    err.offset = occurrence_start
                    raise err from exc
                raise
            count += 1
        while el.max_occurs is None or count < el.max_occurs:
            cp = win.mark()
            fork = scope.fork()
            start_pos = win.pos
            try:
                events = self.collect_one(el, fork, hidden)
            except ParseError:
                win.rollback(cp)
                break
            win.release(cp)
            scope.adopt(fork)
            yield events
            count += 1
            if win.pos == start_pos:
                break  # an occurrence that consumes nothing would repeat forever

    def stream_one(self, el: ResolvedElement, scope: Scope, hidden: bool):
        hidden = hidden or el.props.hidden
        win = self.win
        if el.props.external_transform is not None:
            self._apply_hook(el, scope)
        if el.is_simple:
            if el.props.rep_type == "text":
                plan = self._plans.get(id(el))
                if plan is None:
                    plan = self._plans[id(el)] = _TextPlan(el)
                value, start, end = plan.read(win, scope)
            else:
                value, start, end = read_binary_value(el.props, win, scope, el.base_simple)
            scope.record(el.name, value)
            yield [
                ParseEvent(START, el.name, self.ns, None, hidden, start, start),
                ParseEvent(VALUE, el.name, self.ns, value, hidden, start, end),
                ParseEvent(END, el.name, self.ns, None, hidden, end, end),
            ]
            return
        rt = self.model.types[el.type_name]
        yield [ParseEvent(START, el.name, self.ns, None, hidden, win.pos, win.pos)]
        scope.push()
        try:
            if rt.kind == "choice":
                index = self.choose(rt, scope)
                yield from self.stream_occurrences(rt.children[index], scope, hidden)
            else:
                for child in rt.children:
                    yield from self.stream_occurrences(child, scope, hidden)
        finally:
            scope.pop()
        yield [ParseEvent(END, el.name, self.ns, None, hidden, win.pos, win.pos)]

    def collect_one(self, el: ResolvedElement, scope: Scope, hidden: bool) -> list[ParseEvent]:
        events: list[ParseEvent] = []
        for chunk in self.stream_one(el, scope, hidden):
            events.extend(chunk)
        return events

    def collect_occurrences(self, el: ResolvedElement, scope: Scope, hidden: bool) -> list[ParseEvent]:
        events: list[ParseEvent] = []
        for chunk in self.stream_occurrences(el, scope, hidden):
            events.extend(chunk)
        return events

    def _apply_hook(self, el: ResolvedElement, scope: Scope):
        """Feed the element's raw extent through its external transform and
        continue parsing over the transformed bytes."""
        props = el.props
        if props.length_expr is None:
            raise ParseError(
                f"element {el.name!r} has an external transform but no length expression",
                offset=self.win.pos)
        raw_len = eval_expr(props.length_expr, scope)
        raw = self.win.peek(raw_len)
        if len(raw) < raw_len:
            raise ParseError("unexpected end of stream", offset=self.win.pos + len(raw))
        out = external_transform_hook(props.external_transform, raw, self.hooks)
        self.win.splice(raw_len, out)

    def choose(self, choice: ResolvedType, scope: Scope) -> int:
        win = self.win
        failures = []
        for index, branch in enumerate(choice.children):
            if branch.props.condition_expr is not None:
                if eval_expr(branch.props.condition_expr, scope) != 0:
                    return index
                continue
            cp = win.mark()
            try:
                self.collect_occurrences(branch, scope.fork(), True)
            except ParseError as exc:
                failures.append(f"{branch.name} failed at byte "
                                f"{exc.offset if exc.offset is not None else win.pos}")
                win.rollback(cp)
                continue
            win.rollback(cp)
            return index
        raise ParseError(
            "no branch matches: " + ("; ".join(failures) if failures else "every condition is zero"),
            offset=win.pos)


def choose_branch(model: ResolvedModel, choice: ResolvedType, win: ByteWindow,
                  scope: Scope, hooks: Hooks | None = None) -> int:
    """Pick the branch of a choice at the current stream position.

    A branch with a condition is selected iff its condition is the first
    to evaluate nonzero; branches without conditions are tried in order
    by speculative parse under a checkpoint.  The stream is left at the
    entry position either way; the caller parses the winner for real.
    """
    return _Walker(model, win, hooks).choose(choice, scope)


def parse_stream(model: ResolvedModel, source: Union[bytes, BinaryIO, ByteWindow], *,
                 window_bytes: int | None = None, trailing: str = "error",
                 hooks: Hooks | None = None) -> Iterator[ParseEvent]:
    """Parse the input against the model's first top-level element.

    Yields a balanced ParseEvent sequence.  The whole input must be
    consumed; with trailing="allow", leftover bytes produce one warning
    event carrying the residue size instead of an error.
    """
    if trailing not in ("error", "allow"):
        raise ValueError("trailing must be 'error' or 'allow'")
    if isinstance(source, ByteWindow):
        win = source
    else:
        if isinstance(source, (bytes, bytearray)):
            source = io.BytesIO(source)
        win = ByteWindow(source, window_bytes or 64 * 1024)
    walker = _Walker(model, win, hooks)
    scope = Scope()
    for chunk in walker.stream_occurrences(model.root, scope, False):
        yield from chunk
    if not win.at_eof():
        residue_start = win.pos
        if trailing == "error":
            raise ParseError("trailing bytes after the document element", offset=residue_start)
        count = win.drain()
        yield ParseEvent(WARNING, "trailing-bytes", "", count, False,
                         residue_start, residue_start + count)
