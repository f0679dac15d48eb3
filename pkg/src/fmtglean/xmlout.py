"""Serialize a ParseEvent stream to XML.

Output is written as events arrive; the document is never materialized.
One prefix ("d") is bound to the model's target namespace on the root
element.  When transforms are declared, the root also carries the GRDDL
data-view namespace and a transformation attribute listing them,
space-separated, so downstream agents know how to extract RDF.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import BinaryIO, Iterable

from .errors import EmitError
from .events import END, START, VALUE, WARNING, ParseEvent

GRDDL_NS = "http://www.w3.org/2003/g/data-view#"
# Clark-notation attribute name the transformation list appears under
# once a document is re-read with namespace processing
GRDDL_ATTR = f"{{{GRDDL_NS}}}transformation"


@dataclass(frozen=True)
class EmitOptions:
    grddl_transforms: tuple[str, ...] = ()
    indent: bool = False
    include_hidden: bool = False


def inject_grddl(opts: EmitOptions, attrs: dict[str, str]) -> dict[str, str]:
    """Decorate root-element attributes with the transform declaration.

    No-op when the transform list is empty.
    """
    if not opts.grddl_transforms:
        return attrs
    out = dict(attrs)
    out["xmlns:grddl"] = GRDDL_NS
    out["grddl:transformation"] = " ".join(opts.grddl_transforms)
    return out


def _escape_text(s: str) -> str:
    if "&" in s:
        s = s.replace("&", "&amp;")
    if "<" in s:
        s = s.replace("<", "&lt;")
    if ">" in s:
        s = s.replace(">", "&gt;")
    return s


def _escape_attr(s: str) -> str:
    return _escape_text(s).replace('"', "&quot;")


def _format_value(value) -> str:
    if isinstance(value, str):
        return _escape_text(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_xml(events: Iterable[ParseEvent], opts: EmitOptions = EmitOptions(),
             sink: BinaryIO | None = None) -> bytes | None:
    """Write events as an XML document.

    Returns the document bytes when ``sink`` is None, else writes to
    ``sink`` and returns None.  Hidden events are skipped unless
    opts.include_hidden; warning events never appear in the document.
    """
    buf = io.BytesIO() if sink is None else None
    out = buf if sink is None else sink
    # batch the many tiny fragments into one write per ~1k pieces
    pending: list[bytes] = []
    write = pending.append

    def flush():
        out.write(b"".join(pending))
        pending.clear()

    prefix = ""
    tags: dict[str, tuple[str, bytes, bytes]] = {}  # name -> (qualified, <open>, </close>)
    stack: list[str] = []  # open qualified tag names
    flags: list[list[bool]] = []  # per open element: [has_child_elements, has_text]
    started = False
    root_closed = False

    def tag_entry(name: str) -> tuple[str, bytes, bytes]:
        entry = tags.get(name)
        if entry is None:
            qualified = prefix + name
            entry = (qualified, f"<{qualified}>".encode("utf-8"),
                     f"</{qualified}>".encode("utf-8"))
            tags[name] = entry
        return entry

    for ev in events:
        if ev.kind == WARNING or (ev.hidden and not opts.include_hidden):
            continue
        if ev.kind == START:
            if root_closed:
                raise EmitError("content after the document element")
            if flags:
                flags[-1][0] = True
            if not started:
                started = True
                write(b'<?xml version="1.0" encoding="UTF-8"?>\n')
                prefix = "d:" if ev.namespace else ""
                qualified = prefix + ev.name
                attrs = {"xmlns:d": ev.namespace} if ev.namespace else {}
                attrs = inject_grddl(opts, attrs)
                parts = [f"<{qualified}"]
                for k, v in attrs.items():
                    parts.append(f' {k}="{_escape_attr(v)}"')
                parts.append(">")
                write("".join(parts).encode("utf-8"))
            else:
                if opts.indent:
                    write(b"\n" + b"  " * len(stack))
                qualified, open_bytes, _ = tag_entry(ev.name)
                write(open_bytes)
            stack.append(qualified)
            flags.append([False, False])
        elif ev.kind == VALUE:
            if not stack:
                raise EmitError("value event outside any element")
            flags[-1][1] = True
            write(_format_value(ev.value).encode("utf-8"))
            if len(pending) > 1024:
                flush()
        elif ev.kind == END:
            if not stack:
                raise EmitError(f"unbalanced events: end of {ev.name!r} with nothing open")
            open_tag = stack.pop()
            had_children = flags.pop()[0]
            qualified, _, close_bytes = tag_entry(ev.name)
            if open_tag != qualified:
                raise EmitError(f"unbalanced events: end of {ev.name!r} closes {open_tag!r}")
            if opts.indent and had_children:
                write(b"\n" + b"  " * len(stack))
            write(close_bytes)
            if not stack:
                root_closed = True
        else:
            raise EmitError(f"unknown event kind: {ev.kind}")

    if not started:
        raise EmitError("no document element")
    if stack:
        raise EmitError(f"unbalanced events: {len(stack)} element(s) never closed")
    write(b"\n")
    flush()
    return buf.getvalue() if buf else None
