"""Streaming infoset events."""

from __future__ import annotations

from dataclasses import dataclass

START = "start-element"
VALUE = "value"
END = "end-element"
WARNING = "warning"


@dataclass(slots=True)
class ParseEvent:
    """One infoset event.

    ``start``/``end`` are absolute input byte offsets: for value events
    the consumed span (ignored prefix and delimiter included), for
    start/end-element events the zero-width position where the element
    opened or closed.  Events of hidden elements (and everything inside
    them) carry hidden=True.
    """

    kind: str
    name: str
    namespace: str = ""
    value: object = None
    hidden: bool = False
    start: int = 0
    end: int = 0

    @property
    def byte_span(self) -> tuple[int, int]:
        return (self.start, self.end)
