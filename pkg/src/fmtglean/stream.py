"""Bounded-window byte stream with checkpoints.

ByteWindow wraps any readable binary stream and exposes the small surface
the parser needs: delimiter scans, exact reads, and checkpoint/rollback
for speculative parsing.  Memory stays bounded: the buffer never holds
more than the backtrack window plus one value's width, times a small
constant for amortized compaction (trimming the buffer on every advance
would make parsing quadratic).

All offsets in this API are absolute input offsets.  Scans never look
further than ``window_bytes`` past the oldest live checkpoint, so a
delimiter match (including its full extent) must fall inside the window
to be found; values longer than the window need a length annotation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import BinaryIO

from .errors import ParseError, WindowOverrunError

DEFAULT_WINDOW = 64 * 1024


@dataclass(frozen=True)
class Checkpoint:
    """A pinned input position; valid while the window still covers it."""

    offset: int
    serial: int


class ByteWindow:
    def __init__(self, source: BinaryIO, window_bytes: int = DEFAULT_WINDOW):
        if window_bytes < 1:
            raise ValueError("window_bytes must be positive")
        self.source = source
        self.window = window_bytes
        self.buf = bytearray()
        self.base = 0  # absolute offset of buf[0]
        self.pos = 0
        self.eof = False
        self.pins: list[Checkpoint] = []
        self._serial = 0
        self._trim_at = max(16, window_bytes // 2)
        self.max_buffered = 0  # instrumentation: high-water mark of len(buf)

    # -- buffer management --------------------------------------------------

    def _floor(self) -> int:
        return self.pins[0].offset if self.pins else self.pos

    def _fill_to(self, abs_end: int) -> None:
        need = abs_end - (self.base + len(self.buf))
        while need > 0 and not self.eof:
            chunk = self.source.read(need)
            if not chunk:
                self.eof = True
                break
            self.buf += chunk
            need -= len(chunk)
        if len(self.buf) > self.max_buffered:
            self.max_buffered = len(self.buf)

    def _trim(self) -> None:
        dead = self._floor() - self.base
        if dead >= self._trim_at:
            del self.buf[:dead]
            self.base += dead

    def _check_pinned_room(self) -> None:
        if self.pins and self.pos >= self._floor() + self.window:
            raise WindowOverrunError(
                "rollback window exceeded during speculation", offset=self.pos)

    # -- reading ------------------------------------------------------------

    def search(self, compiled: re.Pattern[bytes]) -> tuple[int, int] | None:
        """Find the earliest delimiter match at or after pos, within the
        window.  Returns absolute (start, end), or None only when the
        window could not be filled because the input ended.

        Raises when the window is full of unmatched bytes (no delimiter
        can ever turn up) or when speculation has run out of room.
        """
        self._check_pinned_room()
        limit = self._floor() + self.window
        # one byte past the limit distinguishes "input ends inside the
        # window" from "more bytes follow that we may not look at"
        self._fill_to(limit + 1)
        rel = self.pos - self.base
        end_rel = min(len(self.buf), limit - self.base)
        m = compiled.search(self.buf, rel, end_rel)
        if m is not None:
            return m.start() + self.base, m.end() + self.base
        if self.eof and self.base + len(self.buf) <= limit:
            return None
        raise ParseError("delimiter not found within window", offset=self.pos)

    def scan_token(self, compiled: re.Pattern[bytes]) -> tuple[bytes, int] | None:
        """Fused search + take: find the earliest delimiter match at or
        after pos, return (token bytes before it, absolute token end) and
        leave pos past the delimiter.  Returns None when the input ends
        before any delimiter, with pos unmoved (the caller decides what
        end-of-input means for its element).

        Semantically identical to search() followed by bytes_between()
        and advance_to(); fused because values dominate the parse loop.
        """
        pins = self.pins
        floor = pins[0].offset if pins else self.pos
        if pins and self.pos >= floor + self.window:
            raise WindowOverrunError(
                "rollback window exceeded during speculation", offset=self.pos)
        limit = floor + self.window
        if self.base + len(self.buf) <= limit and not self.eof:
            self._fill_to(limit + 1)
        buf = self.buf
        rel = self.pos - self.base
        end_rel = limit - self.base
        if end_rel > len(buf):
            end_rel = len(buf)
        m = compiled.search(buf, rel, end_rel)
        if m is None:
            if self.eof and self.base + len(buf) <= limit:
                return None
            raise ParseError("delimiter not found within window", offset=self.pos)
        token_end = m.start() + self.base  # absolute, before any trim
        token = bytes(buf[rel:m.start()])
        self.pos = m.end() + self.base
        dead = (pins[0].offset if pins else self.pos) - self.base
        if dead >= self._trim_at:
            del buf[:dead]
            self.base += dead
        return token, token_end

    def match_prefix(self, compiled: re.Pattern[bytes]) -> tuple[int, int] | None:
        """Match anchored at pos (for ignore patterns).  Absolute span or None."""
        self._check_pinned_room()
        limit = self._floor() + self.window
        self._fill_to(limit)
        rel = self.pos - self.base
        end_rel = min(len(self.buf), limit - self.base)
        m = compiled.match(self.buf, rel, end_rel)
        if m is None:
            return None
        return m.start() + self.base, m.end() + self.base

    def bytes_between(self, start: int, end: int) -> bytes:
        return bytes(self.buf[start - self.base:end - self.base])

    def read_exact(self, n: int) -> bytes:
        """Read exactly n bytes from pos, advancing past them."""
        self._check_pinned_room()
        self._fill_to(self.pos + n)
        rel = self.pos - self.base
        if len(self.buf) - rel < n:
            raise ParseError("unexpected end of stream", offset=self.base + len(self.buf))
        out = bytes(self.buf[rel:rel + n])
        self.advance_to(self.pos + n)
        return out

    def rest_of_window(self) -> bytes:
        """All buffered bytes from pos to end-of-input (only meaningful
        right after a search() returned None)."""
        return bytes(self.buf[self.pos - self.base:])

    def peek(self, n: int) -> bytes:
        self._fill_to(self.pos + n)
        rel = self.pos - self.base
        return bytes(self.buf[rel:rel + n])

    def at_eof(self) -> bool:
        self._fill_to(self.pos + 1)
        return self.eof and self.pos >= self.base + len(self.buf)

    def advance_to(self, offset: int) -> None:
        assert self.base <= offset <= self.base + len(self.buf)
        self.pos = offset
        self._trim()

    def splice(self, remove: int, data: bytes) -> None:
        """Replace the next ``remove`` bytes with ``data`` in place.

        Supports external transform hooks: downstream parsing (and the
        byte offsets it reports) continues over the transformed bytes.
        """
        self._fill_to(self.pos + remove)
        rel = self.pos - self.base
        if len(self.buf) - rel < remove:
            raise ParseError("unexpected end of stream", offset=self.base + len(self.buf))
        self.buf[rel:rel + remove] = data
        if len(self.buf) > self.max_buffered:
            self.max_buffered = len(self.buf)

    def drain(self) -> int:
        """Consume to end of input, returning the number of bytes skipped.

        Only valid with no live checkpoints; the bytes are discarded as
        they pass through, so memory stays bounded.
        """
        assert not self.pins
        count = len(self.buf) - (self.pos - self.base)
        self.pos = self.base + len(self.buf)
        self.buf.clear()
        self.base = self.pos
        while not self.eof:
            chunk = self.source.read(65536)
            if chunk:
                count += len(chunk)
                self.pos += len(chunk)
                self.base = self.pos
            else:
                self.eof = True
        return count

    # -- checkpoints ----------------------------------------------------------

    def mark(self) -> Checkpoint:
        self._serial += 1
        cp = Checkpoint(self.pos, self._serial)
        self.pins.append(cp)
        self.pins.sort(key=lambda c: c.offset)
        return cp

    def release(self, cp: Checkpoint) -> None:
        self.pins.remove(cp)
        self._trim()

    def rollback(self, cp: Checkpoint) -> None:
        if cp.offset < self.base:
            raise WindowOverrunError("backtrack beyond window", offset=cp.offset)
        self.pins.remove(cp)
        self.pos = cp.offset
