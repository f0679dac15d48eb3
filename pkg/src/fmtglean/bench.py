"""Performance harness: generated inputs, scaling measurements, and the
schema-shape experiment.

Inputs follow the two-line header plus comma-separated integer rows of
the reference table format.  Row values repeat the first ten-row block
(value(r, c) = (r mod 10) + c), which keeps every value at most three
digits wide; the output/input size ratio then stays flat as files grow,
matching the roughly-eightfold expansion the format is known for.  A
formula that let values grow with the absolute row index would drag the
ratio down as digit width crept up, and the ratio checks would lose
their meaning.

Peak memory uses the kernel's resettable RSS high-water mark when /proc
supports it, and falls back to tracemalloc; the report records which
proxy produced its numbers.  Wall times are always measured without
tracemalloc active.
"""

from __future__ import annotations

import time
import tracemalloc
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FmtGleanError
from .events import VALUE
from .model import load_schema, resolve
from .parser import parse_stream
from .xmlout import EmitOptions, emit_xml

FIXED_HEADER = b"Creator: NCSA\nDate: Mon Feb 23 15:20:47 CST 2009\n"


def _row_line(r: int, cols: int) -> bytes:
    return ",".join(str(r % 10 + c) for c in range(cols)).encode("ascii")


def _block(cols: int) -> bytes:
    """Ten consecutive rows starting at r = 0, the repeating unit."""
    return b"\n".join(_row_line(r, cols) for r in range(10)) + b"\n"


def generate_csv(rows: int, cols: int, dest: Path | str) -> Path:
    """Write a header plus ``rows`` rows of ``cols`` integers."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be at least 1")
    dest = Path(dest)
    block = _block(cols)
    # write in multi-block chunks; byte multiplication beats a Python loop
    chunk_blocks = max(1, 65536 // len(block))
    chunk = block * chunk_blocks
    with open(dest, "wb") as f:
        f.write(FIXED_HEADER)
        full, rest = divmod(rows, 10)
        while full >= chunk_blocks:
            f.write(chunk)
            full -= chunk_blocks
        if full:
            f.write(block * full)
        for r in range(rest):
            f.write(_row_line(r, cols) + b"\n")
    return dest


def rows_for_target(target_bytes: int, cols: int = 10) -> int:
    """Row count (multiple of ten) whose file lands nearest the target."""
    per_block = len(_block(cols))
    blocks = max(1, round((target_bytes - len(FIXED_HEADER)) / per_block))
    return blocks * 10


def table_schema_text(items_per_row: int, cols_hint: int = 10) -> str:
    """A table format description: two ignored-prefix header fields, then
    unbounded rows of exactly ``items_per_row`` integers.  Commas and
    line breaks both separate items, so the grouping of the integer
    stream into rows is entirely schema-driven."""
    del cols_hint
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<xs:schema xmlns:xs="http://www.w3.org/2001/XMLSchema"
           xmlns:dfdl="DFDL"
           targetNamespace="Dataset" xmlns="Dataset">
  <xs:element name="table">
    <xs:complexType>
      <xs:sequence>
        <xs:element name="hdrblock">
          <xs:complexType>
            <xs:sequence>
              <xs:element name="Author" type="xs:string">
                <xs:annotation><xs:appinfo>
                  <dfdl:dataFormat>
                    <dfdl:ignore kind="regexp">Creator:\\s</dfdl:ignore>
                    <dfdl:terminator kind="regexp">\\r\\n|[\\r\\n]</dfdl:terminator>
                  </dfdl:dataFormat>
                </xs:appinfo></xs:annotation>
              </xs:element>
              <xs:element name="CreationDate" type="xs:string">
                <xs:annotation><xs:appinfo>
                  <dfdl:dataFormat>
                    <dfdl:ignore kind="regexp">Date:\\s</dfdl:ignore>
                    <dfdl:terminator kind="regexp">\\r\\n|[\\r\\n]</dfdl:terminator>
                  </dfdl:dataFormat>
                </xs:appinfo></xs:annotation>
              </xs:element>
            </xs:sequence>
          </xs:complexType>
        </xs:element>
        <xs:element name="Row" minOccurs="0" maxOccurs="unbounded">
          <xs:complexType>
            <xs:sequence>
              <xs:element name="item" type="xs:int"
                          minOccurs="{items_per_row}" maxOccurs="{items_per_row}">
                <xs:annotation><xs:appinfo>
                  <dfdl:dataFormat>
                    <dfdl:separator kind="regexp">,\\r\\n|,|\\r\\n|[\\r\\n]</dfdl:separator>
                    <dfdl:base>10</dfdl:base>
                  </dfdl:dataFormat>
                </xs:appinfo></xs:annotation>
              </xs:element>
            </xs:sequence>
          </xs:complexType>
        </xs:element>
      </xs:sequence>
    </xs:complexType>
  </xs:element>
</xs:schema>
"""


class PeakTracker:
    """Resettable peak-memory readings.

    Prefers VmHWM from /proc/self/status, reset through
    /proc/self/clear_refs, because it observes the whole process at
    native speed.  Falls back to tracemalloc (which only sees Python
    allocations and slows the interpreter) where /proc is unavailable.
    """

    def __init__(self):
        self.proxy = "rss-highwater"
        try:
            self._reset_rss()
            self._read_rss_peak()
        except OSError:
            self.proxy = "tracemalloc"

    @staticmethod
    def _reset_rss() -> None:
        with open("/proc/self/clear_refs", "w") as f:
            f.write("5")

    @staticmethod
    def _read_rss_peak() -> int:
        with open("/proc/self/status") as f:
            for line in f:
                if line.startswith("VmHWM:"):
                    return int(line.split()[1]) * 1024
        raise OSError("VmHWM not reported")

    def reset(self) -> None:
        if self.proxy == "rss-highwater":
            self._reset_rss()
        elif tracemalloc.is_tracing():
            tracemalloc.reset_peak()
        else:
            tracemalloc.start()

    def peak(self) -> int:
        if self.proxy == "rss-highwater":
            return self._read_rss_peak()
        return tracemalloc.get_traced_memory()[1]


@dataclass
class BenchRecord:
    target_bytes: int
    input_bytes: int
    output_bytes: int
    seconds: float
    peak_bytes: int
    rows: int


@dataclass
class BenchReport:
    records: list[BenchRecord] = field(default_factory=list)
    slope: float = 0.0
    intercept: float = 0.0
    r_squared: float = 0.0
    memory_proxy: str = ""
    valid: bool = True
    note: str = ""

    def ratios(self) -> list[float]:
        return [r.output_bytes / r.input_bytes for r in self.records]


def fit_linear(xs, ys) -> tuple[float, float, float]:
    """Least-squares line fit: (slope, intercept, R^2)."""
    n = len(xs)
    if n == 0:
        raise ValueError("nothing to fit")
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        slope, intercept = 0.0, my
    else:
        slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
        intercept = my - slope * mx
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - my) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def run_bench(sizes: list[int], workdir: Path | str, *, cols: int = 10,
              keep_files: bool = False) -> BenchReport:
    """Parse + emit one generated table per target size, serially."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    model = resolve(load_schema(table_schema_text(cols).encode()))
    tracker = PeakTracker()
    report = BenchReport(memory_proxy=tracker.proxy)

    for i, target in enumerate(sizes):
        src = workdir / f"bench-{i}-{target}.csv"
        dst = workdir / f"bench-{i}-{target}.xml"
        try:
            generate_csv(rows_for_target(target, cols), cols, src)
            input_bytes = src.stat().st_size
            tracker.reset()
            t0 = time.perf_counter()
            with open(src, "rb") as f, open(dst, "wb") as sink:
                emit_xml(parse_stream(model, f), EmitOptions(), sink)
            elapsed = time.perf_counter() - t0
            peak = tracker.peak()
            report.records.append(BenchRecord(
                target, input_bytes, dst.stat().st_size, elapsed, peak,
                rows_for_target(target, cols)))
        except (FmtGleanError, OSError) as exc:
            report.valid = False
            report.note = f"aborted at target {target}: {exc}"
            break
        finally:
            if not keep_files:
                src.unlink(missing_ok=True)
                dst.unlink(missing_ok=True)

    if report.records:
        report.slope, report.intercept, report.r_squared = fit_linear(
            [r.input_bytes for r in report.records],
            [r.seconds for r in report.records])
    return report


@dataclass
class ShapeRecord:
    items_per_row: int
    item_count: int
    seconds: float
    peak_bytes: int


@dataclass
class ShapeReport:
    total_items: int
    records: list[ShapeRecord] = field(default_factory=list)
    multisets_match: bool = True
    memory_proxy: str = ""


def schema_shape_experiment(total_items: int, workdir: Path | str,
                            items_per_row: tuple[int, ...] = (2, 10, 100),
                            *, file_cols: int = 100) -> ShapeReport:
    """Parse one integer stream under schemas that differ only in how
    many items form a row.  Commas and newlines both separate items, so
    every variant reads the same file; each must stream to completion
    with the same value multiset."""
    for n in items_per_row:
        if total_items % n:
            raise ValueError(f"total_items={total_items} not divisible by {n}")
    if total_items % file_cols:
        raise ValueError(f"total_items={total_items} not divisible by "
                         f"file column count {file_cols}")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    src = workdir / f"shape-{total_items}.csv"
    generate_csv(total_items // file_cols, file_cols, src)

    tracker = PeakTracker()
    report = ShapeReport(total_items=total_items, memory_proxy=tracker.proxy)
    baseline: Counter | None = None
    try:
        for n in items_per_row:
            model = resolve(load_schema(table_schema_text(n).encode()))
            counts: Counter = Counter()
            tracker.reset()
            t0 = time.perf_counter()
            with open(src, "rb") as f:
                for ev in parse_stream(model, f):
                    if ev.kind == VALUE and ev.name == "item":
                        counts[ev.value] += 1
            elapsed = time.perf_counter() - t0
            peak = tracker.peak()
            seen = sum(counts.values())
            if seen != total_items:
                raise FmtGleanError(
                    f"variant {n}/row parsed {seen} items, expected {total_items}")
            if baseline is None:
                baseline = counts
            elif counts != baseline:
                report.multisets_match = False
            report.records.append(ShapeRecord(n, seen, elapsed, peak))
    finally:
        src.unlink(missing_ok=True)
    return report
