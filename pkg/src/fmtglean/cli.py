"""Command-line pipeline around the library.

Subcommands: ``parse`` (bytes to XML), ``glean`` (XML to N-Triples),
``run`` (full pipeline with outputs and provenance), ``detect`` (registry
lookup only), ``bench`` (scaling report).

Exit codes: 0 success, 1 usage or input-path problems, 2 parse or schema
errors, 3 glean errors, 4 registry errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import (EmitError, FmtGleanError, GleanError, ParseError,
                     RegistryError, SchemaError)
from .glean import glean
from .pipeline import load_model, run_pipeline
from .rdf import serialize_ntriples
from .registry import detect_format, load_registry
from .xmlout import EmitOptions, emit_xml


class _ArgParser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which this tool reserves for
    # parse errors; remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    from . import __version__

    top = _ArgParser(prog="fmtglean",
                     description="Parse described file formats to XML and glean RDF.")
    top.add_argument("--version", action="version",
                     version=f"%(prog)s {__version__}")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    def add_parse_flags(p):
        p.add_argument("--window-bytes", type=int, default=None,
                       help="backtrack window size (default 64 KiB)")
        p.add_argument("--trailing", choices=("error", "allow"), default="error",
                       help="policy for bytes after the document (default error)")

    p = sub.add_parser("parse", help="parse a data file to XML")
    p.add_argument("data", type=Path)
    p.add_argument("--schema", type=Path, required=True)
    p.add_argument("--transform", action="append", default=[],
                   help="transform reference to declare on the output root (repeatable)")
    p.add_argument("--out-dir", type=Path, default=None,
                   help="write <stem>.xml here instead of stdout")
    add_parse_flags(p)

    p = sub.add_parser("glean", help="extract RDF from an XML document")
    p.add_argument("xml", type=Path)
    p.add_argument("--transform", action="append", default=[],
                   help="extra transform reference (repeatable)")
    p.add_argument("--allow-http", action="store_true",
                   help="permit fetching http(s) transform references")
    p.add_argument("--out-dir", type=Path, default=None,
                   help="write <stem>.nt here instead of stdout")

    p = sub.add_parser("run", help="full pipeline: parse, glean, write outputs")
    p.add_argument("inputs", nargs="+", type=Path,
                   help="data files and/or directories of data files")
    p.add_argument("--schema", type=Path, default=None)
    p.add_argument("--registry", type=Path, default=None)
    p.add_argument("--transform", action="append", default=[])
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--allow-http", action="store_true")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel pipelines for directory runs")
    add_parse_flags(p)

    p = sub.add_parser("detect", help="match a file against the registry")
    p.add_argument("file", type=Path)
    p.add_argument("--registry", type=Path, required=True)

    p = sub.add_parser("bench", help="run the scaling benchmark")
    p.add_argument("--sizes", default="1,2,5,10,20",
                   help="comma-separated input sizes in MB (default 1,2,5,10,20)")
    p.add_argument("--shape-items", type=int, default=0,
                   help="also run the schema-shape experiment on this many items")
    p.add_argument("--out-dir", type=Path, default=Path("bench-report"))
    return top


def _cmd_parse(args) -> int:
    model = load_model(args.schema)
    opts = EmitOptions(grddl_transforms=tuple(model.transforms) + tuple(args.transform))
    from .parser import parse_stream

    with open(args.data, "rb") as f:
        events = parse_stream(model, f, window_bytes=args.window_bytes,
                              trailing=args.trailing)
        if args.out_dir is None:
            sys.stdout.buffer.write(emit_xml(events, opts))
        else:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            out = args.out_dir / f"{args.data.stem}.xml"
            with open(out, "wb") as sink:
                emit_xml(events, opts, sink)
            print(out)
    return 0


def _cmd_glean(args) -> int:
    data = args.xml.read_bytes()
    triples = glean(data, args.transform, allow_http=args.allow_http)
    nt = serialize_ntriples(triples)
    if args.out_dir is None:
        sys.stdout.buffer.write(nt)
    else:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        out = args.out_dir / f"{args.xml.stem}.nt"
        out.write_bytes(nt)
        print(out)
    return 0


def _expand_inputs(inputs: list[Path]) -> list[Path]:
    files = []
    for p in inputs:
        if p.is_dir():
            files.extend(sorted(c for c in p.iterdir() if c.is_file()))
        else:
            files.append(p)
    return files


def _run_one(data_file: Path, schema: Path, transforms: tuple[str, ...],
             out_dir: Path | None, window_bytes: int | None, trailing: str,
             allow_http: bool) -> str:
    result = run_pipeline(data_file, schema, transforms, out_dir,
                          window_bytes=window_bytes, trailing=trailing,
                          allow_http=allow_http)
    note = f" ({'; '.join(result.diagnostics)})" if result.diagnostics else ""
    return f"{data_file}: wrote {result.xml_path} {result.rdf_path} " \
           f"{result.prov_path}{note}"


def _error_code(exc: BaseException) -> int:
    if isinstance(exc, (SchemaError, ParseError, EmitError)):
        return 2
    if isinstance(exc, GleanError):
        return 3
    if isinstance(exc, RegistryError):
        return 4
    return 1


def _cmd_run(args) -> int:
    if (args.schema is None) == (args.registry is None):
        print("fmtglean run: exactly one of --schema or --registry is required",
              file=sys.stderr)
        return 1
    registry = load_registry(args.registry) if args.registry is not None else None
    files = _expand_inputs(args.inputs)
    if not files:
        print("fmtglean run: no input files", file=sys.stderr)
        return 1

    jobs = []
    for f in files:
        if registry is not None:
            rule = detect_format(f, registry)
            schema = rule.schema_path
            transforms = rule.transforms + tuple(args.transform)
        else:
            schema = args.schema
            transforms = tuple(args.transform)
        jobs.append((f, schema, transforms, args.out_dir, args.window_bytes,
                     args.trailing, args.allow_http))

    worst = 0
    if len(jobs) == 1 or args.jobs <= 1:
        for job in jobs:
            try:
                print(_run_one(*job))
            except FmtGleanError as exc:
                print(f"{job[0]}: error: {exc}", file=sys.stderr)
                worst = max(worst, _error_code(exc))
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [(job[0], pool.submit(_run_one, *job)) for job in jobs]
            for path, fut in futures:
                try:
                    print(fut.result())
                except FmtGleanError as exc:
                    print(f"{path}: error: {exc}", file=sys.stderr)
                    worst = max(worst, _error_code(exc))
    return worst


def _cmd_detect(args) -> int:
    registry = load_registry(args.registry)
    rule = detect_format(args.file, registry)
    line = f"{rule.id}\t{rule.schema_path}"
    if rule.transforms:
        line += "\t" + " ".join(rule.transforms)
    print(line)
    return 0


def _cmd_bench(args) -> int:
    from .bench import run_bench, schema_shape_experiment
    from .report import summary_text, write_report

    try:
        sizes = [int(float(s) * 1024 * 1024) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        print(f"fmtglean bench: bad --sizes value: {args.sizes}", file=sys.stderr)
        return 1
    if not sizes:
        print("fmtglean bench: --sizes is empty", file=sys.stderr)
        return 1
    args.out_dir.mkdir(parents=True, exist_ok=True)
    report = run_bench(sizes, args.out_dir / "work")
    shape = None
    if args.shape_items:
        shape = schema_shape_experiment(args.shape_items, args.out_dir / "work")
    paths = write_report(report, args.out_dir, shape)
    sys.stdout.write(summary_text(report, shape))
    print("wrote: " + " ".join(str(p) for p in paths))
    return 0 if report.valid else 2


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0

    handlers = {"parse": _cmd_parse, "glean": _cmd_glean, "run": _cmd_run,
                "detect": _cmd_detect, "bench": _cmd_bench}
    try:
        return handlers[args.command](args)
    except FmtGleanError as exc:
        print(f"fmtglean {args.command}: error: {exc}", file=sys.stderr)
        return _error_code(exc)
    except FileNotFoundError as exc:
        print(f"fmtglean {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except IsADirectoryError as exc:
        print(f"fmtglean {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
