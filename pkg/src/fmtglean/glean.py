"""Gleaning: run every transform a document declares and union the RDF.

Transform references come from three places: the data-view transformation
attribute on the document root, transforms declared by the format schema
(the emitter injects those into the same attribute), and extras passed by
the caller.  Each reference is fetched, loaded, applied, and the
resulting triple sets are unioned.  Set semantics make the union
insensitive to declaration order and to duplicates.

Relative references resolve against ``transform_root`` (default: the
process working directory).  http(s) fetching is off unless
``allow_http`` is set, so offline runs stay reproducible.
"""

from __future__ import annotations

import itertools
import urllib.parse
import urllib.request
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable

from .errors import GleanError
from .rdf import BlankNode, TripleSet
from .xmlout import GRDDL_ATTR
from .xslt import apply_transform, load_transform


def _fetch(ref: str, transform_root: Path, allow_http: bool) -> bytes:
    parts = urllib.parse.urlsplit(ref)
    if parts.scheme in ("http", "https"):
        if not allow_http:
            raise GleanError(
                f"refusing to fetch {ref} (remote transforms disabled; enable http access to allow)")
        try:
            with urllib.request.urlopen(ref) as resp:
                return resp.read()
        except OSError as exc:
            raise GleanError(f"cannot fetch {ref}: {exc}") from None
    if parts.scheme == "file":
        path = Path(urllib.request.url2pathname(parts.path))
    elif parts.scheme == "":
        path = Path(ref)
        if not path.is_absolute():
            path = transform_root / path
    else:
        raise GleanError(f"unsupported transform URI scheme: {parts.scheme}")
    try:
        return path.read_bytes()
    except OSError as exc:
        raise GleanError(f"cannot read transform {ref}: {exc}") from None


def transform_refs(doc_root: ET.Element, extra_transforms: Iterable[str] = ()) -> list[str]:
    """Ordered, de-duplicated transform references for a document."""
    declared = (doc_root.get(GRDDL_ATTR) or "").split()
    refs = []
    for ref in itertools.chain(declared, extra_transforms):
        if ref not in refs:
            refs.append(ref)
    return refs


def glean(doc: bytes | ET.Element, extra_transforms: Iterable[str] = (), *,
          transform_root: Path | str | None = None,
          allow_http: bool = False) -> TripleSet:
    """Apply every declared and extra transform to the document."""
    if isinstance(doc, (bytes, bytearray)):
        try:
            root = ET.fromstring(doc)
        except ET.ParseError as exc:
            raise GleanError(f"malformed XML document: {exc}") from None
    else:
        root = doc
    base = Path(transform_root) if transform_root is not None else Path.cwd()

    counter = itertools.count()
    fresh_blank = lambda: BlankNode(f"g{next(counter)}")
    triples = TripleSet()
    for ref in transform_refs(root, extra_transforms):
        try:
            sheet = load_transform(_fetch(ref, base, allow_http))
            triples = triples | apply_transform(root, sheet, fresh_blank)
        except GleanError as exc:
            raise type(exc)(f"transform {ref}: {exc}") from None
    return triples
