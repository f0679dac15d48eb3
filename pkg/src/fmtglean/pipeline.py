"""End-to-end ingest: parse bytes, emit XML, glean RDF, write outputs.

For an input ``name.ext`` the pipeline writes ``name.xml``, ``name.nt``
and ``name.prov.nt`` into the output directory.  All three are written
to temp files first and renamed only after every stage has succeeded, so
a failing stage leaves no partial outputs behind.  The XML and N-Triples
bytes depend only on the inputs; timestamps appear in the provenance
file alone.
"""

from __future__ import annotations

import os
import urllib.parse
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .errors import GleanError
from .events import WARNING
from .glean import glean, transform_refs
from .model import ResolvedModel, load_schema, resolve
from .parser import parse_stream
from .rdf import RDF_NS, BlankNode, IRI, Literal, Triple, TripleSet, serialize_ntriples
from .xmlout import EmitOptions, emit_xml

PROV_NS = "http://www.w3.org/ns/prov#"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
XSD_DATETIME = "http://www.w3.org/2001/XMLSchema#dateTime"

ENGINE_NAME = "fmtglean"


@dataclass
class ProvenanceRecord:
    triples: TripleSet
    generated_at: str


@dataclass
class PipelineResult:
    xml_path: Path
    rdf_path: Path
    prov_path: Path
    provenance: ProvenanceRecord
    diagnostics: list[str] = field(default_factory=list)


# schemas are immutable once resolved; cache per (path, mtime) so a
# directory run touches each schema file once per worker
_schema_cache: dict[tuple[str, int], ResolvedModel] = {}


def load_model(schema_path: Path | str) -> ResolvedModel:
    path = Path(schema_path).resolve()
    key = (str(path), path.stat().st_mtime_ns)
    model = _schema_cache.get(key)
    if model is None:
        model = resolve(load_schema(path.read_bytes()))
        _schema_cache[key] = model
    return model


def _as_iri(ref: str, transform_root: Path) -> IRI:
    scheme = urllib.parse.urlsplit(ref).scheme
    if scheme in ("http", "https", "file"):
        return IRI(ref)
    path = Path(ref)
    if not path.is_absolute():
        path = transform_root / path
    return IRI(path.resolve().as_uri())


def build_provenance(input_path: Path, schema_path: Path, refs: Iterable[str],
                     outputs: Iterable[Path], transform_root: Path,
                     generated_at: str | None = None) -> ProvenanceRecord:
    """Minimal derivation record: each output was derived from the input
    and generated by one run that used the schema and the transforms."""
    from . import __version__

    if generated_at is None:
        generated_at = datetime.now(timezone.utc).isoformat(timespec="seconds") \
            .replace("+00:00", "Z")
    rdf_type = IRI(RDF_NS + "type")
    run = BlankNode("run")
    agent = BlankNode("agent")
    input_iri = IRI(input_path.resolve().as_uri())

    ts = TripleSet()
    for out in outputs:
        out_iri = IRI(out.resolve().as_uri())
        ts.add(Triple(out_iri, IRI(PROV_NS + "wasDerivedFrom"), input_iri))
        ts.add(Triple(out_iri, IRI(PROV_NS + "wasGeneratedBy"), run))
        ts.add(Triple(out_iri, IRI(PROV_NS + "generatedAtTime"),
                      Literal(generated_at, XSD_DATETIME)))
    ts.add(Triple(run, rdf_type, IRI(PROV_NS + "Activity")))
    ts.add(Triple(run, IRI(PROV_NS + "used"), input_iri))
    ts.add(Triple(run, IRI(PROV_NS + "used"), IRI(schema_path.resolve().as_uri())))
    for ref in refs:
        ts.add(Triple(run, IRI(PROV_NS + "used"), _as_iri(ref, transform_root)))
    ts.add(Triple(run, IRI(PROV_NS + "wasAssociatedWith"), agent))
    ts.add(Triple(agent, rdf_type, IRI(PROV_NS + "SoftwareAgent")))
    ts.add(Triple(agent, IRI(RDFS_LABEL), Literal(f"{ENGINE_NAME} {__version__}")))
    return ProvenanceRecord(ts, generated_at)


def run_pipeline(data_file: Path | str, schema: Path | str,
                 transforms: Iterable[str] = (), out_dir: Path | str | None = None, *,
                 window_bytes: int | None = None, trailing: str = "error",
                 allow_http: bool = False, transform_root: Path | str | None = None,
                 hooks=None) -> PipelineResult:
    data_file = Path(data_file)
    schema = Path(schema)
    out_dir = Path(out_dir) if out_dir is not None else data_file.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    root_dir = Path(transform_root) if transform_root is not None else Path.cwd()

    model = load_model(schema)
    stem = data_file.stem
    xml_path = out_dir / f"{stem}.xml"
    nt_path = out_dir / f"{stem}.nt"
    prov_path = out_dir / f"{stem}.prov.nt"
    suffix = f".tmp-{os.getpid()}"
    temps = [p.with_name(p.name + suffix) for p in (xml_path, nt_path, prov_path)]
    xml_tmp, nt_tmp, prov_tmp = temps

    diagnostics: list[str] = []
    try:
        opts = EmitOptions(grddl_transforms=tuple(model.transforms) + tuple(transforms))
        with open(data_file, "rb") as source, open(xml_tmp, "wb") as sink:
            events = parse_stream(model, source, window_bytes=window_bytes,
                                  trailing=trailing, hooks=hooks)

            def watched():
                for ev in events:
                    if ev.kind == WARNING:
                        diagnostics.append(
                            f"{ev.name}: {ev.value} bytes at offset {ev.start}")
                    yield ev

            emit_xml(watched(), opts, sink)

        doc = ET.parse(xml_tmp).getroot()
        refs = transform_refs(doc)
        triples = glean(doc, transform_root=root_dir, allow_http=allow_http)
        nt_tmp.write_bytes(serialize_ntriples(triples))

        record = build_provenance(data_file, schema, refs,
                                  (xml_path, nt_path, prov_path), root_dir)
        prov_tmp.write_bytes(serialize_ntriples(record.triples))

        os.replace(xml_tmp, xml_path)
        os.replace(nt_tmp, nt_path)
        os.replace(prov_tmp, prov_path)
    finally:
        for tmp in temps:
            tmp.unlink(missing_ok=True)

    return PipelineResult(xml_path, nt_path, prov_path, record, diagnostics)
