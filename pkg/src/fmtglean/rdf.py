"""RDF triples, graph equality, and the two serializations.

Blank-node handling is the delicate part.  Canonical N-Triples output
labels blank nodes _:b0, _:b1, ... in first-appearance order after
sorting: subject groups come in order (IRI subjects lexicographically,
then blank subjects in canonical rank order), and triples within a group
sort by (predicate, object).  Canonical ranks come from signature
refinement plus a bounded search over refinement ties, so two graphs get
identical canonical bytes exactly when they are isomorphic under blank
relabeling (up to the documented search cap).
"""

from __future__ import annotations

import hashlib
import itertools
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .errors import GleanError

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
XML_LANG = "{http://www.w3.org/XML/1998/namespace}lang"

# refinement ties searched exhaustively up to this many orderings
_TIE_SEARCH_CAP = 5040


@dataclass(frozen=True)
class IRI:
    value: str


@dataclass(frozen=True)
class BlankNode:
    id: str


@dataclass(frozen=True)
class Literal:
    lex: str
    datatype: str | None = None
    lang: str | None = None


Subject = Union[IRI, BlankNode]
Object = Union[IRI, BlankNode, Literal]


@dataclass(frozen=True)
class Triple:
    subject: Subject
    predicate: IRI
    object: Object

    def __post_init__(self):
        if not isinstance(self.predicate, IRI):
            raise ValueError("triple predicate must be an IRI")
        if not isinstance(self.subject, (IRI, BlankNode)):
            raise ValueError("triple subject must be an IRI or blank node")
        if not isinstance(self.object, (IRI, BlankNode, Literal)):
            raise ValueError("triple object must be an IRI, blank node, or literal")


class TripleSet:
    """A set of triples: duplicates collapse, union is order-independent."""

    __slots__ = ("_triples",)

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples = set(triples)

    def add(self, triple: Triple) -> None:
        self._triples.add(triple)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __or__(self, other: "TripleSet") -> "TripleSet":
        return TripleSet(self._triples | other._triples)

    def __eq__(self, other) -> bool:
        """Label-sensitive equality; use isomorphic() across documents."""
        return isinstance(other, TripleSet) and self._triples == other._triples

    def __repr__(self) -> str:
        return f"TripleSet({len(self._triples)} triples)"

    def isomorphic(self, other: "TripleSet") -> bool:
        """Equality up to consistent blank-node relabeling."""
        return isinstance(other, TripleSet) and \
            serialize_ntriples(self) == serialize_ntriples(other)


# ---------------------------------------------------------------------------
# N-Triples


def _escape_chars(s: str, also: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch in also:
            out.append("\\" + {"\n": "n", "\r": "r", "\t": "t", '"': '"'}[ch])
        elif " " <= ch <= "~":
            out.append(ch)
        else:
            cp = ord(ch)
            out.append(f"\\u{cp:04X}" if cp <= 0xFFFF else f"\\U{cp:08X}")
    return "".join(out)


def _render_iri(iri: IRI) -> str:
    return "<" + _escape_chars(iri.value, "") + ">"


def _render_literal(lit: Literal) -> str:
    s = '"' + _escape_chars(lit.lex, '\n\r\t"') + '"'
    if lit.datatype is not None:
        s += "^^" + _render_iri(IRI(lit.datatype))
    elif lit.lang is not None:
        s += "@" + lit.lang
    return s


def _ground_key(term) -> tuple:
    """Sort key for a non-blank term; blanks get keys from their ranks."""
    if isinstance(term, IRI):
        return (0, term.value)
    return (2, term.lex, term.datatype or "", term.lang or "")


def _blank_ids(triples: Iterable[Triple]) -> set[str]:
    ids = set()
    for t in triples:
        if isinstance(t.subject, BlankNode):
            ids.add(t.subject.id)
        if isinstance(t.object, BlankNode):
            ids.add(t.object.id)
    return ids


def _refine_signatures(triples: list[Triple], ids: set[str]) -> dict[str, str]:
    """Iterated neighborhood hashing: isomorphic graphs give the same
    multiset of signatures regardless of input labels."""

    def ground(term) -> str:
        if isinstance(term, IRI):
            return "I" + term.value
        return "L" + term.lex + "\x00" + (term.datatype or "") + "\x00" + (term.lang or "")

    sig = {i: "B" for i in ids}
    for _ in range(max(1, len(ids))):
        nxt = {}
        for i in ids:
            edges = []
            for t in triples:
                if isinstance(t.subject, BlankNode) and t.subject.id == i:
                    other = ("B", sig[t.object.id]) if isinstance(t.object, BlankNode) \
                        else ("G", ground(t.object))
                    edges.append(("S", t.predicate.value, other))
                if isinstance(t.object, BlankNode) and t.object.id == i:
                    other = ("B", sig[t.subject.id]) if isinstance(t.subject, BlankNode) \
                        else ("G", ground(t.subject))
                    edges.append(("O", t.predicate.value, other))
            nxt[i] = hashlib.sha256(repr((sig[i], sorted(edges))).encode()).hexdigest()
        sig = nxt
    return sig


def _sorted_with_labels(triples: list[Triple], rank: dict[str, int]) -> tuple[list[str], dict[str, str]]:
    """Sort triples under the given blank ranks, assign _:bN labels by
    first appearance, and render the lines."""

    def subject_key(t: Triple):
        if isinstance(t.subject, IRI):
            return (0, t.subject.value)
        return (1, rank[t.subject.id])

    def object_key(t: Triple):
        if isinstance(t.object, BlankNode):
            return (1, rank[t.object.id])
        return _ground_key(t.object)

    ordered = sorted(triples, key=lambda t: (subject_key(t), t.predicate.value, object_key(t)))
    labels: dict[str, str] = {}

    def label(node: BlankNode) -> str:
        got = labels.get(node.id)
        if got is None:
            got = f"b{len(labels)}"
            labels[node.id] = got
        return got

    lines = []
    for t in ordered:
        s = "_:" + label(t.subject) if isinstance(t.subject, BlankNode) else _render_iri(t.subject)
        if isinstance(t.object, BlankNode):
            o = "_:" + label(t.object)
        elif isinstance(t.object, IRI):
            o = _render_iri(t.object)
        else:
            o = _render_literal(t.object)
        lines.append(f"{s} {_render_iri(t.predicate)} {o} .")
    return lines, labels


def _canonical_lines(ts: TripleSet) -> tuple[list[str], dict[str, str]]:
    triples = list(ts)
    ids = _blank_ids(triples)
    if not ids:
        lines, labels = _sorted_with_labels(triples, {})
        return lines, labels

    sig = _refine_signatures(triples, ids)
    classes: dict[str, list[str]] = {}
    for i in ids:
        classes.setdefault(sig[i], []).append(i)
    ordered_classes = [sorted(classes[s]) for s in sorted(classes)]

    total = math.prod(math.factorial(len(c)) for c in ordered_classes)
    if total == 1 or total > _TIE_SEARCH_CAP:
        # no ties, or too many to search: rank by (signature, id). Beyond
        # the cap this is deterministic for a given input labeling but not
        # canonical across relabelings.
        rank = {}
        for cls in ordered_classes:
            for i in cls:
                rank[i] = len(rank)
        return _sorted_with_labels(triples, rank)

    best = None
    for perm_combo in itertools.product(*(itertools.permutations(c) for c in ordered_classes)):
        rank = {}
        for cls in perm_combo:
            for i in cls:
                rank[i] = len(rank)
        candidate = _sorted_with_labels(triples, rank)
        if best is None or candidate[0] < best[0]:
            best = candidate
    return best


def serialize_ntriples(ts: TripleSet) -> bytes:
    """Canonical N-Triples: one triple per line, deterministic order and
    blank labels, UTF-8 with LF line endings."""
    lines, _ = _canonical_lines(ts)
    if not lines:
        return b""
    return ("\n".join(lines) + "\n").encode("utf-8")


def isomorphic(a: TripleSet, b: TripleSet) -> bool:
    return a.isomorphic(b)


# ---------------------------------------------------------------------------
# RDF/XML


def _split_iri(iri: str) -> tuple[str, str]:
    """Split a predicate IRI into (namespace, local name) for XML."""
    for sep in ("#", "/"):
        idx = iri.rfind(sep)
        if idx != -1 and idx + 1 < len(iri):
            local = iri[idx + 1:]
            if local.replace("_", "a").replace("-", "a").replace(".", "a").isalnum() \
                    and not local[0].isdigit():
                return iri[:idx + 1], local
    raise GleanError(f"cannot derive an XML name from predicate IRI: {iri}")


def serialize_rdfxml(ts: TripleSet) -> bytes:
    """Group triples by subject into rdf:Description elements.

    Re-parsing the output yields a graph isomorphic to the input.
    """
    _, labels = _canonical_lines(ts)
    # order subjects as canonical N-Triples does
    order: dict = {}
    for t in sorted(ts, key=lambda t: _subject_sort_key(t, labels)):
        key = _subject_id(t.subject, labels)
        order.setdefault(key, (t.subject, []))
        order[key][1].append(t)

    root = ET.Element("rdf:RDF", {"xmlns:rdf": RDF_NS})
    prefixes: dict[str, str] = {RDF_NS: "rdf"}
    for subject, triples in order.values():
        desc = ET.SubElement(root, "rdf:Description")
        if isinstance(subject, IRI):
            desc.set("rdf:about", subject.value)
        else:
            desc.set("rdf:nodeID", labels[subject.id])
        for t in sorted(triples, key=lambda t: (t.predicate.value, _object_sort_key(t, labels))):
            ns, local = _split_iri(t.predicate.value)
            prefix = prefixes.get(ns)
            if prefix is None:
                prefix = f"ns{len(prefixes)}"
                prefixes[ns] = prefix
                root.set(f"xmlns:{prefix}", ns)
            prop = ET.SubElement(desc, f"{prefix}:{local}")
            obj = t.object
            if isinstance(obj, IRI):
                prop.set("rdf:resource", obj.value)
            elif isinstance(obj, BlankNode):
                prop.set("rdf:nodeID", labels[obj.id])
            else:
                prop.text = obj.lex
                if obj.datatype is not None:
                    prop.set("rdf:datatype", obj.datatype)
                elif obj.lang is not None:
                    prop.set("xml:lang", obj.lang)
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _subject_id(subject: Subject, labels: dict[str, str]) -> tuple:
    if isinstance(subject, IRI):
        return (0, subject.value)
    return (1, labels.get(subject.id, subject.id))


def _subject_sort_key(t: Triple, labels: dict[str, str]):
    s = t.subject
    if isinstance(s, IRI):
        return ((0, s.value), t.predicate.value)
    # b-labels sort bN by numeric suffix so b10 follows b9
    lbl = labels.get(s.id, s.id)
    num = int(lbl[1:]) if lbl[1:].isdigit() else 0
    return ((1, num), t.predicate.value)


def _object_sort_key(t: Triple, labels: dict[str, str]):
    o = t.object
    if isinstance(o, BlankNode):
        return (1, labels.get(o.id, o.id))
    return _ground_key(o)


def triples_from_rdfxml(root: ET.Element, fresh_blank) -> Iterator[Triple]:
    """Read the RDF/XML subset this package writes (and its transforms
    produce): rdf:RDF containing rdf:Description elements.

    ``fresh_blank`` is a callable returning a new document-scoped blank
    node for each Description without rdf:about / rdf:nodeID.
    """
    if root.tag != f"{{{RDF_NS}}}RDF":
        raise GleanError(f"not an RDF/XML subset document: root is {root.tag}")
    for desc in root:
        if desc.tag != f"{{{RDF_NS}}}Description":
            raise GleanError(f"unsupported RDF/XML node element: {desc.tag}")
        about = desc.get(f"{{{RDF_NS}}}about")
        node_id = desc.get(f"{{{RDF_NS}}}nodeID")
        if about is not None:
            subject: Subject = IRI(about)
        elif node_id is not None:
            subject = BlankNode(node_id)
        else:
            subject = fresh_blank()
        for prop in desc:
            tag = prop.tag
            if not tag.startswith("{"):
                raise GleanError(f"property element {tag!r} has no namespace")
            ns, local = tag[1:].split("}", 1)
            predicate = IRI(ns + local)
            if len(prop) != 0:
                raise GleanError(f"unsupported nested content under property {local!r}")
            resource = prop.get(f"{{{RDF_NS}}}resource")
            obj_node = prop.get(f"{{{RDF_NS}}}nodeID")
            if resource is not None:
                obj: Object = IRI(resource)
            elif obj_node is not None:
                obj = BlankNode(obj_node)
            else:
                datatype = prop.get(f"{{{RDF_NS}}}datatype")
                lang = prop.get(XML_LANG)
                obj = Literal(prop.text or "", datatype, lang if datatype is None else None)
            yield Triple(subject, predicate, obj)


def parse_rdfxml(data: bytes) -> TripleSet:
    """Independent reader for round-trip checks and gleaned fragments."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise GleanError(f"malformed RDF/XML: {exc}") from None
    counter = itertools.count()
    return TripleSet(triples_from_rdfxml(root, lambda: BlankNode(f"genid{next(counter)}")))
