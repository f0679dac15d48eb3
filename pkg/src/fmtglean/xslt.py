"""A small XSLT interpreter covering the transform dialect this package
executes: xsl:stylesheet, xsl:output, xsl:template with a match pattern,
xsl:value-of, xsl:apply-templates, and literal result elements.  Every
other construct raises UnsupportedXsltError naming what was found, so a
stylesheet relying on wider XSLT fails loudly instead of half-working.

Match patterns are slash-separated qualified names, optionally rooted
(``/a/b`` anchors at the document element, ``b`` matches any element
named b).  Select expressions are ``.`` or a relative child path.  The
built-in rule for unmatched elements recurses into element children and
copies no text; transforms must pull values out explicitly.
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Union

from .errors import UnsupportedXsltError
from .rdf import RDF_NS, BlankNode, TripleSet, triples_from_rdfxml

XSL_NS = "http://www.w3.org/1999/XSL/Transform"


@dataclass(frozen=True)
class LiteralText:
    text: str


@dataclass(frozen=True)
class ValueOf:
    steps: tuple[str, ...]  # empty means "."


@dataclass(frozen=True)
class ApplyTemplates:
    steps: tuple[str, ...]  # empty means all element children


@dataclass(frozen=True)
class LiteralElement:
    tag: str
    attrs: tuple[tuple[str, str], ...]
    body: tuple = ()


Node = Union[LiteralText, ValueOf, ApplyTemplates, LiteralElement]


@dataclass(frozen=True)
class Template:
    steps: tuple[str, ...]
    absolute: bool
    body: tuple


@dataclass
class Stylesheet:
    templates: list[Template] = field(default_factory=list)
    output: dict[str, str] | None = None


def _parse_with_nsmaps(data: bytes) -> tuple[ET.Element, dict[int, dict[str, str]]]:
    """Parse while recording the in-scope prefix map of every element;
    select and match attributes need it to resolve their prefixes."""
    ns_stack: list[dict[str, str]] = [{}]
    pending: list[tuple[str, str]] = []
    nsmaps: dict[int, dict[str, str]] = {}
    root = None
    try:
        for event, obj in ET.iterparse(io.BytesIO(data), ("start", "end", "start-ns")):
            if event == "start-ns":
                pending.append(obj)
            elif event == "start":
                scope = dict(ns_stack[-1])
                scope.update(pending)
                pending.clear()
                ns_stack.append(scope)
                nsmaps[id(obj)] = scope
                if root is None:
                    root = obj
            else:
                ns_stack.pop()
    except ET.ParseError as exc:
        raise UnsupportedXsltError(f"malformed stylesheet: {exc}") from None
    if root is None:
        raise UnsupportedXsltError("empty stylesheet document")
    return root, nsmaps


def _construct_name(tag: str) -> str:
    if tag.startswith(f"{{{XSL_NS}}}"):
        return "xsl:" + tag[len(XSL_NS) + 2:]
    return tag


def _resolve_step(step: str, nsmap: dict[str, str], what: str) -> str:
    step = step.strip()
    if not step or any(c in step for c in "@*[]()| "):
        raise UnsupportedXsltError(f"unsupported {what} step: {step!r}")
    if ":" in step:
        prefix, local = step.split(":", 1)
        uri = nsmap.get(prefix)
        if uri is None:
            raise UnsupportedXsltError(f"undeclared namespace prefix in {what}: {prefix!r}")
        return f"{{{uri}}}{local}"
    default = nsmap.get("")
    # unprefixed pattern steps match elements in the default namespace if
    # one is declared, otherwise elements with no namespace
    return f"{{{default}}}{step}" if default else step


def _parse_steps(path: str, nsmap: dict[str, str], what: str) -> tuple[tuple[str, ...], bool]:
    absolute = path.startswith("/")
    body = path[1:] if absolute else path
    if not body:
        raise UnsupportedXsltError(f"unsupported {what}: {path!r}")
    return tuple(_resolve_step(s, nsmap, what) for s in body.split("/")), absolute


def _parse_body(elem: ET.Element, nsmaps) -> tuple:
    out: list[Node] = []
    if elem.text and elem.text.strip():
        out.append(LiteralText(elem.text))
    for child in elem:
        out.append(_parse_instruction(child, nsmaps))
        if child.tail and child.tail.strip():
            out.append(LiteralText(child.tail))
    return tuple(out)


def _parse_instruction(elem: ET.Element, nsmaps) -> Node:
    nsmap = nsmaps[id(elem)]
    tag = elem.tag
    if tag.startswith(f"{{{XSL_NS}}}"):
        local = tag[len(XSL_NS) + 2:]
        if local == "value-of":
            sel = elem.get("select")
            if sel is None:
                raise UnsupportedXsltError("xsl:value-of without a select attribute")
            sel = sel.strip()
            if sel == ".":
                return ValueOf(())
            steps, absolute = _parse_steps(sel, nsmap, "select expression")
            if absolute:
                raise UnsupportedXsltError(f"unsupported select expression: {sel!r}")
            return ValueOf(steps)
        if local == "apply-templates":
            sel = elem.get("select")
            if sel is None:
                return ApplyTemplates(())
            steps, absolute = _parse_steps(sel.strip(), nsmap, "select expression")
            if absolute:
                raise UnsupportedXsltError(f"unsupported select expression: {sel!r}")
            return ApplyTemplates(steps)
        raise UnsupportedXsltError(f"unsupported stylesheet construct: xsl:{local}")
    attrs = []
    for name, value in elem.attrib.items():
        if "{" in value or "}" in value:
            raise UnsupportedXsltError(
                f"attribute value templates are not supported: {name}={value!r}")
        attrs.append((name, value))
    return LiteralElement(tag, tuple(attrs), _parse_body(elem, nsmaps))


def load_transform(data: bytes) -> Stylesheet:
    """Parse stylesheet bytes, rejecting anything outside the dialect."""
    root, nsmaps = _parse_with_nsmaps(data)
    if root.tag != f"{{{XSL_NS}}}stylesheet":
        raise UnsupportedXsltError(
            f"unsupported stylesheet construct: {_construct_name(root.tag)}")
    sheet = Stylesheet()
    for child in root:
        if child.tag == f"{{{XSL_NS}}}output":
            sheet.output = dict(child.attrib)
            continue
        if child.tag != f"{{{XSL_NS}}}template":
            raise UnsupportedXsltError(
                f"unsupported stylesheet construct: {_construct_name(child.tag)}")
        match = child.get("match")
        if match is None:
            raise UnsupportedXsltError("xsl:template without a match attribute")
        steps, absolute = _parse_steps(match.strip(), nsmaps[id(child)], "match pattern")
        sheet.templates.append(Template(steps, absolute, _parse_body(child, nsmaps)))
    return sheet


# ---------------------------------------------------------------------------
# evaluation


class _Evaluator:
    def __init__(self, sheet: Stylesheet, doc_root: ET.Element):
        self.sheet = sheet
        self.doc_root = doc_root
        self.parents: dict[int, ET.Element] = {}
        for parent in doc_root.iter():
            for child in parent:
                self.parents[id(child)] = parent

    def matches(self, elem: ET.Element, template: Template) -> bool:
        node = elem
        for step in reversed(template.steps):
            if node is None or node.tag != step:
                return False
            node = self.parents.get(id(node))
        return node is None if template.absolute else True

    def select(self, ctx: ET.Element, steps: tuple[str, ...]) -> list[ET.Element]:
        nodes = [ctx]
        for step in steps:
            nodes = [c for n in nodes for c in n if c.tag == step]
            if not nodes:
                break
        return nodes

    def apply(self, elem: ET.Element) -> list:
        for template in self.sheet.templates:
            if self.matches(elem, template):
                return self.eval_body(template.body, elem)
        # built-in rule: descend into element children, copy no text
        out = []
        for child in elem:
            out.extend(self.apply(child))
        return out

    def eval_body(self, body: tuple, ctx: ET.Element) -> list:
        out: list = []
        for node in body:
            if isinstance(node, LiteralText):
                out.append(node.text)
            elif isinstance(node, ValueOf):
                target = ctx if not node.steps else \
                    next(iter(self.select(ctx, node.steps)), None)
                if target is not None:
                    out.append("".join(target.itertext()))
            elif isinstance(node, ApplyTemplates):
                targets = list(ctx) if not node.steps else self.select(ctx, node.steps)
                for t in targets:
                    out.extend(self.apply(t))
            else:
                el = ET.Element(node.tag, dict(node.attrs))
                last = None
                for item in self.eval_body(node.body, ctx):
                    if isinstance(item, str):
                        if last is None:
                            el.text = (el.text or "") + item
                        else:
                            last.tail = (last.tail or "") + item
                    else:
                        el.append(item)
                        last = item
                out.append(el)
        return out


def apply_transform(document: ET.Element, sheet: Stylesheet,
                    fresh_blank=None) -> TripleSet:
    """Run the stylesheet against a parsed document and read the result
    as RDF.  Each result fragment must be an rdf:RDF wrapper or a bare
    rdf:Description; anything else is not an RDF/XML result."""
    if fresh_blank is None:
        counter = iter(range(1 << 62))
        fresh_blank = lambda: BlankNode(f"genid{next(counter)}")
    result = _Evaluator(sheet, document).apply(document)
    triples = TripleSet()
    for item in result:
        if isinstance(item, str):
            if item.strip():
                raise UnsupportedXsltError(
                    f"transform produced stray text instead of RDF/XML: {item.strip()[:40]!r}")
            continue
        if item.tag == f"{{{RDF_NS}}}Description":
            wrapper = ET.Element(f"{{{RDF_NS}}}RDF")
            wrapper.append(item)
            item = wrapper
        for triple in triples_from_rdfxml(item, fresh_blank):
            triples.add(triple)
    return triples
