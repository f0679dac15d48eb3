"""Format model: load an annotated XML Schema subset and resolve it.

The supported schema subset is exactly what the engine can parse with:
xs:schema, xs:element, xs:complexType, xs:sequence, xs:choice,
xs:annotation, xs:appinfo (and xs:documentation, which is ignored), plus
dataFormat annotation bundles carrying the properties listed in DfdlProps.
Anything else is a hard error naming the construct, never a silent skip.

Annotation elements are recognized in the namespace "DFDL" and in any
namespace that the document binds to the prefix "dfdl", which tolerates
the loose namespace usage found in real descriptions.

``load_schema`` builds the declared structure (FormatSchema), ``resolve``
links every type reference, applies property inheritance and defaults,
and rejects unbounded recursion, producing the immutable ResolvedModel
the stream parser interprets.  ``schema_to_xml`` writes a FormatSchema
back out; loading that output again yields an equal FormatSchema.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from typing import Mapping, Union
from xml.parsers import expat

from .errors import SchemaError
from .exprs import Expr, format_expression, parse_expression
from .patterns import Pattern, compile_pattern, make_pattern

XSD_NS = "http://www.w3.org/2001/XMLSchema"
GRDDL_NS = "http://www.w3.org/2003/g/data-view#"
DFDL_LITERAL_NS = "DFDL"

# XML Schema built-in simple types the engine reads, with the bit width
# used for binary representation (None: width comes from a length
# expression).
SIMPLE_TYPES = {
    "string": None,
    "byte": 1,
    "int": 4,
    "long": 8,
    "float": 4,
    "double": 8,
}

UNBOUNDED = None  # max_occurs value meaning "no upper bound"


@dataclass(frozen=True)
class DfdlProps:
    """Annotation bundle attached to an element or a complex type.

    ``explicit`` records which fields the schema actually set; it is
    bookkeeping for inheritance and re-serialization, not part of the
    value (excluded from equality).
    """

    rep_type: str = "text"
    charset: str = "US-ASCII"
    separator: Pattern | None = None
    terminator: Pattern | None = None
    ignore: Pattern | None = None
    base: int = 10
    byte_order: str = "big-endian"
    length_expr: Expr | None = None
    hidden: bool = False
    condition_expr: Expr | None = None
    external_transform: str | None = None
    explicit: frozenset = field(default=frozenset(), compare=False, repr=False)


DEFAULT_PROPS = DfdlProps()

# Only representation-level fields flow from a complex type's dataFormat
# down to its children; delimiters and per-element logic never inherit.
_INHERITED_FIELDS = ("rep_type", "charset", "base", "byte_order")


@dataclass(frozen=True)
class ElementDecl:
    name: str
    type_ref: Union[str, "TypeDef"]  # named reference, builtin "xs:<name>", or inline type
    min_occurs: int = 1
    max_occurs: int | None = 1
    props: DfdlProps = DEFAULT_PROPS


@dataclass(frozen=True)
class TypeDef:
    kind: str  # complex-sequence | complex-choice | simple
    children: tuple[ElementDecl, ...] = ()
    base_simple: str | None = None
    props: DfdlProps = DEFAULT_PROPS


@dataclass(frozen=True)
class FormatSchema:
    target_namespace: str
    top_level_elements: tuple[ElementDecl, ...]
    named_types: Mapping[str, TypeDef]
    schema_level_transforms: tuple[str, ...] = ()


@dataclass(frozen=True)
class ResolvedElement:
    """An element whose type link and effective properties are final.

    ``type_name`` keys into ResolvedModel.types for complex content and
    is None for simple content (then ``base_simple`` is set).
    """

    name: str
    type_name: str | None
    base_simple: str | None
    min_occurs: int
    max_occurs: int | None
    props: DfdlProps

    @property
    def is_simple(self) -> bool:
        return self.base_simple is not None


@dataclass(frozen=True)
class ResolvedType:
    name: str
    kind: str  # sequence | choice
    children: tuple[ResolvedElement, ...]


@dataclass(frozen=True)
class ResolvedModel:
    target_namespace: str
    roots: tuple[ResolvedElement, ...]
    types: Mapping[str, ResolvedType]
    transforms: tuple[str, ...] = ()

    @property
    def root(self) -> ResolvedElement:
        if not self.roots:
            raise SchemaError("schema declares no top-level element")
        return self.roots[0]

    def type_of(self, element: ResolvedElement) -> ResolvedType:
        return self.types[element.type_name]


# ---------------------------------------------------------------------------
# Loading


class _Node:
    """Raw element node with source position and in-scope prefix map."""

    __slots__ = ("ns", "local", "attrs", "children", "text", "line", "column", "nsmap")

    def __init__(self, ns, local, attrs, line, column, nsmap):
        self.ns = ns
        self.local = local
        self.attrs = attrs  # key: plain name or "uri name" for prefixed attrs
        self.children = []
        self.text = []
        self.line = line
        self.column = column
        self.nsmap = nsmap

    def attr(self, name, ns=None):
        key = f"{ns} {name}" if ns else name
        return self.attrs.get(key)

    def whole_text(self) -> str:
        return "".join(self.text)

    def err(self, message) -> SchemaError:
        return SchemaError(message, line=self.line, column=self.column)


def _read_tree(data: bytes) -> _Node:
    parser = expat.ParserCreate(namespace_separator=" ")
    stack: list[_Node] = []
    root: list[_Node] = []
    ns_stack: list[dict[str, str]] = [{}]

    def start_ns(prefix, uri):
        ns_stack.append(dict(ns_stack[-1]))
        ns_stack[-1][prefix or ""] = uri or ""

    def end_ns(prefix):
        ns_stack.pop()

    def start(name, attrs):
        if " " in name:
            ns, local = name.split(" ", 1)
        else:
            ns, local = "", name
        node = _Node(ns, local, attrs, parser.CurrentLineNumber,
                     parser.CurrentColumnNumber + 1, dict(ns_stack[-1]))
        if stack:
            stack[-1].children.append(node)
        else:
            root.append(node)
        stack.append(node)

    def end(name):
        stack.pop()

    def chars(data):
        if stack:
            stack[-1].text.append(data)

    parser.StartNamespaceDeclHandler = start_ns
    parser.EndNamespaceDeclHandler = end_ns
    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise SchemaError(f"malformed XML: {expat.errors.messages[exc.code]}",
                          line=exc.lineno, column=exc.offset + 1) from None
    return root[0]


def _is_dfdl(node: _Node) -> bool:
    if node.ns == DFDL_LITERAL_NS:
        return True
    return node.nsmap.get("dfdl") == node.ns and node.ns != ""


def _reject_text(node: _Node):
    if node.whole_text().strip():
        raise node.err(f"unexpected text content in {node.local}")


class _SchemaReader:
    def __init__(self, root: _Node):
        self.root = root
        self.named_types: dict[str, TypeDef] = {}

    def read(self) -> FormatSchema:
        root = self.root
        if root.ns != XSD_NS or root.local != "schema":
            raise root.err(f"expected an XML Schema document, got {root.local!r}")
        target_ns = root.attr("targetNamespace") or ""
        transforms = tuple((root.attr("transformation", GRDDL_NS) or "").split())
        top: list[ElementDecl] = []
        for child in root.children:
            if child.ns != XSD_NS:
                raise child.err(f"unsupported schema construct: {child.local}")
            if child.local == "element":
                top.append(self.read_element(child))
            elif child.local == "complexType":
                name = child.attr("name")
                if not name:
                    raise child.err("top-level complexType needs a name")
                if name in self.named_types:
                    raise child.err(f"duplicate type name: {name}")
                self.named_types[name] = self.read_complex_type(child)
            elif child.local in ("annotation", "documentation"):
                continue
            else:
                raise child.err(f"unsupported schema construct: {child.local}")
        return FormatSchema(target_ns, tuple(top), dict(self.named_types), transforms)

    def read_element(self, node: _Node) -> ElementDecl:
        _reject_text(node)
        name = node.attr("name")
        if not name:
            raise node.err("element needs a name")
        min_occurs = self._occurs(node, "minOccurs", 1)
        max_attr = node.attr("maxOccurs")
        if max_attr == "unbounded":
            max_occurs = UNBOUNDED
        else:
            max_occurs = self._occurs(node, "maxOccurs", 1)
            if max_occurs < 1:
                raise node.err("maxOccurs must be at least 1")
            if min_occurs > max_occurs:
                raise node.err(f"minOccurs {min_occurs} exceeds maxOccurs {max_occurs}")
        if min_occurs < 0:
            raise node.err("minOccurs must not be negative")

        props = DEFAULT_PROPS
        inline: TypeDef | None = None
        for child in node.children:
            if child.ns != XSD_NS:
                raise child.err(f"unsupported schema construct: {child.local}")
            if child.local == "annotation":
                props = self.read_annotation(child, props)
            elif child.local == "complexType":
                if inline is not None:
                    raise child.err("element has more than one inline type")
                inline = self.read_complex_type(child)
            else:
                raise child.err(f"unsupported schema construct: {child.local}")

        type_attr = node.attr("type")
        if type_attr and inline is not None:
            raise node.err("element has both a type attribute and an inline type")
        if type_attr:
            type_ref = self._resolve_type_name(node, type_attr)
        elif inline is not None:
            type_ref = inline
        else:
            raise node.err(f"element {name!r} needs a type")
        return ElementDecl(name, type_ref, min_occurs, max_occurs, props)

    def _occurs(self, node: _Node, attr: str, default: int) -> int:
        raw = node.attr(attr)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise node.err(f"{attr} must be an integer, got {raw!r}") from None

    def _resolve_type_name(self, node: _Node, qname: str) -> str:
        """Map a type QName to a builtin key ("xs:int") or a named-type key."""
        if ":" in qname:
            prefix, local = qname.split(":", 1)
        else:
            prefix, local = "", qname
        uri = node.nsmap.get(prefix, "")
        if uri == XSD_NS:
            if local not in SIMPLE_TYPES:
                raise node.err(f"unsupported simple type: xs:{local}")
            return f"xs:{local}"
        return local

    def read_complex_type(self, node: _Node) -> TypeDef:
        _reject_text(node)
        props = DEFAULT_PROPS
        body = None
        for child in node.children:
            if child.ns != XSD_NS:
                raise child.err(f"unsupported schema construct: {child.local}")
            if child.local == "annotation":
                props = self.read_annotation(child, props)
            elif child.local in ("sequence", "choice"):
                if body is not None:
                    raise child.err("complexType has more than one content model")
                body = child
            else:
                raise child.err(f"unsupported schema construct: {child.local}")
        if body is None:
            raise node.err("complexType needs a sequence or choice")

        kind = "complex-sequence" if body.local == "sequence" else "complex-choice"
        children: list[ElementDecl] = []
        _reject_text(body)
        for child in body.children:
            if child.ns != XSD_NS:
                raise child.err(f"unsupported schema construct: {child.local}")
            if child.local == "annotation":
                props = self.read_annotation(child, props)
            elif child.local == "element":
                children.append(self.read_element(child))
            else:
                raise child.err(f"unsupported schema construct: {child.local}")
        if kind == "complex-choice" and len(children) < 2:
            raise body.err("choice needs at least 2 alternatives")
        if kind == "complex-sequence" and len(children) < 1:
            raise body.err("sequence needs at least 1 element")
        return TypeDef(kind, tuple(children), None, props)

    def read_annotation(self, node: _Node, props: DfdlProps) -> DfdlProps:
        for child in node.children:
            if child.ns == XSD_NS and child.local == "documentation":
                continue
            if child.ns == XSD_NS and child.local == "appinfo":
                for inner in child.children:
                    if _is_dfdl(inner) and inner.local == "dataFormat":
                        props = self.read_data_format(inner, props)
                    else:
                        raise inner.err(f"unsupported annotation content: {inner.local}")
            else:
                raise child.err(f"unsupported schema construct: {child.local}")
        return props

    def read_data_format(self, node: _Node, props: DfdlProps) -> DfdlProps:
        updates: dict = {}
        for child in node.children:
            if not _is_dfdl(child):
                raise child.err(f"unsupported annotation content: {child.local}")
            text = child.whole_text().strip()
            local = child.local
            try:
                if local == "repType":
                    updates["rep_type"] = self._enum(child, text, ("text", "binary"))
                elif local == "charset":
                    updates["charset"] = self._enum(child, text, ("US-ASCII", "UTF-8"))
                elif local in ("separator", "terminator", "ignore"):
                    updates[local] = make_pattern(text, child.attr("kind"))
                elif local == "base":
                    base = int(text)
                    if base not in (2, 8, 10, 16):
                        raise child.err(f"base must be 2, 8, 10 or 16, got {text}")
                    updates["base"] = base
                elif local == "byteOrder":
                    updates["byte_order"] = self._enum(child, text, ("big-endian", "little-endian"))
                elif local == "length":
                    updates["length_expr"] = parse_expression(text)
                elif local == "hidden":
                    updates["hidden"] = self._enum(child, text, ("true", "false")) == "true"
                elif local == "condition":
                    updates["condition_expr"] = parse_expression(text)
                elif local == "externalTransform":
                    updates["external_transform"] = text
                else:
                    raise child.err(f"unsupported annotation property: {local}")
            except SchemaError:
                raise
            except ValueError:
                raise child.err(f"invalid value for {local}: {text!r}") from None
        return replace(props, explicit=props.explicit | frozenset(updates), **updates)

    @staticmethod
    def _enum(node: _Node, text: str, allowed: tuple[str, ...]) -> str:
        if text not in allowed:
            raise node.err(f"{node.local} must be one of {', '.join(allowed)}; got {text!r}")
        return text


def load_schema(data: bytes) -> FormatSchema:
    """Read an annotated schema document into a FormatSchema."""
    return _SchemaReader(_read_tree(data)).read()


# ---------------------------------------------------------------------------
# Resolution


def _effective_child_props(child: DfdlProps, owner: DfdlProps) -> DfdlProps:
    """Push the owner type's representation-level settings onto a child
    that did not set its own."""
    updates = {}
    for f in _INHERITED_FIELDS:
        if f not in child.explicit and f in owner.explicit:
            updates[f] = getattr(owner, f)
    if not updates:
        return child
    return replace(child, explicit=child.explicit | frozenset(updates), **updates)


class _Resolver:
    def __init__(self, schema: FormatSchema):
        self.schema = schema
        self.types: dict[str, ResolvedType] = {}
        self.type_defs: dict[str, TypeDef] = dict(schema.named_types)
        self.done: set[str] = set()

    def run(self) -> ResolvedModel:
        self._hoist_inline_types()
        self._check_recursion()
        for name in list(self.type_defs):
            self._resolve_type(name)
        roots = tuple(self._resolve_element(e, DEFAULT_PROPS) for e in self.schema.top_level_elements)
        for element in roots:
            self._check_props(element)
        for rt in self.types.values():
            for element in rt.children:
                self._check_props(element)
        return ResolvedModel(self.schema.target_namespace, roots, dict(self.types),
                             self.schema.schema_level_transforms)

    def _hoist_inline_types(self):
        """Give every inline type a table entry under a synthetic name."""

        def hoist(decl: ElementDecl, context: str) -> ElementDecl:
            if not isinstance(decl.type_ref, TypeDef):
                return decl
            base = f"{context}${decl.name}"
            name = base
            n = 2
            while name in self.type_defs:
                name = f"{base}{n}"
                n += 1
            self.type_defs[name] = decl.type_ref
            walk_type(name)
            return replace(decl, type_ref=name)

        def walk_type(name: str):
            td = self.type_defs[name]
            new_children = tuple(hoist(c, name) for c in td.children)
            if new_children != td.children:
                self.type_defs[name] = replace(td, children=new_children)

        self.schema = replace(
            self.schema,
            top_level_elements=tuple(hoist(e, "@root") for e in self.schema.top_level_elements),
        )
        for name in list(self.type_defs):
            walk_type(name)

    def _check_recursion(self):
        """Reject containment cycles that can never terminate.

        Only edges with min_occurs >= 1 are mandatory; a cycle made
        harmless by an optional (min_occurs = 0) step is allowed.
        """
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {name: WHITE for name in self.type_defs}

        def visit(name: str, trail: list[str]):
            color[name] = GRAY
            for child in self.type_defs[name].children:
                ref = child.type_ref
                if not isinstance(ref, str) or ref.startswith("xs:") or child.min_occurs == 0:
                    continue
                if ref not in self.type_defs:
                    continue  # unresolved refs are reported during linking
                if color[ref] == GRAY:
                    cycle = " -> ".join(trail[trail.index(ref):] + [ref]) if ref in trail else ref
                    raise SchemaError(f"recursion without bound through type {ref!r} ({cycle})")
                if color[ref] == WHITE:
                    visit(ref, trail + [ref])
            color[name] = BLACK

        for name in self.type_defs:
            if color[name] == WHITE:
                visit(name, [name])

    def _resolve_type(self, name: str):
        if name in self.done:
            return
        self.done.add(name)
        td = self.type_defs[name]
        kind = "sequence" if td.kind == "complex-sequence" else "choice"
        children = tuple(self._resolve_element(c, td.props) for c in td.children)
        self.types[name] = ResolvedType(name, kind, children)

    def _resolve_element(self, decl: ElementDecl, owner_props: DfdlProps) -> ResolvedElement:
        props = _effective_child_props(decl.props, owner_props)
        ref = decl.type_ref
        assert isinstance(ref, str)  # inline types were hoisted
        if ref.startswith("xs:"):
            return ResolvedElement(decl.name, None, ref[3:], decl.min_occurs, decl.max_occurs, props)
        if ref not in self.type_defs:
            raise SchemaError(f"unresolved type reference: {ref}")
        self._resolve_type(ref)
        return ResolvedElement(decl.name, ref, None, decl.min_occurs, decl.max_occurs, props)

    def _check_props(self, element: ResolvedElement):
        """Binary values need a width; also force delimiter patterns to
        compile now so bad patterns fail at resolve time, not mid-parse."""
        p = element.props
        for pattern in (p.separator, p.terminator, p.ignore):
            if pattern is not None:
                compile_pattern(pattern)
        if element.is_simple and p.rep_type == "binary" \
                and SIMPLE_TYPES[element.base_simple] is None and p.length_expr is None:
            raise SchemaError(
                f"binary element {element.name!r} of type {element.base_simple} "
                "needs a length expression")


def resolve(schema: FormatSchema) -> ResolvedModel:
    """Link every type reference and finalize effective properties."""
    return _Resolver(schema).run()


# ---------------------------------------------------------------------------
# Re-serialization


def schema_to_xml(schema: FormatSchema) -> bytes:
    """Write a FormatSchema back to schema XML.

    Only explicitly set annotation properties are written, so loading the
    output produces a FormatSchema equal to the input.
    """
    root = ET.Element("xs:schema", {
        "xmlns:xs": XSD_NS,
        "xmlns:dfdl": DFDL_LITERAL_NS,
    })
    if schema.target_namespace:
        root.set("targetNamespace", schema.target_namespace)
    if schema.schema_level_transforms:
        root.set("xmlns:grddl", GRDDL_NS)
        root.set("grddl:transformation", " ".join(schema.schema_level_transforms))
    for decl in schema.top_level_elements:
        root.append(_element_to_xml(decl))
    for name, td in schema.named_types.items():
        node = _type_to_xml(td)
        node.set("name", name)
        root.append(node)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def _element_to_xml(decl: ElementDecl) -> ET.Element:
    node = ET.Element("xs:element", {"name": decl.name})
    if decl.min_occurs != 1:
        node.set("minOccurs", str(decl.min_occurs))
    if decl.max_occurs is UNBOUNDED:
        node.set("maxOccurs", "unbounded")
    elif decl.max_occurs != 1:
        node.set("maxOccurs", str(decl.max_occurs))
    ann = _props_to_xml(decl.props)
    if ann is not None:
        node.append(ann)
    if isinstance(decl.type_ref, TypeDef):
        node.append(_type_to_xml(decl.type_ref))
    else:
        node.set("type", decl.type_ref)
    return node


def _type_to_xml(td: TypeDef) -> ET.Element:
    node = ET.Element("xs:complexType")
    body = ET.SubElement(node, "xs:sequence" if td.kind == "complex-sequence" else "xs:choice")
    ann = _props_to_xml(td.props)
    if ann is not None:
        body.append(ann)
    for child in td.children:
        body.append(_element_to_xml(child))
    return node


def _props_to_xml(props: DfdlProps) -> ET.Element | None:
    if not props.explicit:
        return None
    ann = ET.Element("xs:annotation")
    fmt = ET.SubElement(ET.SubElement(ann, "xs:appinfo"), "dfdl:dataFormat")

    def put(tag: str, text: str, **attrs):
        el = ET.SubElement(fmt, f"dfdl:{tag}", attrs)
        el.text = text

    if "rep_type" in props.explicit:
        put("repType", props.rep_type)
    if "charset" in props.explicit:
        put("charset", props.charset)
    for fieldname, tag in (("separator", "separator"), ("terminator", "terminator"), ("ignore", "ignore")):
        if fieldname in props.explicit:
            pattern = getattr(props, fieldname)
            put(tag, pattern.source, kind=pattern.kind)
    if "base" in props.explicit:
        put("base", str(props.base))
    if "byte_order" in props.explicit:
        put("byteOrder", props.byte_order)
    if "length_expr" in props.explicit:
        put("length", format_expression(props.length_expr))
    if "hidden" in props.explicit:
        put("hidden", "true" if props.hidden else "false")
    if "condition_expr" in props.explicit:
        put("condition", format_expression(props.condition_expr))
    if "external_transform" in props.explicit:
        put("externalTransform", props.external_transform)
    return ann
