"""Restricted stylesheet engine: loading, matching, instantiation."""

import xml.etree.ElementTree as ET

import pytest

from fmtglean.errors import GleanError, UnsupportedXsltError
from fmtglean.model import load_schema, resolve
from fmtglean.parser import parse_stream
from fmtglean.rdf import IRI, BlankNode, Literal, Triple, TripleSet
from fmtglean.xmlout import emit_xml
from fmtglean.xslt import apply_transform, load_transform
from tests.conftest import (DC, RDF, TABLE_CLASS, EXPECTED_AUTHOR,
                            EXPECTED_DATE, GOLDEN_SCHEMA, GOLDEN_DATA,
                            GOLDEN_TRANSFORM, brute_force_isomorphic)

XSLT_NS = "http://www.w3.org/1999/XSL/Transform"


def make_sheet(body: str, extra_ns: str = ""):
    return load_transform((
        f'<?xml version="1.0"?>\n'
        f'<xsl:stylesheet version="1.0" xmlns:xsl="{XSLT_NS}"\n'
        f'  xmlns:rdf="{RDF}" xmlns:dc="{DC}" xmlns:t="Dataset" {extra_ns}>\n'
        f"{body}\n"
        f"</xsl:stylesheet>"
    ).encode())


@pytest.fixture(scope="module")
def golden_doc():
    model = resolve(load_schema(GOLDEN_SCHEMA.read_bytes()))
    return ET.fromstring(emit_xml(parse_stream(model, GOLDEN_DATA.read_bytes())))


class TestLoadTransform:
    def test_golden_fixture(self, golden_transform_bytes):
        sheet = load_transform(golden_transform_bytes)
        assert len(sheet.templates) == 1
        tpl = sheet.templates[0]
        assert tpl.absolute
        assert tpl.steps == ("{Dataset}table",)

    def test_empty_stylesheet(self):
        sheet = make_sheet("")
        assert sheet.templates == []

    def test_for_each_rejected(self):
        with pytest.raises(UnsupportedXsltError, match="for-each"):
            make_sheet('<xsl:template match="t:a">'
                       '<xsl:for-each select="t:b"/></xsl:template>')

    @pytest.mark.parametrize("construct", ["if", "choose", "call-template", "copy-of"])
    def test_other_constructs_rejected_by_name(self, construct):
        with pytest.raises(UnsupportedXsltError, match=construct):
            make_sheet(f'<xsl:template match="t:a"><{"xsl:" + construct}/></xsl:template>')

    def test_template_without_match(self):
        with pytest.raises(UnsupportedXsltError, match="match"):
            make_sheet('<xsl:template name="x"/>')

    def test_value_of_requires_select(self):
        with pytest.raises(UnsupportedXsltError, match="select"):
            make_sheet('<xsl:template match="t:a"><xsl:value-of/></xsl:template>')

    def test_undeclared_prefix_rejected(self):
        with pytest.raises(UnsupportedXsltError, match="undeclared namespace prefix"):
            make_sheet('<xsl:template match="nope:a"/>')

    def test_attribute_value_template_rejected(self):
        with pytest.raises(UnsupportedXsltError, match="[Aa]ttribute"):
            make_sheet('<xsl:template match="t:a">'
                       '<rdf:Description rdf:about="{t:x}"/></xsl:template>')

    def test_predicate_steps_rejected(self):
        with pytest.raises(UnsupportedXsltError):
            make_sheet('<xsl:template match="t:a[1]"/>')

    def test_non_stylesheet_root(self):
        with pytest.raises(UnsupportedXsltError):
            load_transform(b"<transform/>")

    def test_malformed_xml(self):
        with pytest.raises(UnsupportedXsltError, match="malformed"):
            load_transform(b"<xsl:stylesheet")

    def test_entity_declared_namespaces_resolve(self, golden_transform_bytes):
        # the fixture binds its prefixes through document-internal entities
        assert b"<!ENTITY" in golden_transform_bytes
        load_transform(golden_transform_bytes)


class TestApplyTransform:
    def test_golden_three_triples(self, golden_doc, golden_transform_bytes):
        sheet = load_transform(golden_transform_bytes)
        ts = apply_transform(golden_doc, sheet)
        assert len(ts) == 3
        subjects = {t.subject for t in ts}
        assert len(subjects) == 1
        assert isinstance(next(iter(subjects)), BlankNode)
        expected = TripleSet({
            Triple(BlankNode("n"), IRI(DC + "creator"), Literal(EXPECTED_AUTHOR)),
            Triple(BlankNode("n"), IRI(DC + "date"), Literal(EXPECTED_DATE)),
            Triple(BlankNode("n"), IRI(RDF + "type"), IRI(TABLE_CLASS)),
        })
        assert ts.isomorphic(expected)

    def test_no_match_empty(self, golden_transform_bytes):
        sheet = load_transform(golden_transform_bytes)
        doc = ET.fromstring('<other xmlns="Dataset"/>')
        assert len(apply_transform(doc, sheet)) == 0

    def test_empty_sheet_empty_result(self, golden_doc):
        assert len(apply_transform(golden_doc, make_sheet(""))) == 0

    def test_two_matching_subtrees(self):
        doc = ET.fromstring(
            '<pair xmlns:t="Dataset">'
            "<t:table><t:hdrblock><t:Author>A1</t:Author></t:hdrblock></t:table>"
            "<t:table><t:hdrblock><t:Author>A2</t:Author></t:hdrblock></t:table>"
            "</pair>")
        sheet = make_sheet(
            '<xsl:template match="t:table">'
            "<rdf:Description>"
            f'<rdf:type rdf:resource="{TABLE_CLASS}"/>'
            '<dc:creator><xsl:value-of select="t:hdrblock/t:Author"/></dc:creator>'
            "</rdf:Description></xsl:template>")
        ts = apply_transform(doc, sheet)
        assert len(ts) == 4
        assert len({t.subject for t in ts}) == 2
        expected = TripleSet()
        for i, name in enumerate(["A1", "A2"]):
            b = BlankNode(f"e{i}")
            expected.add(Triple(b, IRI(RDF + "type"), IRI(TABLE_CLASS)))
            expected.add(Triple(b, IRI(DC + "creator"), Literal(name)))
        assert brute_force_isomorphic(ts, expected)

    def test_absolute_match_only_at_root(self):
        # an absolute pattern must not fire on a nested element of the same name
        doc = ET.fromstring(
            '<t:table xmlns:t="Dataset"><t:table/></t:table>')
        sheet = make_sheet(
            '<xsl:template match="/t:table">'
            '<rdf:Description><dc:title>hit</dc:title></rdf:Description>'
            "</xsl:template>")
        ts = apply_transform(doc, sheet)
        assert len(ts) == 1

    def test_builtin_rule_copies_no_text(self):
        doc = ET.fromstring(
            '<r xmlns:t="Dataset">loose text<t:a>more</t:a></r>')
        sheet = make_sheet("")
        assert len(apply_transform(doc, sheet)) == 0

    def test_value_of_dot(self):
        doc = ET.fromstring('<t:v xmlns:t="Dataset">payload</t:v>')
        sheet = make_sheet(
            '<xsl:template match="/t:v">'
            '<rdf:Description><dc:title><xsl:value-of select="."/></dc:title>'
            "</rdf:Description></xsl:template>")
        ts = apply_transform(doc, sheet)
        assert Literal("payload") in {t.object for t in ts}

    def test_missing_select_path_gives_empty_string(self):
        doc = ET.fromstring('<t:v xmlns:t="Dataset"/>')
        sheet = make_sheet(
            '<xsl:template match="/t:v">'
            '<rdf:Description><dc:title><xsl:value-of select="t:none"/></dc:title>'
            "</rdf:Description></xsl:template>")
        ts = apply_transform(doc, sheet)
        assert {t.object for t in ts} == {Literal("")}

    def test_non_rdf_result_rejected(self, golden_doc):
        sheet = make_sheet(
            '<xsl:template match="/t:table"><dc:junk/></xsl:template>')
        with pytest.raises(GleanError, match="not an RDF/XML subset document"):
            apply_transform(golden_doc, sheet)

    def test_stray_text_result_rejected(self, golden_doc):
        sheet = make_sheet(
            '<xsl:template match="/t:table">bare words</xsl:template>')
        with pytest.raises(UnsupportedXsltError, match="stray text"):
            apply_transform(golden_doc, sheet)

    def test_rdf_rdf_wrapper_and_bare_description_equivalent(self, golden_doc):
        bare = make_sheet(
            '<xsl:template match="/t:table">'
            '<rdf:Description><dc:title>x</dc:title></rdf:Description>'
            "</xsl:template>")
        wrapped = make_sheet(
            '<xsl:template match="/t:table"><rdf:RDF>'
            '<rdf:Description><dc:title>x</dc:title></rdf:Description>'
            "</rdf:RDF></xsl:template>")
        a = apply_transform(golden_doc, bare)
        b = apply_transform(golden_doc, wrapped)
        assert a.isomorphic(b) and len(a) == 1

    def test_explicit_apply_templates(self):
        doc = ET.fromstring(
            '<t:root xmlns:t="Dataset">'
            "<t:leaf>L1</t:leaf><t:leaf>L2</t:leaf></t:root>")
        sheet = make_sheet(
            '<xsl:template match="/t:root"><rdf:RDF>'
            '<xsl:apply-templates select="t:leaf"/>'
            "</rdf:RDF></xsl:template>"
            '<xsl:template match="t:leaf">'
            '<rdf:Description><dc:title><xsl:value-of select="."/></dc:title>'
            "</rdf:Description></xsl:template>")
        ts = apply_transform(doc, sheet)
        assert {t.object for t in ts} == {Literal("L1"), Literal("L2")}
        assert len({t.subject for t in ts}) == 2

    def test_fresh_blank_callback_used(self, golden_doc, golden_transform_bytes):
        labels = iter(["custom0", "custom1"])
        sheet = load_transform(golden_transform_bytes)
        ts = apply_transform(golden_doc, sheet,
                             fresh_blank=lambda: BlankNode(next(labels)))
        assert {t.subject for t in ts} == {BlankNode("custom0")}
