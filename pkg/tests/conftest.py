"""Shared fixtures and independent reference implementations.

The reference helpers here are deliberately naive (string splitting,
exhaustive permutation search) so they cannot share bugs with the
engine code under test.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from itertools import permutations
from pathlib import Path

import pytest

import fmtglean
from fmtglean.rdf import BlankNode, Triple, TripleSet

FIXTURES = Path(fmtglean.__file__).parent / "fixtures"

GOLDEN_DATA = FIXTURES / "data" / "simple_table.txt"
GOLDEN_SCHEMA = FIXTURES / "schemas" / "simple_table.xsd"
FLAWED_SCHEMA = FIXTURES / "schemas" / "simple_table_flawed.xsd"
GOLDEN_TRANSFORM = FIXTURES / "transforms" / "simple_table.xsl"

EXPECTED_AUTHOR = "NCSA"
EXPECTED_DATE = "Mon Feb 23 15:20:47 CST 2009"
DC = "http://purl.org/dc/elements/1.1/"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
TABLE_CLASS = "http://ncsa.uiuc.edu/dataset#table"


@pytest.fixture(scope="session")
def golden_data() -> bytes:
    return GOLDEN_DATA.read_bytes()


@pytest.fixture(scope="session")
def golden_model():
    from fmtglean.model import load_schema, resolve

    return resolve(load_schema(GOLDEN_SCHEMA.read_bytes()))


@pytest.fixture(scope="session")
def golden_transform_bytes() -> bytes:
    return GOLDEN_TRANSFORM.read_bytes()


# ---------------------------------------------------------------------------
# Naive reference parser for generated tables


def naive_split_table(data: bytes) -> list[list[int]]:
    """Two header lines, then comma-separated integer rows.

    Pure str.split; shares no code with the streaming tokenizer.
    """
    lines = data.decode("ascii").split("\n")
    assert lines[0].startswith("Creator: ")
    assert lines[1].startswith("Date: ")
    rows = []
    for line in lines[2:]:
        if line == "":
            continue
        rows.append([int(field) for field in line.split(",")])
    return rows


def table_bytes(values: list[list[int]]) -> bytes:
    header = b"Creator: NCSA\nDate: Mon Feb 23 15:20:47 CST 2009\n"
    body = "".join(",".join(str(v) for v in row) + "\n" for row in values)
    return header + body.encode("ascii")


# ---------------------------------------------------------------------------
# Structural XML comparison (namespace-aware, prefix-insensitive)


def _stripped(text: str | None) -> str:
    return (text or "").strip()


def assert_xml_equal(a: ET.Element, b: ET.Element, path: str = "/") -> None:
    assert a.tag == b.tag, f"{path}: tag {a.tag!r} != {b.tag!r}"
    assert _stripped(a.text) == _stripped(b.text), f"{path}{a.tag}: text differs"
    # drop namespace-declaration pseudo-attributes; ET already resolves them
    attrs_a = {k: v for k, v in a.attrib.items() if not k.startswith("xmlns")}
    attrs_b = {k: v for k, v in b.attrib.items() if not k.startswith("xmlns")}
    assert attrs_a == attrs_b, f"{path}{a.tag}: attributes differ"
    ka, kb = list(a), list(b)
    assert len(ka) == len(kb), f"{path}{a.tag}: child count {len(ka)} != {len(kb)}"
    for i, (ca, cb) in enumerate(zip(ka, kb)):
        assert_xml_equal(ca, cb, f"{path}{a.tag}[{i}]/")


def xml_equal(a: ET.Element, b: ET.Element) -> bool:
    try:
        assert_xml_equal(a, b)
    except AssertionError:
        return False
    return True


# ---------------------------------------------------------------------------
# Brute-force RDF graph isomorphism (exhaustive bijection search)


def _relabel(triple: Triple, mapping: dict[str, str]) -> Triple:
    def term(t):
        if isinstance(t, BlankNode):
            return BlankNode(mapping[t.id])
        return t

    return Triple(term(triple.subject), triple.predicate, term(triple.object))


def brute_force_isomorphic(a: TripleSet, b: TripleSet) -> bool:
    """Try every blank-node bijection.  Only usable on small graphs."""
    ta, tb = set(a), set(b)
    blanks_a = sorted({t.id for tr in ta for t in (tr.subject, tr.object)
                       if isinstance(t, BlankNode)})
    blanks_b = sorted({t.id for tr in tb for t in (tr.subject, tr.object)
                       if isinstance(t, BlankNode)})
    if len(ta) != len(tb) or len(blanks_a) != len(blanks_b):
        return False
    if not blanks_a:
        return ta == tb
    assert len(blanks_a) <= 7, "graph too large for exhaustive search"
    for perm in permutations(blanks_b):
        mapping = dict(zip(blanks_a, perm))
        if {_relabel(t, mapping) for t in ta} == tb:
            return True
    return False
