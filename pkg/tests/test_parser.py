"""Streaming parse: value readers, choice, occurrence bounds, events."""

import io
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmtglean.errors import EvalError, ParseError
from fmtglean.events import END, START, VALUE, WARNING
from fmtglean.model import DfdlProps, load_schema, resolve
from fmtglean.parser import (Scope, choose_branch, external_transform_hook,
                             parse_stream, read_binary_value, read_text_value)
from fmtglean.patterns import Pattern
from fmtglean.stream import ByteWindow
from tests.conftest import naive_split_table, table_bytes
from tests.test_model import annotated, wrap


def win_of(data: bytes, size: int = 4096) -> ByteWindow:
    return ByteWindow(io.BytesIO(data), size)


def model_of(body: str) -> "ResolvedModel":
    return resolve(load_schema(wrap(body)))


def events_of(model, data: bytes, **kw):
    return list(parse_stream(model, data, **kw))


def check_balanced(events):
    stack = []
    for ev in events:
        if ev.kind == START:
            stack.append(ev.name)
        elif ev.kind == END:
            assert stack and stack[-1] == ev.name, f"unbalanced at {ev.name}"
            stack.pop()
    assert stack == []


class TestReadTextValue:
    def test_ignore_then_terminator(self):
        props = DfdlProps(ignore=Pattern("regexp", r"Creator:\s"),
                          terminator=Pattern("regexp", r"\r\n|[\r\n]"))
        win = win_of(b"Creator: NCSA\nDate: ...")
        value, start, end = read_text_value(props, win, Scope(), "string")
        assert value == "NCSA"
        assert (start, end) == (0, 14)
        assert win.pos == 14

    def test_separator_consumed_with_value(self):
        props = DfdlProps(separator=Pattern("string", ","))
        value, start, end = read_text_value(props, win_of(b"0,1,2"), Scope(), "int")
        assert value == 0
        assert (start, end) == (0, 2)

    def test_delimiter_at_offset_zero_gives_empty_token(self):
        props = DfdlProps(terminator=Pattern("string", ";"))
        value, start, end = read_text_value(props, win_of(b";rest"), Scope(), "string")
        assert value == ""
        assert (start, end) == (0, 1)

    def test_leftmost_alternative_separator(self):
        # "A|AB" on "AB": the consumed separator is "A"
        props = DfdlProps(separator=Pattern("regexp", "A|AB"))
        win = win_of(b"xAB")
        value, _, end = read_text_value(props, win, Scope(), "string")
        assert value == "x"
        assert end == 2
        assert win.rest_of_window() == b"B"

    def test_last_value_delimited_by_end_of_input(self):
        props = DfdlProps(separator=Pattern("string", ","))
        win = win_of(b"42")
        value, _, end = read_text_value(props, win, Scope(), "int")
        assert value == 42 and end == 2

    def test_non_numeric_token(self):
        props = DfdlProps(separator=Pattern("string", ","))
        with pytest.raises(ParseError, match="cannot convert"):
            read_text_value(props, win_of(b"abc,"), Scope(), "int")

    def test_whitespace_not_trimmed(self):
        props = DfdlProps(separator=Pattern("string", ","))
        with pytest.raises(ParseError, match="cannot convert"):
            read_text_value(props, win_of(b" 5,"), Scope(), "int")

    def test_int_overflow(self):
        props = DfdlProps(terminator=Pattern("string", ";"))
        with pytest.raises(ParseError, match="out of range"):
            read_text_value(props, win_of(b"2147483648;"), Scope(), "int")

    def test_declared_base(self):
        props = DfdlProps(terminator=Pattern("string", ";"), base=16)
        value, _, _ = read_text_value(props, win_of(b"ff;"), Scope(), "int")
        assert value == 255

    def test_length_expression(self):
        from fmtglean.exprs import parse_expression
        props = DfdlProps(length_expr=parse_expression("4"))
        value, _, end = read_text_value(props, win_of(b"abcdef"), Scope(), "string")
        assert value == "abcd" and end == 4

    def test_empty_input_for_required_value(self):
        props = DfdlProps(separator=Pattern("string", ","))
        with pytest.raises(ParseError, match="unexpected end of input"):
            read_text_value(props, win_of(b""), Scope(), "string")


class TestReadBinaryValue:
    def test_big_endian_int32(self):
        props = DfdlProps(rep_type="binary")
        value, start, end = read_binary_value(props, win_of(b"\x00\x00\x00\x2a"),
                                              Scope(), "int")
        assert (value, start, end) == (42, 0, 4)

    def test_little_endian_int32(self):
        props = DfdlProps(rep_type="binary", byte_order="little-endian")
        value, _, _ = read_binary_value(props, win_of(b"\x2a\x00\x00\x00"),
                                        Scope(), "int")
        assert value == 42

    def test_big_endian_float32(self):
        props = DfdlProps(rep_type="binary")
        value, _, _ = read_binary_value(props, win_of(b"\x3f\x80\x00\x00"),
                                        Scope(), "float")
        assert value == 1.0

    def test_twos_complement(self):
        props = DfdlProps(rep_type="binary")
        value, _, _ = read_binary_value(props, win_of(b"\xff\xff\xff\xff"),
                                        Scope(), "int")
        assert value == -1

    def test_eof_mid_value(self):
        props = DfdlProps(rep_type="binary")
        with pytest.raises(ParseError, match="unexpected end of stream"):
            read_binary_value(props, win_of(b"\x00\x00"), Scope(), "int")


class TestExternalTransformHook:
    def test_identity(self):
        assert external_transform_hook("identity", b"abc",
                                       {"identity": lambda b: b}) == b"abc"

    def test_unregistered_named(self):
        with pytest.raises(ParseError, match="gzip"):
            external_transform_hook("gzip", b"", {})

    def test_reversing_hook(self):
        hooks = {"rev": lambda b: b[::-1]}
        assert external_transform_hook("rev", b"abc", hooks) == b"cba"


CHOICE_BY_CONDITION = (
    '<xs:element name="t" type="C"/>'
    '<xs:complexType name="C"><xs:choice>'
    '<xs:element name="a" type="xs:string">'
    + annotated('<dfdl:condition>0</dfdl:condition>'
                '<dfdl:terminator kind="string">;</dfdl:terminator>')
    + "</xs:element>"
    '<xs:element name="b" type="xs:string">'
    + annotated('<dfdl:condition>1</dfdl:condition>'
                '<dfdl:terminator kind="string">;</dfdl:terminator>')
    + "</xs:element>"
    "</xs:choice></xs:complexType>"
)

CHOICE_SPECULATIVE = (
    '<xs:element name="t" type="C"/>'
    '<xs:complexType name="C"><xs:choice>'
    '<xs:element name="n" type="xs:int">'
    + annotated('<dfdl:terminator kind="string">;</dfdl:terminator>')
    + "</xs:element>"
    '<xs:element name="s" type="xs:string">'
    + annotated('<dfdl:terminator kind="string">;</dfdl:terminator>')
    + "</xs:element>"
    "</xs:choice></xs:complexType>"
)


class TestChooseBranch:
    def test_first_true_condition_wins(self):
        model = model_of(CHOICE_BY_CONDITION)
        choice = model.types["C"]
        assert choose_branch(model, choice, win_of(b"x;"), Scope()) == 1

    def test_speculative_fallback(self):
        model = model_of(CHOICE_SPECULATIVE)
        choice = model.types["C"]
        win = win_of(b"x;")
        assert choose_branch(model, choice, win, Scope()) == 1
        # speculation must not consume
        assert win.pos == 0

    def test_speculative_first_success(self):
        model = model_of(CHOICE_SPECULATIVE)
        assert choose_branch(model, model.types["C"], win_of(b"42;"), Scope()) == 0

    def test_no_branch_matches(self):
        body = ('<xs:element name="t" type="C"/>'
                '<xs:complexType name="C"><xs:choice>'
                '<xs:element name="n" type="xs:int">'
                + annotated('<dfdl:terminator kind="string">;</dfdl:terminator>')
                + "</xs:element>"
                '<xs:element name="m" type="xs:int">'
                + annotated('<dfdl:terminator kind="string">!</dfdl:terminator>')
                + "</xs:element>"
                "</xs:choice></xs:complexType>")
        model = model_of(body)
        with pytest.raises(ParseError, match="no branch matches"):
            choose_branch(model, model.types["C"], win_of(b"abc;"), Scope())

    def test_parse_stream_integration(self):
        model = model_of(CHOICE_SPECULATIVE)
        events = events_of(model, b"x;")
        values = [ev for ev in events if ev.kind == VALUE]
        assert [(ev.name, ev.value) for ev in values] == [("s", "x")]


SIMPLE_TABLE_BODY_10 = None  # golden model comes from the fixture instead


class TestParseStreamGolden:
    def test_fixture_events(self, golden_model, golden_data):
        events = events_of(golden_model, golden_data)
        check_balanced(events)
        values = [ev for ev in events if ev.kind == VALUE]
        assert values[0].name == "Author" and values[0].value == "NCSA"
        assert values[1].name == "CreationDate"
        assert values[1].value == "Mon Feb 23 15:20:47 CST 2009"
        items = [ev.value for ev in values[2:]]
        assert len(items) == 100
        assert items[:10] == list(range(10))
        blocks = [ev for ev in events if ev.kind == START and ev.name == "datablock"]
        assert len(blocks) == 10
        assert all(isinstance(v, int) for v in items)

    def test_namespace_on_events(self, golden_model, golden_data):
        events = events_of(golden_model, golden_data)
        assert events[0].kind == START and events[0].name == "table"
        assert events[0].namespace == "Dataset"

    def test_empty_input(self, golden_model):
        with pytest.raises(ParseError, match="occurrence count below minimum"):
            events_of(golden_model, b"")

    def test_determinism(self, golden_model, golden_data):
        a = events_of(golden_model, golden_data)
        b = events_of(golden_model, golden_data)
        assert a == b

    def test_sibling_spans_monotonic(self, golden_model, golden_data):
        values = [ev for ev in events_of(golden_model, golden_data)
                  if ev.kind == VALUE]
        for prev, cur in zip(values, values[1:]):
            assert prev.end <= cur.start
            assert cur.start < cur.end


class TestTrailingBytes:
    def test_error_policy(self, golden_model, golden_data):
        with pytest.raises(ParseError, match="trailing bytes"):
            events_of(golden_model, golden_data + b"garbage")

    def test_allow_policy_warns(self, golden_model, golden_data):
        events = events_of(golden_model, golden_data + b"garbage",
                           trailing="allow")
        warnings = [ev for ev in events if ev.kind == WARNING]
        assert len(warnings) == 1
        assert warnings[0].name == "trailing-bytes"
        assert warnings[0].value == len(b"garbage")

    def test_unknown_policy_rejected(self, golden_model):
        with pytest.raises(ValueError):
            events_of(golden_model, b"", trailing="maybe")


class TestWindowLimit:
    def test_value_longer_than_window(self, golden_model):
        long_author = b"Creator: " + b"x" * 5000 + b"\n"
        data = long_author + b"Date: d\n" + b"0,1,2,3,4,5,6,7,8,9\n"
        with pytest.raises(ParseError, match="delimiter not found within window"):
            events_of(golden_model, data, window_bytes=256)


HIDDEN_LENGTH_BODY = (
    '<xs:element name="t" type="P"/>'
    '<xs:complexType name="P"><xs:sequence>'
    '<xs:element name="len" type="xs:int">'
    + annotated('<dfdl:hidden>true</dfdl:hidden>'
                '<dfdl:terminator kind="string">;</dfdl:terminator>')
    + "</xs:element>"
    '<xs:element name="payload" type="xs:string">'
    + annotated("<dfdl:length>len</dfdl:length>")
    + "</xs:element>"
    "</xs:sequence></xs:complexType>"
)


class TestHiddenElements:
    def test_hidden_value_referenced_by_length(self):
        model = model_of(HIDDEN_LENGTH_BODY)
        events = events_of(model, b"5;abcde")
        check_balanced(events)
        payload = [ev for ev in events if ev.kind == VALUE and ev.name == "payload"]
        assert payload[0].value == "abcde"
        hidden = [ev for ev in events if ev.hidden]
        assert {ev.name for ev in hidden} == {"len"}
        assert not payload[0].hidden

    def test_unresolved_reference_in_length(self):
        model = model_of(HIDDEN_LENGTH_BODY.replace(">len<", ">missing<"))
        with pytest.raises(EvalError, match="missing"):
            events_of(model, b"5;abcde")


class TestOccurrenceBounds:
    def test_partial_trailing_row_errors(self, golden_model, golden_data):
        # chopping the final row leaves fewer than 10 items before EOF
        truncated = golden_data[:-6]
        with pytest.raises(ParseError):
            events_of(golden_model, truncated)

    def test_min_occurs_zero_absent(self):
        body = ('<xs:element name="t" type="P"/>'
                '<xs:complexType name="P"><xs:sequence>'
                '<xs:element name="opt" type="xs:int" minOccurs="0">'
                + annotated('<dfdl:terminator kind="string">;</dfdl:terminator>')
                + "</xs:element>"
                '<xs:element name="word" type="xs:string">'
                + annotated('<dfdl:terminator kind="string">!</dfdl:terminator>')
                + "</xs:element>"
                "</xs:sequence></xs:complexType>")
        events = events_of(model_of(body), b"hi!")
        values = [(ev.name, ev.value) for ev in events if ev.kind == VALUE]
        assert values == [("word", "hi")]


# ---------------------------------------------------------------------------
# Oracle equivalence on randomized tables

from fmtglean.bench import table_schema_text


def parse_items(data: bytes, cols: int) -> list[int]:
    model = resolve(load_schema(table_schema_text(cols).encode()))
    return [ev.value for ev in parse_stream(model, data)
            if ev.kind == VALUE and ev.name == "item"]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=40), min_size=1, max_size=40),
       st.integers(min_value=1, max_value=8),
       st.randoms())
def test_random_tables_match_naive_splitter(row_seeds, cols, rng):
    values = [[rng.randrange(0, 2**31) for _ in range(cols)]
              for _ in row_seeds]
    data = table_bytes(values)
    expected = naive_split_table(data)
    assert expected == values  # oracle sanity
    flat = [v for row in expected for v in row]
    assert parse_items(data, cols) == flat


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=60), st.integers(min_value=1, max_value=10))
def test_event_balance_on_generated_tables(rows, cols):
    values = [[(r + c) % 1000 for c in range(cols)] for r in range(rows)]
    data = table_bytes(values)
    model = resolve(load_schema(table_schema_text(cols).encode()))
    events = list(parse_stream(model, data))
    check_balanced(events)
    starts = sum(1 for ev in events if ev.kind == START)
    ends = sum(1 for ev in events if ev.kind == END)
    # every element opens and closes: table, hdrblock, two header
    # fields, one block per row, one item per cell
    assert starts == ends == 4 + rows + rows * cols
