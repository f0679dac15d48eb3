"""Annotation expressions: integer arithmetic over previously parsed values.

Grammar (standard precedence, left associative):

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := INTEGER | PATH | "(" expr ")"
    PATH   := ("../")* NAME

NAME follows XML name rules, so "-" and "." are name characters: write
whitespace around a minus that follows a path reference ("../count - 1",
not "../count-1", which is a single name).  There is no unary minus.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import ExprError

Expr = Union["Lit", "Ref", "BinOp"]


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Ref:
    """A path reference: ``ups`` leading "../" steps, then a name."""

    ups: int
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: Expr
    right: Expr


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<int>[0-9]+)
  | (?P<path>(?:\.\./)*[A-Za-z_][A-Za-z0-9_.\-]*)
  | (?P<op>[-+*/()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "int":
            return Lit(int(text))
        if kind == "path":
            ups = 0
            rest = text
            while rest.startswith("../"):
                ups += 1
                rest = rest[3:]
            if rest == "":
                raise ExprError("expected a name after '../'", pos)
            return Ref(ups, rest)
        if kind == "op" and text == "(":
            node = self.expr()
            kind, text, pos = self.take()
            if text != ")":
                raise ExprError("expected ')'", pos)
            return node
        raise ExprError(f"expected a value, got {text!r}" if text else "unexpected end of expression", pos)


def parse_expression(text: str) -> Expr:
    """Parse an annotation expression, raising ExprError with a position."""
    p = _Parser(text)
    node = p.expr()
    kind, text_, pos = p.peek()
    if kind != "end":
        raise ExprError(f"trailing input {text_!r}", pos)
    return node


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expression(expr: Expr) -> str:
    """Render an Expr so that parse_expression(format_expression(e)) == e."""
    if isinstance(expr, Lit):
        return str(expr.value)
    if isinstance(expr, Ref):
        return "../" * expr.ups + expr.name
    prec = _PRECEDENCE[expr.op]
    left = format_expression(expr.left)
    right = format_expression(expr.right)
    if isinstance(expr.left, BinOp) and _PRECEDENCE[expr.left.op] < prec:
        left = f"({left})"
    if isinstance(expr.right, BinOp) and _PRECEDENCE[expr.right.op] <= prec:
        right = f"({right})"
    return f"{left} {expr.op} {right}"
