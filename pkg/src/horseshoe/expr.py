"""Parser and evaluators for the custom-expression map language.

See docs/expression_grammar.md for the grammar. Expressions compile to
nested closures. One closure set evaluates on floats, the other on
intervals. Decimal literals are enclosed exactly in interval mode, so
``0.1`` means the real number one tenth, not its nearest double.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import interval as ia
from .errors import ExpressionError
from .interval import Interval

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)

FUNCTIONS = {"sin": 1, "cos": 1, "abs": 1, "min": 2, "max": 2, "clamp": 3}
CONSTANTS = {"pi"}


@dataclass(frozen=True)
class Node:
    op: str
    args: tuple = ()
    value: object = None


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = len(text) - len(text[pos:].lstrip())
            raise ExpressionError(f"unexpected character {text[col]!r}", col)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.toks = _tokenize(text)
        self.i = 0
        self.vars = {v: k for k, v in enumerate(variables)}

    def peek(self):
        return self.toks[self.i]

    def take(self, value: str | None = None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            got = tok[1] or "end of input"
            raise ExpressionError(f"expected {value!r}, got {got!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Node("add" if op == "+" else "sub", (node, self.term()))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op, pos = self.take()[1:]
            rhs = self.unary()
            if op == "*":
                node = Node("mul", (node, rhs))
            else:
                if not _is_constant(rhs):
                    raise ExpressionError("division is only allowed by a constant", pos)
                node = Node("div", (node, rhs))
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            inner = self.unary()
            return Node("neg", (inner,)) if tok[1] == "-" else inner
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("^", "**"):
            self.take()
            etok = self.take()
            if etok[0] != "num" or not re.fullmatch(r"\d+", etok[1]):
                raise ExpressionError("exponent must be a non-negative integer literal", etok[2])
            return Node("pow", (base,), int(etok[1]))
        return base

    def primary(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Node("num", (), text)
        if kind == "name":
            if text in FUNCTIONS:
                self.take("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                if len(args) != FUNCTIONS[text]:
                    raise ExpressionError(f"{text} takes {FUNCTIONS[text]} argument(s)", pos)
                if text == "clamp" and not (_is_constant(args[1]) and _is_constant(args[2])):
                    raise ExpressionError("clamp bounds must be constants", pos)
                return Node(text, tuple(args))
            if text in CONSTANTS:
                return Node("const", (), text)
            if text in self.vars:
                return Node("var", (), self.vars[text])
            raise ExpressionError(f"unknown name {text!r}", pos)
        if text == "(":
            node = self.expr()
            self.take(")")
            return node
        raise ExpressionError(f"unexpected {text or 'end of input'!r}", pos)


def _is_constant(n: Node) -> bool:
    if n.op in ("num", "const"):
        return True
    if n.op == "neg":
        return _is_constant(n.args[0])
    return False


def parse(text: str, variables: Sequence[str]) -> Node:
    """Parse ``text`` into an expression tree over the named variables."""
    return _Parser(text, variables).parse()


def _const_float(n: Node) -> float:
    if n.op == "num":
        return float(n.value)
    if n.op == "const":
        return math.pi
    return -_const_float(n.args[0])


def _const_interval(n: Node) -> Interval:
    if n.op == "num":
        return Interval.enclosing(Fraction(n.value))
    if n.op == "const":
        return Interval(ia.PI_LO, ia.PI_HI)
    return -_const_interval(n.args[0])


def compile_point(n: Node) -> Callable[[Sequence[float]], float]:
    op = n.op
    if op == "num":
        v = float(n.value)
        return lambda x: v
    if op == "const":
        return lambda x: math.pi
    if op == "var":
        k = n.value
        return lambda x: x[k]
    fs = [compile_point(a) for a in n.args]
    if op == "add":
        a, b = fs
        return lambda x: a(x) + b(x)
    if op == "sub":
        a, b = fs
        return lambda x: a(x) - b(x)
    if op == "mul":
        a, b = fs
        return lambda x: a(x) * b(x)
    if op == "div":
        a = fs[0]
        d = _const_float(n.args[1])
        return lambda x: a(x) / d
    if op == "neg":
        a = fs[0]
        return lambda x: -a(x)
    if op == "pow":
        a = fs[0]
        p = n.value
        return lambda x: a(x) ** p
    if op == "sin":
        a = fs[0]
        return lambda x: math.sin(a(x))
    if op == "cos":
        a = fs[0]
        return lambda x: math.cos(a(x))
    if op == "abs":
        a = fs[0]
        return lambda x: abs(a(x))
    if op == "min":
        a, b = fs
        return lambda x: min(a(x), b(x))
    if op == "max":
        a, b = fs
        return lambda x: max(a(x), b(x))
    if op == "clamp":
        a = fs[0]
        lo, hi = _const_float(n.args[1]), _const_float(n.args[2])
        return lambda x: max(lo, min(a(x), hi))
    raise ExpressionError(f"unknown node {op!r}")


def compile_interval(n: Node) -> Callable[[Sequence[Interval]], Interval]:
    op = n.op
    if op in ("num", "const") or (op == "neg" and _is_constant(n)):
        v = _const_interval(n)
        return lambda x: v
    if op == "var":
        k = n.value
        return lambda x: x[k]
    fs = [compile_interval(a) for a in n.args]
    if op == "add":
        a, b = fs
        return lambda x: a(x) + b(x)
    if op == "sub":
        a, b = fs
        return lambda x: a(x) - b(x)
    if op == "mul":
        a, b = fs
        if n.args[0] == n.args[1]:
            return lambda x: a(x) ** 2
        return lambda x: a(x) * b(x)
    if op == "div":
        a = fs[0]
        d = _const_interval(n.args[1])
        if d.is_point():
            dv = d.lo
            return lambda x: a(x) / dv
        # divisor known only as an enclosure: use the reciprocal's enclosure
        if d.lo <= 0.0 <= d.hi:
            raise ExpressionError("division by a constant enclosing zero")
        rlo, rhi = sorted((ia.div_down(1.0, d.hi), ia.div_up(1.0, d.lo)))
        r = Interval(rlo, rhi)
        return lambda x: a(x) * r
    if op == "neg":
        a = fs[0]
        return lambda x: -a(x)
    if op == "pow":
        a = fs[0]
        p = n.value
        return lambda x: a(x) ** p
    if op == "sin":
        a = fs[0]
        return lambda x: ia.sin(a(x))
    if op == "cos":
        a = fs[0]
        return lambda x: ia.cos(a(x))
    if op == "abs":
        a = fs[0]
        return lambda x: abs(a(x))
    if op == "min":
        a, b = fs
        return lambda x: ia.imin(a(x), b(x))
    if op == "max":
        a, b = fs
        return lambda x: ia.imax(a(x), b(x))
    if op == "clamp":
        a = fs[0]
        lo, hi = _const_interval(n.args[1]), _const_interval(n.args[2])
        if lo.hi > hi.lo:
            raise ExpressionError("clamp lower bound exceeds upper bound")

        # max(lo, min(s, hi)) is nondecreasing in s, lo and hi
        def _clamp(x):
            s = a(x)
            return Interval(max(lo.lo, min(s.lo, hi.lo)), max(lo.hi, min(s.hi, hi.hi)))

        return _clamp
    raise ExpressionError(f"unknown node {op!r}")
