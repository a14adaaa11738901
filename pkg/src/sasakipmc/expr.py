"""A small arithmetic grammar for user-supplied immersions in (u, v).

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | power
    power   := atom (("^" | "**") unary)?
    atom    := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

Names are ``u``, ``v``, ``pi``, ``e`` and the functions ``sin``, ``cos``,
``exp``, ``log``, ``sqrt``.  Evaluation works on floats, arrays and jets.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import jets

FUNCTIONS = {"sin": jets.sin, "cos": jets.cos, "exp": jets.exp, "log": jets.log, "sqrt": jets.sqrt}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("u", "v")

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\*\*|[-+*/^(),]))")


class ExpressionSyntaxError(ValueError):
    def __init__(self, message: str, text: str, column: int):
        super().__init__(f"{message} at column {column + 1}\n  {text}\n  {' ' * column}^")
        self.text = text
        self.column = column


class ExpressionEvaluationError(ValueError):
    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in '{subexpression}'")
        self.subexpression = subexpression


@dataclass(frozen=True)
class Node:
    kind: str  # num, var, neg, bin, call
    value: object = None
    args: tuple = ()
    text: str = ""

    def evaluate(self, env: dict):
        k = self.kind
        if k == "num":
            return self.value
        if k == "var":
            return env[self.value]
        if k == "neg":
            return -self.args[0].evaluate(env)
        if k == "call":
            x = self.args[0].evaluate(env)
            try:
                return FUNCTIONS[self.value](x)
            except jets.JetDomainError as exc:
                raise ExpressionEvaluationError(str(exc), self.text) from None
        a, b = (n.evaluate(env) for n in self.args)
        op = self.value
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            bv = jets.value_of(b)
            if np.any(np.asarray(bv) == 0):
                raise ExpressionEvaluationError("division by zero", self.text)
            return a / b
        return _power(a, b, self)


def _power(a, b, node: Node):
    if not isinstance(b, jets.Jet) and np.ndim(b) == 0:
        p = float(b)
        if p == int(p):
            return jets.power(a, p)
        av = np.asarray(jets.value_of(a))
        if np.any(av <= 0):
            raise ExpressionEvaluationError("non-integer power of a non-positive value", node.text)
        return jets.power(a, p)
    try:
        return jets.exp(b * jets.log(a))
    except jets.JetDomainError as exc:
        raise ExpressionEvaluationError(str(exc), node.text) from None


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                col = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ExpressionSyntaxError(f"unexpected character {text[col]!r}", text, col)
            num, name, op = m.groups()
            start = m.start(m.lastindex)
            self.tokens.append(("num" if num else "name" if name else "op", num or name or op, start))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else ("end", None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", self.text, tok[2])
        return tok

    def span(self, start: int) -> str:
        end = self.tokens[self.i - 1][2] + len(self.tokens[self.i - 1][1]) if self.i else start
        return self.text[start:end].strip()

    def parse(self) -> Node:
        if not self.tokens:
            raise ExpressionSyntaxError("empty expression", self.text, 0)
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionSyntaxError(f"unexpected {tok[1]!r}", self.text, tok[2])
        return node

    def expr(self) -> Node:
        start = self.peek()[2]
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = Node("bin", op, (node, self.term()))
            node = Node("bin", op, node.args, self.span(start))
        return node

    def term(self) -> Node:
        start = self.peek()[2]
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = Node("bin", op, (node, rhs), self.span(start))
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok[1] in ("+", "-"):
            self.take()
            inner = self.unary()
            return inner if tok[1] == "+" else Node("neg", None, (inner,), self.span(tok[2]))
        return self.power()

    def power(self) -> Node:
        start = self.peek()[2]
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            exponent = self.unary()
            return Node("bin", "^", (base, exponent), self.span(start))
        return base

    def atom(self) -> Node:
        kind, val, col = self.take()
        if kind == "num":
            return Node("num", float(val), (), val)
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Node("call", val, (arg,), self.span(col))
            if self.peek()[1] == "(":
                raise ExpressionSyntaxError(f"unknown function {val!r}", self.text, col)
            if val in CONSTANTS:
                return Node("num", CONSTANTS[val], (), val)
            if val in VARIABLES:
                return Node("var", val, (), val)
            raise ExpressionSyntaxError(f"unknown identifier {val!r}", self.text, col)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {found}", self.text, col)


def parse(text: str) -> Node:
    return _Parser(text).parse()


def split_components(text: str) -> list[str]:
    """Split a comma-separated list of expressions at top-level commas."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def compile_immersion(components) -> callable:
    """A function ``x -> (..., m)`` for :meth:`SurfacePatch.from_function`,
    where ``x`` is a jet or array with trailing axis (u, v)."""
    if isinstance(components, str):
        components = split_components(components)
    offsets, nodes = [], []
    col = 0
    for part in components:
        try:
            nodes.append(parse(part))
        except ExpressionSyntaxError as exc:
            raise ExpressionSyntaxError(str(exc).split(" at column")[0], ",".join(components), col + exc.column) from None
        offsets.append(col)
        col += len(part) + 1

    def fn(x):
        env = {"u": x[..., 0], "v": x[..., 1]}
        vals = [n.evaluate(env) for n in nodes]
        like = next((y for y in vals if isinstance(y, jets.Jet)), None)
        shape = jets.value_of(env["u"]).shape
        if like is None:
            return np.stack([np.broadcast_to(np.asarray(y, dtype=float), shape) for y in vals], axis=-1)
        full = [y if isinstance(y, jets.Jet) else like.constant_like(np.broadcast_to(y, shape)) for y in vals]
        return jets.stack(full, axis=-1)

    fn.count = len(nodes)
    return fn
