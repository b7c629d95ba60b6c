"""A small expression language for potential entries.

Grammar, loosest binding first:

    expr   := term (('+' | '-') term)*
    term   := power (('*' | '/') power)*
    power  := unary ('^' power)?
    unary  := ('-' | '+') unary | atom
    atom   := NUMBER | 'x' | 'pi' | FUNC '(' expr ')' | '(' expr ')'

`^` is right-associative, and a leading minus belongs to the base, so
"-2^2" is 4.  FUNC is one of sin, cos, exp, sqrt.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionSyntaxError

FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class Node:
    def eval(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class Num(Node):
    value: float

    def eval(self, x):
        return np.full(np.shape(x), self.value) if np.ndim(x) else self.value


@dataclass(frozen=True)
class Var(Node):
    def eval(self, x):
        return np.asarray(x, dtype=float) if np.ndim(x) else float(x)


@dataclass(frozen=True)
class Neg(Node):
    arg: Node

    def eval(self, x):
        return -self.arg.eval(x)


@dataclass(frozen=True)
class Bin(Node):
    op: str
    left: Node
    right: Node

    def eval(self, x):
        a, b = self.left.eval(x), self.right.eval(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return np.divide(a, b)
        return np.power(a, b)


@dataclass(frozen=True)
class Call(Node):
    fn: str
    arg: Node

    def eval(self, x):
        return FUNCS[self.fn](self.arg.eval(x))


@dataclass(frozen=True)
class Expression:
    source: str
    tree: Node

    def __call__(self, x):
        with np.errstate(all="ignore"):
            return self.tree.eval(x)

    def is_constant(self) -> bool:
        return "x" not in _names(self.tree)


def _names(node) -> set:
    if isinstance(node, Var):
        return {"x"}
    out = set()
    for f in ("arg", "left", "right"):
        if hasattr(node, f):
            out |= _names(getattr(node, f))
    return out


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.i = 0

    def fail(self, msg, expected):
        offset = len(self.src[:self.i].encode("utf-8"))
        raise ExpressionSyntaxError(msg, self.src, offset, frozenset(expected))

    def skip(self):
        while self.i < len(self.src) and self.src[self.i].isspace():
            self.i += 1

    def peek(self):
        self.skip()
        return self.src[self.i] if self.i < len(self.src) else ""

    def expect(self, ch):
        if self.peek() != ch:
            self.fail(f"unexpected {self.peek()!r}" if self.peek() else "unexpected end of input", {ch})
        self.i += 1

    def parse(self) -> Node:
        node = self.expr()
        if self.peek():
            self.fail(f"unexpected {self.peek()!r}", {"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.src[self.i]
            self.i += 1
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.power()
        while self.peek() in ("*", "/"):
            op = self.src[self.i]
            self.i += 1
            node = Bin(op, node, self.power())
        return node

    def power(self):
        base = self.unary()
        if self.peek() == "^":
            self.i += 1
            return Bin("^", base, self.power())
        return base

    def unary(self):
        c = self.peek()
        if c == "-":
            self.i += 1
            return Neg(self.unary())
        if c == "+":
            self.i += 1
            return self.unary()
        return self.atom()

    def atom(self):
        c = self.peek()
        start_expected = {"number", "x", "pi", "(", "-", "+"} | set(FUNCS)
        if not c:
            self.fail("unexpected end of input", start_expected)
        if c == "(":
            self.i += 1
            node = self.expr()
            self.expect(")")
            return node
        m = _NUMBER.match(self.src, self.i)
        if m:
            self.i = m.end()
            return Num(float(m.group(0)))
        m = _NAME.match(self.src, self.i)
        if m:
            name = m.group(0)
            if name == "x":
                self.i = m.end()
                return Var()
            if name == "pi":
                self.i = m.end()
                return Num(math.pi)
            if name in FUNCS:
                self.i = m.end()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            self.fail(f"unknown name {name!r}", start_expected)
        self.fail(f"unexpected {c!r}", start_expected)


def parse_expression(src: str) -> Expression:
    if not isinstance(src, str):
        raise ExpressionSyntaxError("expression must be a string", str(src), 0, frozenset({"string"}))
    return Expression(src, _Parser(src).parse())
