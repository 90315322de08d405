"""Recursive-descent parser for the representative grammar.

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' integer)?
    atom   := number | name | name '(' expr ')' | '(' expr ')'

Names: ``z1..zk`` (``z`` when k = 1), ``zeta``, ``i``, ``pi``; functions
``exp log atan sqrt``. Exponents must be integer literals, optionally signed
and parenthesised.
"""
from __future__ import annotations

import re

from . import expr as E
from .errors import ParseError

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
                    r"|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text):
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        num, name, op = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            tokens.append(("num", num, start))
        elif name is not None:
            tokens.append(("name", name, start))
        else:
            if op not in "+-*/^(),":
                raise ParseError(f"unexpected character {op!r}", text, start)
            tokens.append(("op", op, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, k):
        self.text = text
        self.k = k
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, self.text, tok[2])

    def expect(self, op):
        tok = self.take()
        if tok[:2] != ("op", op):
            raise self.error(f"expected {op!r}", tok)
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        out = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return out

    def expr(self):
        out = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            out = E.add(out, rhs) if op == "+" else E.sub(out, rhs)
        return out

    def term(self):
        out = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            out = E.mul(out, rhs) if op == "*" else E.div(out, rhs)
        return out

    def unary(self):
        tok = self.peek()
        if tok[:2] == ("op", "-"):
            self.take()
            return E.mul(-1, self.unary())
        if tok[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return E.power(base, self.exponent())
        return base

    def exponent(self):
        paren = self.peek()[:2] == ("op", "(")
        if paren:
            self.take()
        sign = 1
        if self.peek()[:2] in (("op", "-"), ("op", "+")):
            sign = -1 if self.take()[1] == "-" else 1
        tok = self.take()
        if tok[0] != "num" or not tok[1].isdigit():
            raise self.error("integer exponent required", tok)
        if paren:
            self.expect(")")
        if self.peek()[:2] == ("op", "^"):
            raise self.error("chained exponents are not supported")
        return sign * int(tok[1])

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return E.Const(complex(float(val)))
        if kind == "op" and val == "(":
            out = self.expr()
            self.expect(")")
            return out
        if kind == "name":
            if val in E.FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return E.func(val, arg)
            if self.peek()[:2] == ("op", "("):
                raise self.error(f"unknown function {val!r}", tok)
            return self.name(tok)
        raise self.error(f"unexpected token {val!r}" if val else "unexpected end of input", tok)

    def name(self, tok):
        val = tok[1]
        if val == "zeta":
            return E.ZETA
        if val == "pi":
            return E.PI
        if val == "i":
            return E.I
        if val == "z" and self.k == 1:
            return E.z_var(1)
        m = re.fullmatch(r"z([1-9][0-9]*)", val)
        if m and int(m.group(1)) <= self.k:
            return E.z_var(int(m.group(1)))
        raise self.error(f"unknown identifier {val!r}", tok)


def parse(text, k=1):
    """Parse ``text`` into an expression tree over z1..zk and zeta."""
    return _Parser(text, k).parse()
