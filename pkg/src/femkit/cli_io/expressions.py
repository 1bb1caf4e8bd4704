"""A closed expression grammar for config-file coefficients and data.

Vocabulary: the variables x, y, t (y only on 2D problems), numeric
literals, the constant pi, the operators + - * / ^ with unary minus,
the functions sin, cos, exp, and the indicator box(x0, x1, y0, y1) which
is 1 where x0 < x < x1 and y0 < y < y1 (y is 0 on 1D problems).

Compiled expressions are numpy-vectorized callables: ``f(x, t)`` for 1D
problems, ``f(x, y, t)`` for 2D.
"""

import math
import re

import numpy as np

__all__ = ["ExpressionError", "Expr", "compile_expression"]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


class ExpressionError(ValueError):
    """Malformed expression; carries the character position."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} (position {position})")


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        match = _TOKEN_RE.match(src, pos)
        if match is None or match.end() == pos:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(src) - len(stripped)
            raise ExpressionError(f"unexpected character {src[bad_at]!r}", bad_at)
        if match.lastgroup == "number":
            tokens.append(("number", float(match.group("number")), match.start("number")))
        elif match.lastgroup == "ident":
            tokens.append(("ident", match.group("ident"), match.start("ident")))
        else:
            tokens.append(("op", match.group("op"), match.start("op")))
        pos = match.end()
    tokens.append(("end", None, len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, dim: int):
        self.src = src
        self.dim = dim
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables: set[str] = set()

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, pos = self.next()
        if kind != "op" or value != op:
            raise ExpressionError(f"expected {op!r}", pos)

    def parse(self):
        fn = self.expr()
        kind, _, pos = self.peek()
        if kind != "end":
            raise ExpressionError("unexpected trailing input", pos)
        return fn

    def expr(self):
        left = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                right = self.term()
                if value == "+":
                    left = (lambda l, r: lambda x, y, t: l(x, y, t) + r(x, y, t))(left, right)
                else:
                    left = (lambda l, r: lambda x, y, t: l(x, y, t) - r(x, y, t))(left, right)
            else:
                return left

    def term(self):
        left = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                right = self.unary()
                if value == "*":
                    left = (lambda l, r: lambda x, y, t: l(x, y, t) * r(x, y, t))(left, right)
                else:
                    left = (lambda l, r: lambda x, y, t: l(x, y, t) / r(x, y, t))(left, right)
            else:
                return left

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            inner = self.unary()
            return lambda x, y, t: -inner(x, y, t)
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.next()
            exponent = self.unary()
            return lambda x, y, t: base(x, y, t) ** exponent(x, y, t)
        return base

    def atom(self):
        kind, value, pos = self.next()
        if kind == "number":
            return lambda x, y, t, v=value: v
        if kind == "op" and value == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        if kind == "ident":
            if value == "pi":
                return lambda x, y, t: math.pi
            if value in ("x", "y", "t"):
                if value == "y" and self.dim == 1:
                    raise ExpressionError("variable 'y' is not available on 1D problems", pos)
                self.variables.add(value)
                return {
                    "x": lambda x, y, t: x,
                    "y": lambda x, y, t: y,
                    "t": lambda x, y, t: t,
                }[value]
            if value in _FUNCTIONS:
                fn = _FUNCTIONS[value]
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return lambda x, y, t: fn(inner(x, y, t))
            if value == "box":
                self.expect_op("(")
                args = [self.expr()]
                for _ in range(3):
                    self.expect_op(",")
                    args.append(self.expr())
                self.expect_op(")")
                x0, x1, y0, y1 = args

                def box(x, y, t):
                    inside = (
                        (x > x0(x, y, t))
                        & (x < x1(x, y, t))
                        & (y > y0(x, y, t))
                        & (y < y1(x, y, t))
                    )
                    return np.where(inside, 1.0, 0.0)

                return box
            raise ExpressionError(f"unknown identifier {value!r}", pos)
        raise ExpressionError("expected a value", pos)


class Expr:
    """Compiled closed-form expression; call as f(x, t) in 1D, f(x, y, t) in 2D."""

    def __init__(self, source: str, dim: int, fn, variables: frozenset[str]):
        self.source = source
        self.dim = dim
        self._fn = fn
        self.variables = variables

    @property
    def uses_t(self) -> bool:
        return "t" in self.variables

    def __call__(self, *args):
        if self.dim == 1:
            x, t = args
            return self._fn(x, 0.0, t)
        x, y, t = args
        return self._fn(x, y, t)

    def __repr__(self):
        return f"Expr({self.source!r}, dim={self.dim})"


def compile_expression(source: str, dim: int = 2) -> Expr:
    """Compile an expression string to a vectorized callable.

    Raises :class:`ExpressionError` with the offending character position
    on malformed input.
    """
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    parser = _Parser(source, dim)
    fn = parser.parse()
    return Expr(source, dim, fn, frozenset(parser.variables))
