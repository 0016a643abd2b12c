"""Tiny arithmetic expression language for problem configuration.

Frame entries a_ij(x,y), the exponent p(x,y) and boundary data f(x,y) are
given as closed-form strings.  The grammar is fixed: literals, the
variables ``x`` and ``y``, the constants ``pi`` and ``e``, binary
``+ - * / ^`` (with ``^`` right-associative and binding tighter than
unary minus), unary minus, and the calls ``sin cos exp log sqrt abs``
(one argument) and ``min max`` (two arguments).  ``log`` is the natural
logarithm.

Parsed trees are immutable; evaluation is reentrant and raises
:class:`DomainError` instead of ever returning a non-finite value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class ExprError(Exception):
    """Base class for expression failures."""


class ParseError(ExprError):
    """Malformed input; carries the character offset of the failure."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class DomainError(ExprError):
    """Evaluation left the expression's domain (log, sqrt, division, pow)."""

    def __init__(self, message: str, node: "Expr"):
        super().__init__(f"{message} in '{node}'")
        self.node = node


@dataclass(frozen=True)
class Expr:
    """Abstract syntax tree node (base class)."""

    def __call__(self, x: float, y: float) -> float:
        return evaluate(self, x, y)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var(Expr):
    name: str  # "x" or "y"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def __str__(self) -> str:
        return f"(-{self.arg})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr

    def __str__(self) -> str:
        return f"({self.left}{self.op}{self.right})"


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple[Expr, ...]

    def __str__(self) -> str:
        return f"{self.name}({','.join(str(a) for a in self.args)})"


_CONSTANTS = {"pi": math.pi, "e": math.e}
_UNARY_FUNCS = {"sin", "cos", "exp", "log", "sqrt", "abs"}
_BINARY_FUNCS = {"min", "max"}


class _Parser:
    """Recursive-descent parser over a character stream.

    Precedence, loosest to tightest: ``+ -`` < ``* /`` < unary ``-``
    < ``^`` (right-associative).
    """

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def parse(self) -> Expr:
        node = self.expression()
        self.skip_ws()
        if self.pos != len(self.text):
            raise ParseError(f"unexpected '{self.text[self.pos]}'", self.pos)
        return node

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise ParseError(f"expected '{ch}'", self.pos)
        self.pos += 1

    def expression(self) -> Expr:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            # right-associative; the exponent may carry a unary minus
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        ch = self.peek()
        if ch == "":
            raise ParseError("unexpected end of input", self.pos)
        if ch == "(":
            self.pos += 1
            node = self.expression()
            self.expect(")")
            return node
        if ch.isdigit() or ch == ".":
            return self.number()
        if ch.isalpha() or ch == "_":
            return self.identifier()
        raise ParseError(f"unexpected '{ch}'", self.pos)

    def number(self) -> Expr:
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isdigit() or self.text[self.pos] == "."
        ):
            self.pos += 1
        # exponent suffix like 1e-3 / 2.5E+10
        if self.pos < len(self.text) and self.text[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos].isdigit():
                while self.pos < len(self.text) and self.text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark
        try:
            return Num(float(self.text[start:self.pos]))
        except ValueError:
            raise ParseError("malformed number", start) from None

    def identifier(self) -> Expr:
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] == "_"
        ):
            self.pos += 1
        name = self.text[start:self.pos]
        if name in ("x", "y"):
            return Var(name)
        if name in _CONSTANTS:
            return Num(_CONSTANTS[name])
        if name in _UNARY_FUNCS or name in _BINARY_FUNCS:
            self.expect("(")
            args = [self.expression()]
            while self.peek() == ",":
                self.pos += 1
                args.append(self.expression())
            self.expect(")")
            want = 1 if name in _UNARY_FUNCS else 2
            if len(args) != want:
                raise ParseError(
                    f"{name} takes {want} argument{'s' if want > 1 else ''}", start
                )
            return Call(name, tuple(args))
        raise ParseError(f"unknown identifier '{name}'", start)


def parse(text: str) -> Expr:
    """Parse ``text`` into an immutable expression tree."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


def evaluate(e: Expr, x: float, y: float) -> float:
    """Evaluate ``e`` at the point (x, y) in double precision.

    Raises :class:`DomainError` naming the offending node on log of a
    nonpositive value, sqrt of a negative value, division by zero,
    undefined powers, or any non-finite intermediate.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(x) if e.name == "x" else float(y)
    if isinstance(e, Neg):
        return -evaluate(e.arg, x, y)
    if isinstance(e, BinOp):
        a = evaluate(e.left, x, y)
        b = evaluate(e.right, x, y)
        if e.op == "+":
            v = a + b
        elif e.op == "-":
            v = a - b
        elif e.op == "*":
            v = a * b
        elif e.op == "/":
            if b == 0.0:
                raise DomainError("division by zero", e)
            v = a / b
        else:  # ^
            try:
                v = math.pow(a, b)
            except (ValueError, OverflowError):
                raise DomainError("undefined power", e) from None
        if not math.isfinite(v):
            raise DomainError("non-finite result", e)
        return v
    if isinstance(e, Call):
        vals = [evaluate(a, x, y) for a in e.args]
        if e.name == "log":
            if vals[0] <= 0.0:
                raise DomainError("log of nonpositive value", e)
            v = math.log(vals[0])
        elif e.name == "sqrt":
            if vals[0] < 0.0:
                raise DomainError("sqrt of negative value", e)
            v = math.sqrt(vals[0])
        elif e.name == "sin":
            v = math.sin(vals[0])
        elif e.name == "cos":
            v = math.cos(vals[0])
        elif e.name == "exp":
            try:
                v = math.exp(vals[0])
            except OverflowError:
                raise DomainError("exp overflow", e) from None
        elif e.name == "abs":
            v = abs(vals[0])
        elif e.name == "min":
            v = min(vals)
        else:  # max
            v = max(vals)
        if not math.isfinite(v):
            raise DomainError("non-finite result", e)
        return v
    raise TypeError(f"not an expression node: {e!r}")
