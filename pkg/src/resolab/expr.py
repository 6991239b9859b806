"""Tiny expression language for scalar nonlinearities and right-hand sides.

Grammar (EBNF, see docs/expression_grammar.md):

    expr    = term { ("+" | "-") term } ;
    term    = factor { ("*" | "/") factor } ;
    factor  = "-" factor | power ;
    power   = atom [ "^" factor ] ;          (* right associative *)
    atom    = NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;

Identifiers are the constants ``pi`` and ``e``, the declared variables
(``s`` for nonlinearities, ``x``/``y`` for spatial fields), and the
functions sin, cos, tan, atan, exp, ln, abs, sgn, sqrt.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "atan": np.arctan,
    "exp": np.exp,
    "ln": np.log,
    "abs": np.abs,
    "sgn": np.sign,
    "sqrt": np.sqrt,
}

CONSTANTS = {"pi": math.pi, "e": math.e}


class ParseError(ValueError):
    """Syntax or name error with the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Num | Const | Var | Neg | Bin | Call


_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        stripped = len(text) - len(text[pos:].lstrip())
        pos = stripped
        if pos >= len(text):
            break
        mnum = _NUMBER.match(text, pos)
        if mnum:
            tokens.append(("num", mnum.group(0), pos))
            pos = mnum.end()
            continue
        mid = re.match(r"[A-Za-z_][A-Za-z_0-9]*", text[pos:])
        if mid:
            tokens.append(("ident", mid.group(0), pos))
            pos += mid.end()
            continue
        ch = text[pos]
        if ch in "+-*/^()":
            tokens.append(("op", ch, pos))
            pos += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", pos)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: tuple[str, ...]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, value, offset = self.next()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", offset)

    def parse(self) -> Expr:
        e = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {value!r}", offset)
        return e

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.next()
                node = Bin(value, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.next()
                node = Bin(value, node, self.factor())
            else:
                return node

    def factor(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.next()
            return Neg(self.factor())
        if kind == "op" and value == "+":
            self.next()
            return self.factor()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.next()
            return Bin("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, value, offset = self.next()
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            if value in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            if value in CONSTANTS:
                return Const(value)
            if value in self.variables:
                return Var(value)
            raise ParseError(f"unknown identifier {value!r}", offset)
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError("expected a number, identifier, or '('", offset)


def parse(text: str, variables: tuple[str, ...] = ("s",)) -> Expr:
    """Parse an expression string into its AST."""
    return _Parser(text, variables).parse()


def evaluate(expr: Expr, env: dict[str, np.ndarray | float]):
    """Evaluate an AST over numpy arrays or scalars."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Const):
        return CONSTANTS[expr.name]
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Neg):
        return -evaluate(expr.arg, env)
    if isinstance(expr, Bin):
        left = evaluate(expr.left, env)
        right = evaluate(expr.right, env)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if expr.op == "/":
            return left / right
        return left ** right
    return FUNCTIONS[expr.fn](evaluate(expr.arg, env))


def compile_fn(expr: Expr, variables: tuple[str, ...] = ("s",)):
    """Vectorized callable over the declared variables."""
    def fn(*args):
        env = dict(zip(variables, args))
        out = evaluate(expr, env)
        if np.isscalar(args[0]):
            return float(out)
        return np.broadcast_to(np.asarray(out, dtype=float),
                               np.shape(args[0])).copy() if np.ndim(out) == 0 else out
    return fn


# --- light structural simplification, enough to keep derivatives readable ---

def _is_num(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Num) and (v is None or e.value == v)


def add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    return Bin("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return Neg(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    return Bin("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    return Bin("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    return Bin("/", a, b)


def differentiate(expr: Expr, var: str = "s") -> Expr:
    """Symbolic derivative; d|s|/ds = sgn(s) and d sgn(s)/ds = 0 everywhere."""
    if isinstance(expr, (Num, Const)):
        return Num(0.0)
    if isinstance(expr, Var):
        return Num(1.0 if expr.name == var else 0.0)
    if isinstance(expr, Neg):
        inner = differentiate(expr.arg, var)
        return Num(0.0) if _is_num(inner, 0.0) else Neg(inner)
    if isinstance(expr, Bin):
        f, g = expr.left, expr.right
        df, dg = differentiate(f, var), differentiate(g, var)
        if expr.op == "+":
            return add(df, dg)
        if expr.op == "-":
            return sub(df, dg)
        if expr.op == "*":
            return add(mul(df, g), mul(f, dg))
        if expr.op == "/":
            return div(sub(mul(df, g), mul(f, dg)), Bin("^", g, Num(2.0)))
        # power: constant exponent gets the clean rule, otherwise via exp/ln
        if _is_num(dg, 0.0):
            expo = sub(g, Num(1.0)) if _is_num(g) else Bin("-", g, Num(1.0))
            return mul(mul(g, Bin("^", f, expo)), df)
        return mul(Bin("^", f, g),
                   add(mul(dg, Call("ln", f)), div(mul(g, df), f)))
    arg, darg = expr.arg, differentiate(expr.arg, var)
    rules = {
        "sin": lambda u: Call("cos", u),
        "cos": lambda u: Neg(Call("sin", u)),
        "tan": lambda u: div(Num(1.0), Bin("^", Call("cos", u), Num(2.0))),
        "atan": lambda u: div(Num(1.0), add(Num(1.0), Bin("^", u, Num(2.0)))),
        "exp": lambda u: Call("exp", u),
        "ln": lambda u: div(Num(1.0), u),
        "abs": lambda u: Call("sgn", u),
        "sgn": lambda u: Num(0.0),
        "sqrt": lambda u: div(Num(1.0), mul(Num(2.0), Call("sqrt", u))),
    }
    return mul(rules[expr.fn](arg), darg)


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def to_text(expr: Expr) -> str:
    """Pretty-print an AST; the output re-parses to an equal tree."""
    def render(e: Expr, parent_prec: int, right_side: bool) -> str:
        if isinstance(e, Num):
            v = e.value
            return str(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)
        if isinstance(e, (Const, Var)):
            return e.name
        if isinstance(e, Neg):
            inner = render(e.arg, 4, False)
            text = f"-{inner}"
            return f"({text})" if parent_prec > 1 or right_side else text
        if isinstance(e, Call):
            return f"{e.fn}({render(e.arg, 0, False)})"
        prec = _PRECEDENCE[e.op]
        left = render(e.left, prec, False)
        # - and / are left associative, ^ is right associative
        right = render(e.right, prec + (0 if e.op == "^" else 1),
                       e.op in "-/")
        text = f"{left} {e.op} {right}" if e.op != "^" else f"{left}^{right}"
        if prec < parent_prec or (right_side and prec == parent_prec):
            return f"({text})"
        return text
    return render(expr, 0, False)
