"""Arithmetic expressions over coordinate names.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

``FUNC`` is one of exp, ln, sin, cos, sqrt. ``pi`` and ``e`` are predefined
constants. There is no implicit multiplication: ``2x`` is a syntax error.

Evaluation works on floats and on numpy arrays alike, so a single parsed
expression can be evaluated at one point or along a whole sampled curve.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Union

import numpy as np

FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}
RESERVED = frozenset(FUNCTIONS) | frozenset(CONSTANTS)


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.text = text


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, position: int | None = None):
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown identifier {name!r}{where}")
        self.name = name
        self.position = position


class ExprDomainError(ExprError):
    pass


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Const, Neg, BinOp, Call]


def to_text(e: Expr) -> str:
    """Fully parenthesized text; ``parse(to_text(e)) == e``."""
    if isinstance(e, Num):
        text = repr(float(e.value))
        return f"(-{text[1:]})" if text.startswith("-") else text
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return variables(e.arg)
    return frozenset()


def substitute(e: Expr, values: Mapping[str, float]) -> Expr:
    """Replace variables by numeric literals."""
    if isinstance(e, Var):
        return Num(float(values[e.name])) if e.name in values else e
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, values))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, values), substitute(e.right, values))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, values))
    return e


# --- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed: frozenset):
        self.text = text
        self.allowed = allowed
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos, self.text)
        return self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", pos, self.text)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in CONSTANTS:
                return Const(text)
            if text in self.allowed:
                return Var(text)
            raise UnknownIdentifierError(text, pos)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos, self.text)


def parse(text: str, allowed_vars: Iterable[str] = ()) -> Expr:
    """Parse ``text``; identifiers must be in ``allowed_vars`` or be constants."""
    allowed = frozenset(allowed_vars)
    clash = allowed & RESERVED
    if clash:
        raise ExprError(f"variable names clash with reserved names: {sorted(clash)}")
    return _Parser(text, allowed).parse()


# --- evaluation ------------------------------------------------------------

def _finite(x, what):
    if not np.all(np.isfinite(x)):
        raise ExprDomainError(f"{what} produced a non-finite value")
    return x


def _div(a, b):
    if np.any(np.asarray(b) == 0):
        raise ExprDomainError("division by zero")
    with np.errstate(all="ignore"):
        return _finite(np.true_divide(a, b), "division")


def _pow(a, b):
    a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if np.any((a_arr == 0) & (b_arr < 0)):
        raise ExprDomainError("division by zero (zero to a negative power)")
    if np.any((a_arr < 0) & (b_arr != np.round(b_arr))):
        raise ExprDomainError("negative base with non-integer exponent")
    with np.errstate(all="ignore"):
        return _finite(np.power(a_arr, b_arr), "power")


def _ln(a):
    if np.any(np.asarray(a) <= 0):
        raise ExprDomainError("ln of a non-positive argument")
    return np.log(a)


def _sqrt(a):
    if np.any(np.asarray(a) < 0):
        raise ExprDomainError("sqrt of a negative argument")
    return np.sqrt(a)


def _exp(a):
    with np.errstate(all="ignore"):
        return _finite(np.exp(a), "exp")


_FUNC_IMPL = {"exp": _exp, "ln": _ln, "sin": np.sin, "cos": np.cos, "sqrt": _sqrt}
_BIN_IMPL = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: _finite(a * b, "product"),
    "/": _div,
    "^": _pow,
}


def evaluate(e: Expr, env: Mapping[str, float]):
    """Evaluate ``e`` with variables bound by ``env`` (floats or arrays)."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnknownIdentifierError(e.name) from None
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Neg):
        return -evaluate(e.operand, env)
    if isinstance(e, BinOp):
        return _BIN_IMPL[e.op](evaluate(e.left, env), evaluate(e.right, env))
    if isinstance(e, Call):
        return _FUNC_IMPL[e.func](evaluate(e.arg, env))
    raise TypeError(f"not an expression node: {e!r}")


def compile_expr(e: Expr, names: Iterable[str]) -> Callable:
    """Build a positional callable ``f(*values)`` for the given argument order.

    Constant subtrees are folded once; the callable then avoids per-node type
    dispatch, which matters inside integrator right-hand sides.
    """
    names = tuple(names)
    index = {n: i for i, n in enumerate(names)}
    missing = variables(e) - set(names)
    if missing:
        raise UnknownIdentifierError(sorted(missing)[0])

    def build(node):
        if not variables(node):
            value = evaluate(node, {})
            return lambda args: value
        if isinstance(node, Var):
            i = index[node.name]
            return lambda args: args[i]
        if isinstance(node, Neg):
            f = build(node.operand)
            return lambda args: -f(args)
        if isinstance(node, BinOp):
            fl, fr, op = build(node.left), build(node.right), _BIN_IMPL[node.op]
            return lambda args: op(fl(args), fr(args))
        if isinstance(node, Call):
            f, fn = build(node.arg), _FUNC_IMPL[node.func]
            return lambda args: fn(f(args))
        raise TypeError(f"not an expression node: {node!r}")

    body = build(e)
    return lambda *args: body(args)


def evaluate_text(text: str, env: Mapping[str, float] | None = None) -> float:
    """Parse and evaluate in one go; handy for CLI numeric arguments like ``3*pi/4``."""
    env = env or {}
    return float(evaluate(parse(text, env.keys()), env))
