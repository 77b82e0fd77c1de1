"""Arithmetic expression language for user-declared counterfactuals.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-'? power
    power  := atom ('^' factor)?
    atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

``+ - * /`` associate to the left and ``^`` to the right.  Unary minus
binds looser than ``^``, so ``-x^2`` is ``-(x^2)``.  Error offsets are byte
offsets into the UTF-8 encoding of the source.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Tuple, Union

from scipy import special

from ..errors import ArityError, DomainError, ExprSyntaxError, UnboundIdentifier, UnknownFunction


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Node", ...]


Node = Union[Num, Var, Neg, BinOp, Call]


def _checked_log(x):
    if x <= 0:
        raise DomainError(f"log of nonpositive value {x}")
    return math.log(x)


def _checked_sqrt(x):
    if x < 0:
        raise DomainError(f"sqrt of negative value {x}")
    return math.sqrt(x)


def _checked_arccos(x):
    if not -1.0 <= x <= 1.0:
        raise DomainError(f"arccos argument {x} outside [-1, 1]")
    return math.acos(x)


def _logsumexp(*xs):
    top = max(xs)
    if math.isinf(top):
        return top
    return top + math.log(math.fsum(math.exp(x - top) for x in xs))


def _logistic_pdf(z):
    s = float(special.expit(z))
    return s * (1.0 - s)


# name -> (callable, arity); arity None means variadic with at least one argument
BUILTINS = {
    "exp": (math.exp, 1),
    "log": (_checked_log, 1),
    "sqrt": (_checked_sqrt, 1),
    "abs": (abs, 1),
    "arccos": (_checked_arccos, 1),
    "logsumexp": (_logsumexp, None),
    "normal_pdf": (lambda z: math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi), 1),
    "normal_cdf": (lambda z: float(special.ndtr(z)), 1),
    "logistic_pdf": (_logistic_pdf, 1),
    "logistic_cdf": (lambda z: float(special.expit(z)), 1),
}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(text):
    """Yield ``(kind, value, byte_offset)``; ends with an ``end`` token."""
    pos = 0
    byte = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", byte)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(), byte))
        byte += len(m.group().encode("utf-8"))
        pos = m.end()
    out.append(("end", "", byte))
    return out


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.power())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "ident":
            if self.peek()[:2] == ("op", "("):
                return self.call(val, off)
            return Var(val)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"expected a number, name or '(', found {found}", off)

    def call(self, name, off):
        if name not in BUILTINS:
            raise UnknownFunction(f"unknown function {name!r}", off)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[:2] == ("op", ","):
            self.take()
            args.append(self.expr())
        self.expect(")")
        arity = BUILTINS[name][1]
        if arity is not None and len(args) != arity:
            raise ArityError(f"{name} takes {arity} argument(s), got {len(args)}", off)
        return Call(name, tuple(args))


def parse_expr(text: str) -> Node:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


def eval_expr(ast: Node, bindings: Mapping[str, float]) -> float:
    value = _eval(ast, bindings)
    if not math.isfinite(value):
        raise DomainError(f"expression evaluated to {value}")
    return value


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return float(env[node.name])
        except KeyError:
            raise UnboundIdentifier(node.name) from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        a = _eval(node.left, env)
        b = _eval(node.right, env)
        try:
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                if b == 0.0:
                    raise DomainError("division by zero")
                return a / b
            return _power(a, b)
        except OverflowError as exc:
            raise DomainError(f"overflow in {node.op}") from exc
    if isinstance(node, Call):
        fn = BUILTINS[node.func][0]
        args = [_eval(arg, env) for arg in node.args]
        try:
            return float(fn(*args))
        except OverflowError as exc:
            raise DomainError(f"overflow in {node.func}") from exc
    raise TypeError(f"not an expression node: {node!r}")


def _power(a, b):
    if a == 0.0 and b < 0:
        raise DomainError("zero raised to a negative power")
    if a < 0 and not float(b).is_integer():
        raise DomainError("negative base with non-integer exponent")
    return math.pow(a, b)


def identifiers(node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return identifiers(node.operand)
    if isinstance(node, BinOp):
        return identifiers(node.left) | identifiers(node.right)
    if isinstance(node, Call):
        out = set()
        for arg in node.args:
            out |= identifiers(arg)
        return out
    return set()


def to_source(node) -> str:
    """Fully parenthesized source text that reparses to ``node``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")
