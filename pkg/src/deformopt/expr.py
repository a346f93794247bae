"""Arithmetic expressions over variables x1..xp.

Expressions are immutable trees that evaluate on a single point or on a
batch of points at once (rows of a 2-d array).  Batch evaluation never
raises on arithmetic trouble; it returns ``inf``/``nan`` entries and lets the
caller decide.  Scalar evaluation through :func:`evaluate` raises
:class:`EvaluationError` instead.

Grammar, lowest to highest precedence::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := ("-" | "+") unary | power
    power := atom ("^" unary)?          # right-associative
    atom  := NUMBER | xK | FUNC "(" expr ")" | "(" expr ")"
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import EvaluationError, ParseError

__all__ = [
    "Token",
    "Expr",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "FUNCTIONS",
    "KEYWORDS",
    "tokenize",
    "parse_expression",
    "parse_expr",
    "evaluate",
    "evaluate_batch",
    "to_source",
    "variables",
]

FUNCTIONS = {
    "abs": np.abs,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
}
KEYWORDS = frozenset({"var", "in", "minimize", "eq", "le", "map"})

# integer exponents up to this magnitude are expanded into products
_MAX_UNROLLED_POWER = 16

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<identifier>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<operator><=|>=|==|[-+*/^=])
  | (?P<lparen>[(\[])
  | (?P<rparen>[)\]])
  | (?P<comma>,)
    """,
    re.VERBOSE,
)
_VAR_RE = re.compile(r"x([1-9][0-9]*)\Z")


@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    line: int
    column: int

    def __repr__(self):
        return f"Token({self.kind}, {self.lexeme!r}, {self.line}:{self.column})"


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, skipping whitespace and ``#`` comments."""
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(
                f"unrecognized character {source[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if kind == "identifier" and text in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, text, line, pos - line_start + 1))
        pos = m.end()
    return tokens


# ---------------------------------------------------------------------------
# expression trees


class Expr:
    """Base class of expression nodes."""

    def _build(self) -> Callable[[np.ndarray], np.ndarray]:
        raise NotImplementedError

    @cached_property
    def _fn(self):
        return self._build()

    def max_index(self) -> int:
        return max((v.index for v in variables(self)), default=0)

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def _build(self):
        value = float(self.value)
        return lambda X: value


@dataclass(frozen=True, eq=True)
class Var(Expr):
    index: int  # 1-based

    def _build(self):
        col = self.index - 1
        return lambda X: X[:, col]


@dataclass(frozen=True, eq=True)
class Unary(Expr):
    op: str  # "neg" or a name in FUNCTIONS
    child: Expr

    def _build(self):
        inner = self.child._fn
        if self.op == "neg":
            return lambda X: -inner(X)
        fn = FUNCTIONS[self.op]
        return lambda X: fn(inner(X))


@dataclass(frozen=True, eq=True)
class Binary(Expr):
    op: str  # one of + - * / ^
    left: Expr
    right: Expr

    def _build(self):
        a, b = self.left._fn, self.right._fn
        op = self.op
        if op == "+":
            return lambda X: a(X) + b(X)
        if op == "-":
            return lambda X: a(X) - b(X)
        if op == "*":
            return lambda X: a(X) * b(X)
        if op == "/":
            return lambda X: np.divide(a(X), b(X))
        # power
        if isinstance(self.right, Const):
            e = float(self.right.value)
            if e.is_integer() and abs(e) <= _MAX_UNROLLED_POWER:
                return _integer_power(a, int(e))
        return lambda X: np.power(np.asarray(a(X), dtype=float), b(X))


def _integer_power(base, n):
    k = abs(n)

    def fn(X):
        x = np.asarray(base(X), dtype=float)
        out = np.ones_like(x)
        for _ in range(k):
            out = out * x
        return np.divide(1.0, out) if n < 0 else out

    return fn


def variables(expr: Expr):
    """Yield every :class:`Var` node in ``expr``."""
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            yield node
        elif isinstance(node, Unary):
            stack.append(node.child)
        elif isinstance(node, Binary):
            stack.extend((node.left, node.right))


def evaluate_batch(expr: Expr, points) -> np.ndarray:
    """Evaluate at every row of ``points`` (shape ``(N, p)``); never raises on
    arithmetic, non-finite entries are returned as is."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError("points must be a 2-d array")
    with np.errstate(all="ignore"):
        out = expr._fn(X)
    return np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()


def evaluate(expr: Expr, point) -> float:
    """Evaluate at a single point; raise :class:`EvaluationError` on a
    non-finite result."""
    x = np.asarray(point, dtype=float).reshape(1, -1)
    need = expr.max_index()
    if x.shape[1] < need:
        raise ValueError(f"point has {x.shape[1]} components, expression uses x{need}")
    value = float(evaluate_batch(expr, x)[0])
    if not np.isfinite(value):
        raise EvaluationError(f"non-finite value {value} for {to_source(expr)}")
    return value


def to_source(expr: Expr) -> str:
    """Fully parenthesized source text; re-parsing gives identical values."""
    if isinstance(expr, Const):
        text = repr(float(expr.value))
        return f"({text})" if text.startswith("-") else text
    if isinstance(expr, Var):
        return f"x{expr.index}"
    if isinstance(expr, Unary):
        if expr.op == "neg":
            return f"(-{to_source(expr.child)})"
        return f"{expr.op}({to_source(expr.child)})"
    if isinstance(expr, Binary):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    raise TypeError(f"not an expression: {expr!r}")


# ---------------------------------------------------------------------------
# parsing


class _Parser:
    def __init__(self, tokens, arity):
        self.tokens = tokens
        self.arity = arity
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            if last is None:
                raise ParseError(f"{message} (empty expression)")
            raise ParseError(
                f"{message} at end of input", last.line, last.column + len(last.lexeme)
            )
        raise ParseError(f"{message}, found {tok.lexeme!r}", tok.line, tok.column)

    def at(self, kind, lexeme=None):
        tok = self.peek()
        return tok is not None and tok.kind == kind and (lexeme is None or tok.lexeme == lexeme)

    def expect(self, kind, lexeme=None):
        if not self.at(kind, lexeme):
            self.error(f"expected {lexeme or kind}")
        return self.advance()

    def expr(self):
        node = self.term()
        while self.at("operator", "+") or self.at("operator", "-"):
            op = self.advance().lexeme
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.at("operator", "*") or self.at("operator", "/"):
            op = self.advance().lexeme
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.at("operator", "-"):
            self.advance()
            child = self.unary()
            if isinstance(child, Const):
                # keeps "x^-2" on the exact integer-power path
                return Const(-child.value)
            return Unary("neg", child)
        if self.at("operator", "+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("operator", "^"):
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        tok = self.peek()
        if tok is None:
            self.error("expected an operand")
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.lexeme))
        if tok.kind == "lparen" and tok.lexeme == "(":
            self.advance()
            node = self.expr()
            self.expect("rparen", ")")
            return node
        if tok.kind == "identifier":
            self.advance()
            m = _VAR_RE.match(tok.lexeme)
            if m:
                index = int(m.group(1))
                if index > self.arity:
                    self.error(f"undeclared variable x{index} (p={self.arity})", tok)
                return Var(index)
            if tok.lexeme in FUNCTIONS:
                self.expect("lparen", "(")
                arg = self.expr()
                self.expect("rparen", ")")
                return Unary(tok.lexeme, arg)
            self.error("unknown identifier", tok)
        self.error("expected an operand", tok)


def parse_expression(tokens: list[Token], arity: int) -> Expr:
    """Parse a complete token list into an expression over x1..x{arity}."""
    if arity < 1:
        raise ValueError("arity must be at least 1")
    parser = _Parser(list(tokens), arity)
    node = parser.expr()
    if parser.peek() is not None:
        parser.error("unexpected token")
    return node


def parse_expr(text: str, arity: int) -> Expr:
    """Tokenize and parse ``text``."""
    return parse_expression(tokenize(text), arity)

