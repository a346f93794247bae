"""Reader for the line-oriented problem file format.

::

    var x1 in [-10, 10]
    var x2 in [-10, 10]
    minimize x1^2 + x1*x2 + x2^2 - 5*x2
    eq x1 + x2 - 1          # means  x1 + x2 - 1 = 0
    le -x1                  # means  -x1 <= 0
    le x1 + x2 <= 4         # sugar, stored as (x1 + x2) - 4
    le x2 >= 0              # sugar, stored as 0 - x2

Variables must be declared first and in index order.  Self-map files use
``map EXPR`` lines (one per variable, in order) instead of ``minimize``,
``eq`` and ``le``.
"""
from __future__ import annotations

from itertools import groupby

from .errors import ParseError
from .expr import Binary, Expr, _Parser, to_source, tokenize
from .problem import BoxDomain, Problem

_RELATIONS = {"le": ("<=", ">="), "eq": ("=", "==")}


def _signed_number(parser):
    sign = 1.0
    if parser.at("operator", "-") or parser.at("operator", "+"):
        sign = -1.0 if parser.advance().lexeme == "-" else 1.0
    tok = parser.expect("number")
    return sign * float(tok.lexeme)


def _var_line(tokens, expected_index):
    parser = _Parser(tokens[1:], 0)
    name = parser.expect("identifier")
    if name.lexeme != f"x{expected_index}":
        if name.lexeme.startswith("x") and name.lexeme[1:].isdigit() and int(name.lexeme[1:]) < expected_index:
            raise ParseError(f"duplicate variable {name.lexeme}", name.line, name.column)
        raise ParseError(
            f"expected declaration of x{expected_index}, found {name.lexeme!r}",
            name.line,
            name.column,
        )
    parser.expect("keyword", "in")
    parser.expect("lparen", "[")
    lo = _signed_number(parser)
    parser.expect("comma")
    hi = _signed_number(parser)
    parser.expect("rparen", "]")
    if parser.peek() is not None:
        parser.error("unexpected token after bounds")
    if not lo < hi:
        raise ParseError(f"empty interval [{lo}, {hi}]", name.line, name.column)
    return lo, hi


def _clause_expr(tokens, arity, keyword) -> Expr:
    parser = _Parser(tokens[1:], arity)
    node = parser.expr()
    tok = parser.peek()
    if tok is not None and tok.kind == "operator" and tok.lexeme in _RELATIONS.get(keyword, ()):
        parser.advance()
        rhs = parser.expr()
        if tok.lexeme == ">=":
            node = Binary("-", rhs, node)
        else:
            node = Binary("-", node, rhs)
    if parser.peek() is not None:
        parser.error("unexpected token")
    return node


def read_clauses(source: str, allowed: tuple):
    """Parse ``var`` declarations followed by clauses whose keywords are in
    ``allowed``.  Returns the box and a list of ``(keyword, expr, token)``."""
    tokens = tokenize(source)
    bounds = []
    clauses = []
    for _, group in groupby(tokens, key=lambda t: t.line):
        line = list(group)
        head = line[0]
        if head.kind != "keyword" or head.lexeme not in ("var",) + allowed:
            raise ParseError(f"unexpected {head.lexeme!r} at start of clause", head.line, head.column)
        if head.lexeme == "var":
            if clauses:
                raise ParseError("variable declared after clauses", head.line, head.column)
            bounds.append(_var_line(line, len(bounds) + 1))
            continue
        if not bounds:
            raise ParseError("no variables declared", head.line, head.column)
        if len(line) == 1:
            raise ParseError(f"empty {head.lexeme} clause", head.line, head.column)
        clauses.append((head.lexeme, _clause_expr(line, len(bounds), head.lexeme), head))
    if not bounds:
        raise ParseError("no variables declared")
    domain = BoxDomain(tuple(b[0] for b in bounds), tuple(b[1] for b in bounds))
    return domain, clauses


def parse_problem(source: str) -> Problem:
    domain, clauses = read_clauses(source, ("minimize", "eq", "le"))
    objective = None
    eqs, les = [], []
    for keyword, expr, tok in clauses:
        if keyword == "minimize":
            if objective is not None:
                raise ParseError("second minimize clause", tok.line, tok.column)
            if eqs or les:
                raise ParseError("minimize must precede constraints", tok.line, tok.column)
            objective = expr
        elif objective is None:
            raise ParseError("constraint before minimize clause", tok.line, tok.column)
        elif keyword == "eq":
            eqs.append(expr)
        else:
            les.append(expr)
    if objective is None:
        raise ParseError("missing minimize clause")
    return Problem(domain, objective, tuple(eqs), tuple(les))


def format_problem(problem: Problem) -> str:
    """Problem file text that :func:`parse_problem` reads back."""
    lines = [
        f"var x{i + 1} in [{lo!r}, {hi!r}]"
        for i, (lo, hi) in enumerate(zip(problem.domain.lower, problem.domain.upper))
    ]
    lines.append(f"minimize {to_source(problem.objective)}")
    lines += [f"eq {to_source(e)}" for e in problem.equalities]
    lines += [f"le {to_source(e)}" for e in problem.inequalities]
    return "\n".join(lines) + "\n"


__all__ = ["parse_problem", "format_problem", "read_clauses"]
