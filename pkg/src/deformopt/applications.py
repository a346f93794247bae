"""Reductions of fixed-point and vector problems to a single constrained
problem over a box."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import EvaluationError, InputError, ParseError
from .expr import Binary, Const, Expr, Var, evaluate_batch, to_source
from .problem import BoxDomain, Problem, _as_point
from .source import read_clauses
from .solvers import make_rng

__all__ = [
    "SelfMap",
    "ThresholdSpec",
    "brouwer_problem",
    "fixed_point_residual",
    "scalarize_sum",
    "threshold_problem",
    "target_value_problem",
    "escaping_samples",
    "parse_selfmap",
]


@dataclass(frozen=True)
class SelfMap:
    """T = (T_1, ..., T_p) on a box, meant to map the box into itself."""

    components: tuple
    domain: BoxDomain

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        p = self.domain.dim
        if len(self.components) != p:
            raise InputError(f"a self-map of a {p}-dimensional box needs {p} components")
        for expr in self.components:
            if expr.max_index() > p:
                raise InputError(f"{to_source(expr)} references a variable beyond x{p}")

    def image(self, points) -> np.ndarray:
        X = np.atleast_2d(np.asarray(points, dtype=float))
        return np.column_stack([evaluate_batch(e, X) for e in self.components])


@dataclass(frozen=True)
class ThresholdSpec:
    """Find x with objectives[i](x) <= caps[i] under optional base constraints."""

    objectives: tuple
    caps: tuple
    domain: BoxDomain
    equalities: tuple = ()
    inequalities: tuple = ()

    def __post_init__(self):
        for name in ("objectives", "caps", "equalities", "inequalities"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(self.objectives) != len(self.caps):
            raise InputError("need exactly one cap per objective")


def brouwer_problem(selfmap: SelfMap) -> Problem:
    """Constant objective 1 with equalities ``T_i(x) - x_i = 0``."""
    eqs = tuple(Binary("-", comp, Var(i + 1)) for i, comp in enumerate(selfmap.components))
    return Problem(selfmap.domain, Const(1.0), eqs, ())


def fixed_point_residual(selfmap: SelfMap, point) -> float:
    """max_i |T_i(x) - x_i|; raises if some component is not finite."""
    x = _as_point(point, selfmap.domain.dim)
    image = selfmap.image(x)[0]
    if not np.isfinite(image).all():
        i = int(np.flatnonzero(~np.isfinite(image))[0])
        raise EvaluationError(f"component {i + 1} of the map is not finite", kind="eq", index=i + 1)
    return float(np.abs(image - x).max())


def escaping_samples(selfmap: SelfMap, samples: int = 10_000, seed: int = 0, warn: bool = True) -> int:
    """Count sampled box points whose image leaves the box.

    This is a smoke test for authoring mistakes, not a proof that the map
    is a self-map.
    """
    dom = selfmap.domain
    X = dom.lo + make_rng(seed).random((samples, dom.dim)) * (dom.hi - dom.lo)
    Y = selfmap.image(X)
    with np.errstate(invalid="ignore"):
        outside = ~np.all((Y >= dom.lo) & (Y <= dom.hi), axis=1)
    count = int(outside.sum())
    if count and warn:
        warnings.warn(
            f"{count} of {samples} sampled points are mapped outside the box",
            stacklevel=2,
        )
    return count


def _sum(exprs: Sequence[Expr]) -> Expr:
    return reduce(lambda a, b: Binary("+", a, b), exprs)


def scalarize_sum(
    objectives: Sequence[Expr],
    domain: BoxDomain,
    equalities: Sequence[Expr] = (),
    inequalities: Sequence[Expr] = (),
) -> Problem:
    """Minimize the plain sum of the objectives under the given constraints."""
    if not objectives:
        raise InputError("need at least one objective")
    return Problem(domain, _sum(objectives), tuple(equalities), tuple(inequalities))


def threshold_problem(spec: ThresholdSpec) -> Problem:
    """Constant objective with ``f_i - c_i <= 0`` appended to the base
    inequalities, in order."""
    caps = tuple(
        Binary("-", f, Const(float(c))) for f, c in zip(spec.objectives, spec.caps)
    )
    return Problem(spec.domain, Const(1.0), spec.equalities, spec.inequalities + caps)


def target_value_problem(problem: Problem, c: float) -> Problem:
    """Feasibility version of ``problem``: find x in A with f(x) <= c."""
    cap = Binary("-", problem.objective, Const(float(c)))
    return Problem(problem.domain, Const(1.0), problem.equalities, problem.inequalities + (cap,))


def parse_selfmap(source: str) -> SelfMap:
    """Read ``var`` declarations followed by one ``map`` line per variable."""
    domain, clauses = read_clauses(source, ("map",))
    if len(clauses) != domain.dim:
        tok = clauses[-1][2] if clauses else None
        raise ParseError(
            f"expected {domain.dim} map lines, found {len(clauses)}",
            tok.line if tok else None,
            tok.column if tok else None,
        )
    return SelfMap(tuple(expr for _, expr, _ in clauses), domain)
