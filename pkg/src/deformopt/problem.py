"""Constrained problems over a box and their unconstrained deformation.

A problem ``min f(x)`` over a box subject to ``g_i(x) = 0`` and
``h_j(x) <= 0`` is replaced by the single field

    f_t(x) = (1 - t) * (f(x) - K) + t * M * F(x),
    F(x)   = sum_i |g_i(x)| + sum_j (|h_j(x)| + h_j(x)),

where ``F`` vanishes exactly on the feasible set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EvaluationError, InputError
from .expr import Const, Expr, evaluate_batch, to_source

DEFAULT_FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class BoxDomain:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise InputError("box bounds must be non-empty and of equal length")
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if not lo < hi:
                raise InputError(f"empty interval for x{i + 1}: [{lo}, {hi}]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, p: int, lo: float = -10.0, hi: float = 10.0) -> "BoxDomain":
        return cls((lo,) * p, (hi,) * p)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    def contains(self, point) -> bool:
        x = _as_point(point, self.dim)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass(frozen=True)
class Problem:
    domain: BoxDomain
    objective: Expr
    equalities: tuple = ()
    inequalities: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        p = self.domain.dim
        for expr in (self.objective, *self.equalities, *self.inequalities):
            if expr.max_index() > p:
                raise InputError(f"{to_source(expr)} references a variable beyond x{p}")

    @property
    def p(self) -> int:
        return self.domain.dim

    @property
    def m(self) -> int:
        return len(self.equalities)

    @property
    def n(self) -> int:
        return len(self.inequalities)


@dataclass(frozen=True)
class PenaltyParams:
    K: float = 100.0
    M: float = 10000.0
    t: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.t < 1.0:
            raise InputError(f"t must lie in (0, 1), got {self.t}")
        if not self.M > 0.0:
            raise InputError(f"M must be positive, got {self.M}")


@dataclass(frozen=True)
class ConstraintReport:
    max_eq_residual: Optional[float] = None
    max_ineq_value: Optional[float] = None


def _as_point(point, p) -> np.ndarray:
    x = np.asarray(point, dtype=float)
    if x.shape != (p,):
        raise InputError(f"expected a point of dimension {p}, got shape {x.shape}")
    return x


def _as_batch(points, p) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != p:
        raise InputError(f"expected points of dimension {p}, got shape {X.shape}")
    return X


def constraint_values(problem: Problem, points):
    """Raw ``(g, h)`` arrays of shapes ``(N, m)`` and ``(N, n)``."""
    X = _as_batch(points, problem.p)
    g = np.column_stack([evaluate_batch(e, X) for e in problem.equalities] or [np.empty((len(X), 0))])
    h = np.column_stack([evaluate_batch(e, X) for e in problem.inequalities] or [np.empty((len(X), 0))])
    return g, h


def feasibility_batch(problem: Problem, points) -> np.ndarray:
    """F at every row of ``points``; non-finite constraint values propagate."""
    g, h = constraint_values(problem, points)
    with np.errstate(invalid="ignore"):
        return np.abs(g).sum(axis=1) + (np.abs(h) + h).sum(axis=1)


def _check_finite(problem, g, h):
    for kind, vals in (("eq", g), ("le", h)):
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            i = int(bad[0])
            exprs = problem.equalities if kind == "eq" else problem.inequalities
            raise EvaluationError(
                f"{kind} constraint {i + 1} ({to_source(exprs[i])}) is not finite",
                kind=kind,
                index=i + 1,
            )


def feasibility_measure(problem: Problem, point) -> float:
    """F(x) = sum |g_i(x)| + sum (|h_j(x)| + h_j(x)) at a single point."""
    x = _as_point(point, problem.p)
    g, h = constraint_values(problem, x)
    _check_finite(problem, g[0], h[0])
    return float(np.abs(g[0]).sum() + (np.abs(h[0]) + h[0]).sum())


def constraint_report(problem: Problem, point) -> ConstraintReport:
    x = _as_point(point, problem.p)
    g, h = constraint_values(problem, x)
    _check_finite(problem, g[0], h[0])
    return ConstraintReport(
        max_eq_residual=float(np.abs(g[0]).max()) if problem.m else None,
        max_ineq_value=float(h[0].max()) if problem.n else None,
    )


def is_feasible(problem: Problem, point, tol: float = DEFAULT_FEASIBILITY_TOL) -> bool:
    if tol < 0:
        raise InputError("tol must be nonnegative")
    x = _as_point(point, problem.p)
    if not problem.domain.contains(x):
        return False
    try:
        return feasibility_measure(problem, x) <= tol
    except EvaluationError:
        return False


def clamp_to_box(domain: BoxDomain, point) -> np.ndarray:
    """Componentwise projection onto the box; accepts one point or rows."""
    x = np.asarray(point, dtype=float)
    if x.shape[-1] != domain.dim:
        raise InputError(f"expected dimension {domain.dim}, got shape {x.shape}")
    return np.minimum(np.maximum(x, domain.lo), domain.hi)


@dataclass(frozen=True)
class DeformedField:
    """The scalar field ``f_t``.  Calling it on one point is strict (raises
    on non-finite values); :meth:`evaluate_batch` maps them to ``+inf``."""

    problem: Problem
    params: PenaltyParams = field(default_factory=PenaltyParams)

    @property
    def dim(self) -> int:
        return self.problem.p

    def parts(self, points):
        """Objective values and F values at every row."""
        X = _as_batch(points, self.problem.p)
        f = evaluate_batch(self.problem.objective, X)
        return f, feasibility_batch(self.problem, X)

    def evaluate_batch(self, points) -> np.ndarray:
        f, F = self.parts(points)
        K, M, t = self.params.K, self.params.M, self.params.t
        with np.errstate(all="ignore"):
            out = (1.0 - t) * (f - K) + t * M * F
        out[~np.isfinite(out)] = np.inf
        return out

    def __call__(self, point) -> float:
        x = _as_point(point, self.problem.p)
        g, h = constraint_values(self.problem, x)
        _check_finite(self.problem, g[0], h[0])
        f = float(evaluate_batch(self.problem.objective, x.reshape(1, -1))[0])
        if not np.isfinite(f):
            raise EvaluationError(
                f"objective {to_source(self.problem.objective)} is not finite",
                kind="objective",
            )
        F = float(np.abs(g[0]).sum() + (np.abs(h[0]) + h[0]).sum())
        K, M, t = self.params.K, self.params.M, self.params.t
        return (1.0 - t) * (f - K) + t * M * F


def deform(problem: Problem, params: PenaltyParams = PenaltyParams()) -> DeformedField:
    return DeformedField(problem, params)


def constant(value: float = 1.0) -> Expr:
    return Const(float(value))

