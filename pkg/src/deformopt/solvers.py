"""Box-constrained minimizers for black-box scalar fields.

A *field* is either a plain callable ``f(x) -> float`` on 1-d arrays or an
object with an ``evaluate_batch(X) -> values`` method taking rows of points
(such as :class:`deformopt.problem.DeformedField`).  Non-finite values and
evaluation errors score ``+inf`` and are never selected as best.

Randomness comes from numpy's PCG64 generator seeded with the run seed, so
runs are reproducible across platforms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from .errors import DeformoptError, EvaluationError, InputError, SolverError
from .problem import BoxDomain, clamp_to_box

__all__ = [
    "PsoConfig",
    "PatternConfig",
    "DescentConfig",
    "RunResult",
    "pso_minimize",
    "pattern_search_minimize",
    "descent_minimize",
    "finite_difference_gradient",
    "evaluate_field",
    "make_rng",
]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 100
    max_iters: int = 2000
    inertia: float = 0.7298
    c1: float = 1.49618
    c2: float = 1.49618
    seed: int = 0
    # "particle": one r1, r2 per particle per step; "dimension": one per coordinate
    random_scope: str = "particle"

    def __post_init__(self):
        if self.random_scope not in ("particle", "dimension"):
            raise InputError("random_scope must be 'particle' or 'dimension'")
        if self.swarm_size < 2:
            raise InputError("swarm_size must be at least 2")
        if self.max_iters < 1:
            raise InputError("max_iters must be positive")
        if not 0.0 <= self.inertia < 1.0:
            raise InputError("inertia must lie in [0, 1)")
        if self.c1 < 0 or self.c2 < 0:
            raise InputError("acceleration coefficients must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class PatternConfig:
    initial_mesh: float = 1.0
    contraction: float = 0.5
    expansion: float = 2.0
    mesh_tol: float = 1e-8
    max_iters: int = 100_000

    def __post_init__(self):
        if not self.initial_mesh > 0:
            raise InputError("initial_mesh must be positive")
        if not 0.0 < self.contraction < 1.0:
            raise InputError("contraction must lie in (0, 1)")
        if self.expansion < 1.0:
            raise InputError("expansion must be at least 1")
        if not 0.0 < self.mesh_tol < self.initial_mesh:
            raise InputError("mesh_tol must lie in (0, initial_mesh)")
        if self.max_iters < 1:
            raise InputError("max_iters must be positive")


@dataclass(frozen=True)
class DescentConfig:
    """Projected descent settings.

    The search direction is the smallest-norm convex combination of
    central-difference gradients taken at the iterate and at
    ``sample_count`` points drawn within ``sample_radius`` of it.  In smooth
    regions this is just the gradient; across a kink it cancels the
    components that would make the iterates zigzag.  The radius shrinks by
    ``radius_factor`` whenever the direction becomes shorter than
    ``grad_tol`` (scaled by the radius) or the line search fails, down to
    ``min_radius``.  ``sample_count=0`` gives plain projected gradient
    descent.
    """

    fd_step: float = 1e-6
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    grad_tol: float = 1e-8
    max_iters: int = 50_000
    sample_radius: float = 0.1
    min_radius: float = 1e-6
    radius_factor: float = 0.1
    sample_count: Optional[int] = None  # default: 2 * p
    max_halvings: int = 60
    seed: int = 0

    def __post_init__(self):
        for name in ("fd_step", "initial_step", "grad_tol", "sample_radius", "min_radius"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        for name in ("backtrack", "armijo", "radius_factor"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise InputError(f"{name} must lie in (0, 1)")
        if self.max_iters < 1 or self.max_halvings < 1:
            raise InputError("iteration limits must be positive")
        if self.sample_count is not None and self.sample_count < 0:
            raise InputError("sample_count must be nonnegative")


@dataclass
class RunResult:
    best_point: np.ndarray
    best_value: float
    iterations_used: int
    evaluations_used: int
    history: list = field(default_factory=list)  # (iteration, best-so-far value)
    stalled: bool = False
    message: str = ""


class _Counter:
    """Wraps a field, counting evaluations and mapping failures to +inf."""

    def __init__(self, fn, dim):
        self.fn = fn
        self.dim = dim
        self.count = 0
        self._batched = hasattr(fn, "evaluate_batch")

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        self.count += len(X)
        if self._batched:
            vals = np.array(self.fn.evaluate_batch(X), dtype=float)
        else:
            vals = np.empty(len(X))
            for i, x in enumerate(X):
                try:
                    with np.errstate(all="ignore"):
                        vals[i] = float(self.fn(x))
                except (DeformoptError, ArithmeticError, ValueError):
                    vals[i] = np.inf
        vals[~np.isfinite(vals)] = np.inf
        return vals


def evaluate_field(fn, points) -> np.ndarray:
    """Evaluate a field at rows of ``points`` with non-finite mapped to +inf."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    return _Counter(fn, X.shape[1])(X)


def _check_start(domain, start):
    x = np.asarray(start, dtype=float)
    if x.shape != (domain.dim,):
        raise InputError(f"start must have dimension {domain.dim}, got shape {x.shape}")
    if not domain.contains(x):
        raise InputError(f"start {tuple(x)} lies outside the box")
    return x.copy()


# ---------------------------------------------------------------------------
# particle swarm


def pso_minimize(fn, domain: BoxDomain, config: PsoConfig = PsoConfig()) -> RunResult:
    """Global-best particle swarm.

    Positions start uniformly in the box with zero velocity.  Each step
    applies ``v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x)`` and clamps
    the new position to the box, leaving the velocity as is.

    With the default ``random_scope="particle"`` the factors ``r1, r2`` are
    scalars per particle, so the update is an affine combination of points
    and a swarm lying on an affine set (an equality-constrained valley of a
    penalized field) stays on it.  ``"dimension"`` draws them per coordinate.
    """
    f = _Counter(fn, domain.dim)
    rng = make_rng(config.seed)
    lo, hi = domain.lo, domain.hi
    S, p = config.swarm_size, domain.dim
    rshape = (S, 1) if config.random_scope == "particle" else (S, p)

    X = lo + rng.random((S, p)) * (hi - lo)
    V = np.zeros((S, p))
    vals = f(X)
    if not np.isfinite(vals).any():
        raise SolverError("every particle of the initial swarm evaluated to a non-finite value")
    pbest, pval = X.copy(), vals.copy()
    k = int(np.argmin(pval))
    gbest, gval = pbest[k].copy(), float(pval[k])
    history = [(0, gval)]

    for it in range(1, config.max_iters + 1):
        r1 = rng.random(rshape)
        r2 = rng.random(rshape)
        V = config.inertia * V + config.c1 * r1 * (pbest - X) + config.c2 * r2 * (gbest - X)
        X = clamp_to_box(domain, X + V)
        vals = f(X)
        better = vals < pval
        pbest[better] = X[better]
        pval[better] = vals[better]
        k = int(np.argmin(pval))
        if pval[k] < gval:
            gbest, gval = pbest[k].copy(), float(pval[k])
            history.append((it, gval))
    if history[-1][0] != config.max_iters:
        history.append((config.max_iters, gval))
    return RunResult(gbest, gval, config.max_iters, f.count, history)


# ---------------------------------------------------------------------------
# compass pattern search


def pattern_search_minimize(
    fn, domain: BoxDomain, start, config: PatternConfig = PatternConfig()
) -> RunResult:
    """Compass search polling ``+e1, -e1, +e2, ...`` at mesh size ``delta``.

    The first poll point that strictly improves is accepted and the mesh is
    expanded (never beyond the initial mesh); a failed poll contracts it.
    """
    x = _check_start(domain, start)
    f = _Counter(fn, domain.dim)
    p = domain.dim
    fx = float(f(x)[0])
    directions = np.zeros((2 * p, p))
    for i in range(p):
        directions[2 * i, i] = 1.0
        directions[2 * i + 1, i] = -1.0

    delta = config.initial_mesh
    history = [(0, fx)]
    it = 0
    while it < config.max_iters and delta >= config.mesh_tol:
        it += 1
        polls = clamp_to_box(domain, x + delta * directions)
        vals = f(polls)
        hits = np.flatnonzero(vals < fx)
        if hits.size:
            j = int(hits[0])
            x, fx = polls[j].copy(), float(vals[j])
            delta = min(delta * config.expansion, config.initial_mesh)
            history.append((it, fx))
        else:
            delta *= config.contraction
    if history[-1][0] != it:
        history.append((it, fx))
    return RunResult(x, fx, it, f.count, history, message=f"final mesh {delta:.3g}")


# ---------------------------------------------------------------------------
# finite differences and projected descent


def _fd_points(x, h):
    p = len(x)
    steps = h * np.eye(p)
    return np.concatenate([x + steps, x - steps])


def _fd_from_values(vals, fx, h):
    # vals holds f(x + h e_i) for i < p, then f(x - h e_i)
    p = len(vals) // 2
    up, down = vals[:p], vals[p:]
    grad = np.empty(p)
    for i in range(p):
        if np.isfinite(up[i]) and np.isfinite(down[i]):
            grad[i] = (up[i] - down[i]) / (2 * h)
        elif np.isfinite(up[i]) and np.isfinite(fx):
            grad[i] = (up[i] - fx) / h
        elif np.isfinite(down[i]) and np.isfinite(fx):
            grad[i] = (fx - down[i]) / h
        else:
            return None
    return grad


def finite_difference_gradient(fn, point, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient, falling back to a one-sided difference
    in any coordinate where a neighbour is not finite."""
    if not h > 0:
        raise InputError("h must be positive")
    x = np.asarray(point, dtype=float)
    f = _Counter(fn, len(x))
    vals = f(_fd_points(x, h))
    fx = float(f(x)[0]) if not np.isfinite(vals).all() else np.nan
    grad = _fd_from_values(vals, fx, h)
    if grad is None:
        raise EvaluationError("both finite-difference neighbours are non-finite")
    return grad


def _min_norm_in_hull(G):
    """Smallest-norm point of the convex hull of the rows of ``G``."""
    if len(G) == 1:
        return G[0]
    scale = np.abs(G).max()
    if scale == 0.0:
        return G[0]
    A = G.T / scale
    rho = 1e4 * max(1.0, float(np.sqrt(len(G))))
    A = np.vstack([A, rho * np.ones(len(G))])
    b = np.zeros(A.shape[0])
    b[-1] = rho
    lam, _ = nnls(A, b, maxiter=50 * len(G))
    total = lam.sum()
    if total <= 0:
        return G[0]
    return (lam / total) @ G


def _projected_step(domain, x, d):
    # x - clamp(x - d): zero in coordinates where d pushes against a face
    return x - clamp_to_box(domain, x - d)


def descent_minimize(
    fn, domain: BoxDomain, start, config: DescentConfig = DescentConfig()
) -> RunResult:
    """Projected descent with finite-difference gradients and Armijo
    backtracking; see :class:`DescentConfig` for the direction rule."""
    x = _check_start(domain, start)
    f = _Counter(fn, domain.dim)
    p = domain.dim
    rng = make_rng(config.seed)
    h = config.fd_step
    k = 2 * p if config.sample_count is None else config.sample_count

    fx = float(f(x)[0])
    if not np.isfinite(fx):
        raise InputError("field is not finite at the start point")

    radius = config.sample_radius if k else config.min_radius
    history = [(0, fx)]
    stalled = False
    message = "max_iters reached"
    it = 0
    while it < config.max_iters:
        it += 1
        centers = [x]
        if k:
            u = rng.normal(size=(k, p))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            u *= rng.random((k, 1)) ** (1.0 / p)
            centers += list(x + radius * u)
        vals = f(np.concatenate([_fd_points(c, h) for c in centers]))
        grads = []
        for j in range(len(centers)):
            g = _fd_from_values(vals[2 * p * j : 2 * p * (j + 1)], fx if j == 0 else np.nan, h)
            if g is not None:
                grads.append(g)
        if not grads:
            stalled, message = True, "no finite gradient near the iterate"
            break
        d = _min_norm_in_hull(np.array(grads))
        step = _projected_step(domain, x, d)
        tol = config.grad_tol * max(1.0, radius / config.min_radius) if k else config.grad_tol
        if np.linalg.norm(step) < tol:
            y = clamp_to_box(domain, x - d)
            if np.any(y != x - d) and np.any(y != x):
                # a face within reach: land on it exactly before testing stationarity
                fy = float(f(y)[0])
                if fy < fx:
                    x, fx = y, fy
                    history.append((it, fx))
                    continue
            if radius <= config.min_radius or not k:
                message = "converged"
                break
            radius = max(radius * config.radius_factor, config.min_radius)
            continue

        alpha = config.initial_step
        accepted = False
        for _ in range(config.max_halvings):
            y = clamp_to_box(domain, x - alpha * d)
            fy = float(f(y)[0])
            if fy <= fx - config.armijo * float(d @ (x - y)) and fy < fx:
                accepted = True
                break
            alpha *= config.backtrack
        if accepted:
            x, fx = y, fy
            history.append((it, fx))
        elif k and radius > config.min_radius:
            radius = max(radius * config.radius_factor, config.min_radius)
        else:
            stalled, message = True, "line search failed"
            break
    if history[-1][0] != it:
        history.append((it, fx))
    return RunResult(x, fx, it, f.count, history, stalled=stalled, message=message)
