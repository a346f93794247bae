"""Built-in test problems, batch runs and table-shaped reports."""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .applications import (
    SelfMap,
    ThresholdSpec,
    brouwer_problem,
    parse_selfmap,
    scalarize_sum,
    threshold_problem,
)
from .errors import DeformoptError, InputError
from .expr import evaluate_batch, parse_expr
from .problem import (
    BoxDomain,
    ConstraintReport,
    PenaltyParams,
    Problem,
    constraint_values,
    deform,
    feasibility_batch,
)
from .source import parse_problem
from .solvers import (
    DescentConfig,
    PatternConfig,
    PsoConfig,
    descent_minimize,
    pattern_search_minimize,
    pso_minimize,
)

EXAMPLE_IDS = ("5.1", "5.2", "5.3", "5.4", "5.45", "5.5", "5.6", "5.8", "5.9")
SOLVERS = ("pso", "pattern", "descent")
BOX = (-10.0, 10.0)

CSV_HEADER = (
    "example,solver,seed,initial_point,deformed_value,raw_value,point,"
    "max_eq_residual,max_ineq_value,wall_time_ms"
)


def _vars(p):
    return "".join(f"var x{i} in [{BOX[0]:g}, {BOX[1]:g}]\n" for i in range(1, p + 1))


# Source text of the problems stated directly in constrained form.
PROBLEM_SOURCES = {
    "5.1": _vars(2) + """\
minimize x1^2 + x1*x2 + x2^2 - 5*x2
eq x1 + x2 = 1
le x1 >= 0
le x2 >= 0
""",
    "5.2": _vars(2) + """\
minimize -(x1 - 3)^6 - (x2 - 4)^6
le x1^2 + x2^2 <= 25
le x1 + x2 >= 7
le x1 >= 0
le x2 >= 0
""",
    "5.3": _vars(3) + """\
minimize 1/(x1*x2*x3) + x1*x2
le 0.5*x1*x3 + 0.25*x1*x2 <= 1
le x1 >= 0
le x2 >= 0
le x3 >= 0
""",
    "5.4": _vars(3) + """\
minimize 1/(x1*x2*x3) + x1*x2 + x3^7
le 0.5*x1*x3 + 0.25*x1*x2 <= 1
le x1 >= 0
le x2 >= 0
le x3 >= 0
""",
    "5.45": _vars(3) + """\
minimize 4*x1 + 10*x2 + 15*x3
eq x1 + 2*x2 + 3*x3 = 3
eq 3*x1 + x2 + 2*x3 = 7.5
le x1 >= 0
le x2 >= 0
le x3 >= 0
""",
}

# Self-maps whose fixed points are sought.
SELFMAP_SOURCES = {
    "5.5": _vars(5) + """\
map 0.5*cos(x1 + x2 - x3^4*x5)*x4
map 0.1*(abs(x1*x2 + x3 - x5) + x4^2)
map (x1 + x3*x4 - (x2 + x5)^2)/30
map (x1 - x2^2 + x3 - x5^2)/12
map (x1 + x2 - (x3 + x5 + x4)^2)/40
""",
    "5.6": _vars(5) + """\
map 0.001*((x1 + 3)^2 + (x2 - 2)^4 + x3^2 + x4^2 + x5)
map 0.01*(x1 + (x2 + 5)^2 + x3 + x4 + (x5 + 2))
map 0.001*(x1^4 + (x4 - 3)^2 + (x5 + 2)^2)
map 0.001*((x3 - 3)^4 + x5^2 + x1^4) - 1
map 0.01*(x1^2 + x2 + x3 - (x5 - 1)^2)
""",
}

# Summed objectives with their constraints (in the problem file dialect).
SUM_OBJECTIVES = {
    "5.8": (
        ("x1^2 - 5*x1 + 7*x2", "-x1^2 - x2^2", "(x1 - 1)^2", "(x2 - 5)^2"),
        ("3*x1 + 4*x2 - 6", "x1 + x2 - 2"),
        ("2*x1 + 3*x2 - 6", "-x1", "-x2"),
    ),
}

# Threshold systems: capped functions, caps and base inequalities.
THRESHOLD_SYSTEMS = {
    "5.9": (
        ("4*x1^2 + x2^2 - x1 - 2", "exp(-x1) - x1 - 2*x2"),
        (1.0, 1.0),
        (
            "2*x1 + x2 - 1",
            "x1^2 - 1",
            "sqrt(x1^2 + x2^2) - x1^3 - 2",
            "-x1^3 + 0.5*(-x2 - x2^3 + abs(x2^3 - x2))",
        ),
    ),
}

START_POINTS = {
    "5.1": (1.0, 1.0),
    "5.2": (1.0, 1.0),
    "5.3": (1.0, 1.0, 1.0),
    "5.4": (1.0, 1.0, 1.0),
    "5.45": (1.0, 1.0, 1.0),
    "5.5": (0.0,) * 5,
    "5.6": (0.0,) * 5,
    "5.8": (1.0, 1.0),
    "5.9": (1.0, 1.0),
}


def _check_id(example_id):
    example_id = str(example_id)
    if example_id not in EXAMPLE_IDS:
        raise InputError(f"unknown example {example_id!r}; choose from {', '.join(EXAMPLE_IDS)}")
    return example_id


def builtin_selfmap(example_id) -> SelfMap:
    example_id = _check_id(example_id)
    if example_id not in SELFMAP_SOURCES:
        raise InputError(f"example {example_id} is not a fixed-point problem")
    return parse_selfmap(SELFMAP_SOURCES[example_id])


def builtin_example(example_id) -> Problem:
    """The registered problem over [-10, 10]^p; sign constraints are kept
    as inequalities rather than folded into the box."""
    example_id = _check_id(example_id)
    if example_id in PROBLEM_SOURCES:
        return parse_problem(PROBLEM_SOURCES[example_id])
    if example_id in SELFMAP_SOURCES:
        return brouwer_problem(builtin_selfmap(example_id))
    domain = BoxDomain.cube(2, *BOX)
    if example_id in SUM_OBJECTIVES:
        objs, eqs, les = SUM_OBJECTIVES[example_id]
        return scalarize_sum(
            [parse_expr(s, 2) for s in objs],
            domain,
            [parse_expr(s, 2) for s in eqs],
            [parse_expr(s, 2) for s in les],
        )
    funcs, caps, les = THRESHOLD_SYSTEMS[example_id]
    spec = ThresholdSpec(
        tuple(parse_expr(s, 2) for s in funcs),
        caps,
        domain,
        inequalities=tuple(parse_expr(s, 2) for s in les),
    )
    return threshold_problem(spec)


# ---------------------------------------------------------------------------
# batch runs


@dataclass
class BenchRow:
    example: str
    solver: str
    seed: Optional[int]
    initial_point: Optional[tuple]
    deformed_value: float
    raw_objective_value: float
    point: tuple
    report: ConstraintReport
    wall_time: float  # seconds
    feasibility: float = float("nan")
    stalled: bool = False
    error: Optional[str] = None


def _lenient_report(problem, x):
    g, h = constraint_values(problem, x)
    return ConstraintReport(
        float(np.abs(g[0]).max()) if problem.m else None,
        float(h[0].max()) if problem.n else None,
    )


def solve_problem(
    problem: Problem,
    solver: str,
    params: PenaltyParams = PenaltyParams(),
    config=None,
    start=None,
    example: str = "-",
    seed: Optional[int] = None,
) -> BenchRow:
    """Deform, minimize with one solver and measure the returned point."""
    if solver not in SOLVERS:
        raise InputError(f"unknown solver {solver!r}")
    field = deform(problem, params)
    t0 = time.perf_counter()
    if solver == "pso":
        config = config or PsoConfig()
        if seed is not None:
            config = replace(config, seed=seed)
        seed = config.seed
        result = pso_minimize(field, problem.domain, config)
        start = None
    else:
        if start is None:
            raise InputError(f"solver {solver} needs a start point")
        if solver == "pattern":
            result = pattern_search_minimize(field, problem.domain, start, config or PatternConfig())
        else:
            result = descent_minimize(field, problem.domain, start, config or DescentConfig())
        seed = None
    elapsed = time.perf_counter() - t0
    x = np.asarray(result.best_point, dtype=float)
    return BenchRow(
        example=example,
        solver=solver,
        seed=seed,
        initial_point=None if start is None else tuple(float(v) for v in start),
        deformed_value=float(result.best_value),
        raw_objective_value=float(evaluate_batch(problem.objective, x.reshape(1, -1))[0]),
        point=tuple(float(v) for v in x),
        report=_lenient_report(problem, x),
        wall_time=elapsed,
        feasibility=float(feasibility_batch(problem, x)[0]),
        stalled=result.stalled,
    )


def run_benchmark(
    ids: Sequence[str],
    solver: str,
    params: PenaltyParams = PenaltyParams(),
    config=None,
    seeds: Sequence[int] = (0,),
    starts: Optional[dict] = None,
    workers: int = 1,
) -> list:
    """One row per example (and per seed for PSO), in input order.

    Solver failures become rows with ``error`` set instead of aborting.
    """
    ids = [_check_id(i) for i in ids]
    if not ids:
        raise InputError("no examples given")
    if solver not in SOLVERS:
        raise InputError(f"unknown solver {solver!r}")
    seeds = list(seeds)
    if solver == "pso" and not seeds:
        raise InputError("PSO runs need at least one seed")
    starts = {**START_POINTS, **(starts or {})}

    jobs = []
    for ex in ids:
        for seed in seeds if solver == "pso" else [None]:
            jobs.append((ex, seed))

    def run(job):
        ex, seed = job
        problem = builtin_example(ex)
        start = None if solver == "pso" else starts[ex]
        try:
            return solve_problem(problem, solver, params, config, start, ex, seed)
        except DeformoptError as err:
            nan = float("nan")
            return BenchRow(ex, solver, seed, start, nan, nan, (nan,) * problem.p,
                            ConstraintReport(), 0.0, error=str(err))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


# ---------------------------------------------------------------------------
# reports


def _num(v) -> str:
    if v is None:
        return "-"
    v = float(v)
    if np.isnan(v):
        return "nan"
    return f"{v + 0.0:.6g}"


def _vec(values) -> str:
    if values is None:
        return "-"
    return "(" + ";".join(_num(v) for v in values) + ")"


def emit_report(rows: Sequence[BenchRow], fmt: str = "markdown", timing: bool = True) -> str:
    """Render rows as markdown tables (one per solver) or CSV.

    ``timing=False`` prints ``-`` for wall time so that output is
    reproducible byte for byte.
    """
    if not rows:
        raise InputError("no rows to report")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        buf.write(CSV_HEADER + "\n")
        for r in rows:
            writer.writerow([
                r.example,
                r.solver,
                "-" if r.seed is None else r.seed,
                _vec(r.initial_point),
                _num(r.deformed_value),
                _num(r.raw_objective_value),
                _vec(r.point),
                _num(r.report.max_eq_residual),
                _num(r.report.max_ineq_value),
                f"{r.wall_time * 1e3:.3f}" if timing else "-",
            ])
        return buf.getvalue()
    if fmt != "markdown":
        raise InputError(f"unknown report format {fmt!r}")

    out = []
    for solver in dict.fromkeys(r.solver for r in rows):
        out.append(f"### {solver}\n")
        out.append(
            "| example | seed | initial point | value | x | max\\|g_i(x)\\| | max h_j(x) | wall time (ms) |"
        )
        out.append("|---|---|---|---|---|---|---|---|")
        for r in rows:
            if r.solver != solver:
                continue
            cells = [
                r.example,
                "-" if r.seed is None else str(r.seed),
                _vec(r.initial_point),
                _num(r.raw_objective_value),
                _vec(r.point),
                _num(r.report.max_eq_residual),
                _num(r.report.max_ineq_value),
                f"{r.wall_time * 1e3:.1f}" if timing else "-",
            ]
            if r.error:
                cells[3] = f"error: {r.error}"
            out.append("| " + " | ".join(cells) + " |")
        out.append("")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# brute-force oracle


def grid_oracle(problem: Problem, step: float = 0.05, tol: float = 1e-3, chunk: int = 1 << 20):
    """Best objective value over the feasible points of a regular grid.

    A grid point counts as feasible when F <= ``tol``.  Returns
    ``(value, point, n_feasible)``; ``value`` is ``inf`` and ``point`` is
    ``None`` when no grid point qualifies.
    """
    lo, hi = problem.domain.lo, problem.domain.hi
    counts = np.rint((hi - lo) / step).astype(int) + 1
    axes = [np.linspace(a, b, n) for a, b, n in zip(lo, hi, counts)]
    total = int(np.prod(counts))
    best_val, best_pt, n_feasible = np.inf, None, 0
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), counts)
        X = np.column_stack([ax[i] for ax, i in zip(axes, idx)])
        F = feasibility_batch(problem, X)
        ok = F <= tol
        if not ok.any():
            continue
        X = X[ok]
        f = evaluate_batch(problem.objective, X)
        good = np.isfinite(f)
        n_feasible += int(good.sum())
        if good.any():
            k = int(np.argmin(np.where(good, f, np.inf)))
            if f[k] < best_val:
                best_val, best_pt = float(f[k]), X[k].copy()
    return best_val, best_pt, n_feasible
