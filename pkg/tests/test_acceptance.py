"""Exit criteria 1-9.

One summary line per criterion is printed at the end of the run by the hook
in ``conftest.py``.  Tolerances are the pinned ones; nothing here is tuned to
the results.
"""
import io
import subprocess
import sys
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from deformopt.applications import fixed_point_residual
from deformopt.bench import START_POINTS, builtin_example, builtin_selfmap, grid_oracle, solve_problem
from deformopt.cli import main
from deformopt.problem import PenaltyParams, constraint_report, feasibility_measure

DEFAULTS = PenaltyParams(K=100, M=10000, t=0.95)
SOLVERS = ("pso", "pattern", "descent")
ROOT = Path(__file__).resolve().parents[1]

# brute-force optimum of 5.3 over the 0.05 grid with F <= 1e-3, computed once
# with scripts/grid_oracle.py and frozen here
GRID_53 = 0.6324603174603174


@lru_cache(maxsize=None)
def run(example, solver, seed=0):
    start = None if solver == "pso" else START_POINTS[example]
    return solve_problem(builtin_example(example), solver, DEFAULTS, None, start, example,
                         seed if solver == "pso" else None)


def criterion(n):
    return pytest.mark.acceptance(n)


# 1 -------------------------------------------------------------------------


@criterion(1)
@pytest.mark.parametrize("solver", SOLVERS)
def test_c1_example_51(solver):
    row = run("5.1", solver)
    if solver == "descent":
        assert abs(row.raw_objective_value - (-3.9694)) <= 5e-2
    else:
        assert abs(row.raw_objective_value - (-4.0)) <= 1e-3
    assert row.feasibility <= 1e-4
    assert np.max(np.abs(np.array(row.point) - (0.0, 1.0))) <= 2e-2


# 2 -------------------------------------------------------------------------


@criterion(2)
def test_c2_example_545_pso():
    row = run("5.45", "pso")
    assert abs(row.raw_objective_value - 12.6) <= 0.1
    assert row.report.max_eq_residual <= 1e-3


# 3 -------------------------------------------------------------------------


@criterion(3)
def test_c3_example_58_unique_point():
    # the two equalities alone pin the point down
    oracle = np.linalg.solve([[3.0, 4.0], [1.0, 1.0]], [6.0, 2.0])
    assert np.allclose(oracle, (2.0, 0.0), atol=1e-14)
    prob = builtin_example("5.8")
    assert feasibility_measure(prob, oracle) <= 1e-12
    assert feasibility_measure(prob, (2.0, 0.0)) == 0.0

    rows = [run("5.8", s) for s in SOLVERS]
    hits = [
        r for r in rows
        if np.max(np.abs(np.array(r.point) - oracle)) <= 1e-2 and abs(r.raw_objective_value - 16) <= 0.1
    ]
    assert hits, [(r.solver, r.point) for r in rows]
    # any output that is feasible has to be the unique feasible point
    for r in rows:
        if r.feasibility <= 1e-3:
            assert np.max(np.abs(np.array(r.point) - oracle)) <= 1e-2


# 4 -------------------------------------------------------------------------


@criterion(4)
@pytest.mark.parametrize("solver", ["pso", "descent"])
def test_c4_example_55_residual(solver):
    row = run("5.5", solver)
    assert fixed_point_residual(builtin_selfmap("5.5"), row.point) <= 1e-6


@criterion(4)
def test_c4_example_55_pattern_exact_origin():
    row = run("5.5", "pattern")
    assert START_POINTS["5.5"] == (0.0,) * 5
    assert row.point == (0.0,) * 5


# 5 -------------------------------------------------------------------------


@criterion(5)
@pytest.mark.parametrize("solver", SOLVERS)
def test_c5_example_56(solver):
    row = run("5.6", solver)
    assert fixed_point_residual(builtin_selfmap("5.6"), row.point) <= 1e-5
    target = np.array([0.018, 0.291, 0.019, -0.921, -0.007])
    assert np.max(np.abs(np.array(row.point) - target)) <= 5e-2


# 6 -------------------------------------------------------------------------


@criterion(6)
def test_c6_example_59_some_solver_feasible():
    values = {s: run("5.9", s).feasibility for s in SOLVERS}
    assert min(values.values()) <= 1e-6, values


@criterion(6)
def test_c6_example_59_check_known_point():
    out = io.StringIO()
    assert main(["check", "--example", "5.9", "--start", "0,1"], out=out) == 0
    lines = out.getvalue().splitlines()
    assert "F = 0" in lines
    assert feasibility_measure(builtin_example("5.9"), (0.0, 1.0)) == 0.0


# 7 -------------------------------------------------------------------------


@criterion(7)
@pytest.mark.parametrize("solver", SOLVERS)
def test_c7_example_54(solver):
    row = run("5.4", solver)
    assert abs(row.raw_objective_value - 2.4397) <= 2e-2, row.point
    assert constraint_report(builtin_example("5.4"), row.point).max_ineq_value <= 1e-6


# 8 -------------------------------------------------------------------------


@criterion(8)
def test_c8_grid_oracle_is_reproducible():
    value, point, n = grid_oracle(builtin_example("5.3"), step=0.05, tol=1e-3)
    assert value == GRID_53
    assert n > 0


@criterion(8)
def test_c8_example_53_against_grid():
    prob = builtin_example("5.3")
    feasible = {}
    for s in SOLVERS:
        row = run("5.3", s)
        if row.feasibility <= 1e-6 and prob.domain.contains(row.point):
            feasible[s] = row.raw_objective_value
    assert feasible
    best = min(feasible.values())
    assert abs(best - GRID_53) <= 5e-2, feasible
    # nothing feasible may undercut the grid by more than its resolution
    for v in feasible.values():
        assert v >= GRID_53 - 5e-2


# 9 -------------------------------------------------------------------------


@criterion(9)
def test_c9_property_suites():
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-m", "property", "-p", "no:cacheprovider", "tests"],
        cwd=ROOT, capture_output=True, text=True,
    )
    tail = "\n".join(proc.stdout.splitlines()[-15:])
    assert proc.returncode == 0, tail
    assert " passed" in tail and "failed" not in tail
