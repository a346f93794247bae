"""Constrained optimization by minimizing a penalized deformation

    f_t = (1 - t)(f - K) + t M F

of the objective with off-the-shelf derivative-free solvers.
"""
from .applications import (
    SelfMap,
    ThresholdSpec,
    brouwer_problem,
    fixed_point_residual,
    parse_selfmap,
    scalarize_sum,
    target_value_problem,
    threshold_problem,
)
from .bench import builtin_example, emit_report, grid_oracle, run_benchmark
from .errors import EvaluationError, InputError, ParseError, SolverError
from .expr import evaluate, parse_expr, parse_expression, to_source, tokenize
from .problem import (
    BoxDomain,
    ConstraintReport,
    PenaltyParams,
    Problem,
    clamp_to_box,
    constraint_report,
    deform,
    feasibility_measure,
    is_feasible,
)
from .solvers import (
    DescentConfig,
    PatternConfig,
    PsoConfig,
    RunResult,
    descent_minimize,
    finite_difference_gradient,
    pattern_search_minimize,
    pso_minimize,
)
from .source import parse_problem

__version__ = "0.1.0"
