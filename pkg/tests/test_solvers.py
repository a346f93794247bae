import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from closed_forms import CLOSED_FORMS, GRADIENTS
from deformopt.errors import EvaluationError, InputError, SolverError
from deformopt.bench import builtin_example
from deformopt.problem import BoxDomain, deform
from deformopt.solvers import (
    DescentConfig,
    PatternConfig,
    PsoConfig,
    descent_minimize,
    evaluate_field,
    finite_difference_gradient,
    pattern_search_minimize,
    pso_minimize,
)


class Field:
    """Batch field from a row-wise numpy function."""

    def __init__(self, fn):
        self.fn = fn

    def evaluate_batch(self, X):
        with np.errstate(all="ignore"):
            return self.fn(np.atleast_2d(X))

    def __call__(self, x):
        return float(self.evaluate_batch(x)[0])


def quad(center, weights=None):
    c = np.asarray(center, dtype=float)
    w = np.ones_like(c) if weights is None else np.asarray(weights, dtype=float)
    return Field(lambda X: ((X - c) ** 2 * w).sum(axis=1))


BOX2 = BoxDomain.cube(2)


# ---------------------------------------------------------------------------
# finite differences


def test_fd_examples():
    g = finite_difference_gradient(lambda x: x[0] ** 2, (3.0,))
    assert g[0] == pytest.approx(6.0, abs=1e-6)
    g = finite_difference_gradient(lambda x: x[0] * x[1], (2.0, 5.0))
    assert g == pytest.approx([5.0, 2.0], abs=1e-6)
    f51 = Field(CLOSED_FORMS["5.1"][0])
    assert finite_difference_gradient(f51, (1.0, 1.0)) == pytest.approx([3.0, -2.0], abs=1e-6)


def test_fd_one_sided_fallback():
    # log is undefined left of 0; the gradient at 1e-7 uses the forward difference
    f = Field(lambda X: np.log(X[:, 0]))
    g = finite_difference_gradient(f, (5e-7,))
    assert np.isfinite(g[0]) and g[0] > 0


def test_fd_errors():
    with pytest.raises(InputError):
        finite_difference_gradient(lambda x: x[0], (1.0,), h=0.0)
    with pytest.raises(EvaluationError):
        finite_difference_gradient(lambda x: 1.0 / 0.0, (1.0,))


@pytest.mark.property
@pytest.mark.parametrize("ex", sorted(GRADIENTS))
def test_fd_matches_analytic_gradients(ex):
    fn = Field(CLOSED_FORMS[ex][0])
    p = 3 if ex == "5.45" else 2
    rng = np.random.default_rng(5)
    pts = rng.uniform(-10, 10, size=(800, p))
    if ex == "5.2":
        # sextic terms reach 1e6 in the full box, which puts central-difference
        # roundoff above 1e-5; stay in the disk of the first constraint
        pts = pts[(pts ** 2).sum(axis=1) <= 25]
    pts = pts[:100]
    assert len(pts) == 100
    for x in pts:
        fd = finite_difference_gradient(fn, x)
        exact = GRADIENTS[ex](x)
        assert np.all(np.abs(fd - exact) <= 1e-5 * np.maximum(1.0, np.abs(exact)))


def test_evaluate_field_maps_failures_to_inf():
    def bad(x):
        if x[0] < 0:
            raise EvaluationError("nope")
        return np.nan if x[0] == 0 else x[0]

    assert evaluate_field(bad, [[-1.0], [0.0], [2.0]]).tolist() == [np.inf, np.inf, 2.0]


# ---------------------------------------------------------------------------
# particle swarm


def test_pso_finds_quadratic_minimum():
    res = pso_minimize(quad((3, -4)), BOX2, PsoConfig(seed=0))
    assert np.allclose(res.best_point, (3, -4), atol=1e-4)
    assert res.evaluations_used == 100 * 2001
    assert res.iterations_used == 2000


@pytest.mark.property
def test_pso_is_deterministic_per_seed():
    fn = Field(lambda X: np.sin(3 * X[:, 0]) + (X ** 2).sum(axis=1) / 20)
    cfg = PsoConfig(swarm_size=20, max_iters=50, seed=42)
    a = pso_minimize(fn, BOX2, cfg)
    b = pso_minimize(fn, BOX2, cfg)
    assert np.array_equal(a.best_point, b.best_point) and a.history == b.history
    c = pso_minimize(fn, BOX2, PsoConfig(swarm_size=20, max_iters=50, seed=43))
    assert not np.array_equal(a.best_point, c.best_point)


def test_pso_dimension_scope_runs():
    res = pso_minimize(quad((1, 1)), BOX2, PsoConfig(seed=1, random_scope="dimension"))
    assert np.allclose(res.best_point, (1, 1), atol=1e-4)


def test_pso_all_infinite_start_is_error():
    with pytest.raises(SolverError):
        pso_minimize(Field(lambda X: np.full(len(X), np.nan)), BOX2, PsoConfig(max_iters=5))


@pytest.mark.parametrize(
    "kwargs",
    [dict(swarm_size=1), dict(max_iters=0), dict(inertia=1.0), dict(c1=-1.0), dict(seed=-1),
     dict(random_scope="global")],
)
def test_pso_config_validation(kwargs):
    with pytest.raises(InputError):
        PsoConfig(**kwargs)


# ---------------------------------------------------------------------------
# pattern search


def test_pattern_search_lands_on_kink():
    fn = Field(lambda X: np.abs(X[:, 0]) + np.abs(X[:, 1] - 2))
    res = pattern_search_minimize(fn, BOX2, (5, 5))
    assert res.best_point.tolist() == [0.0, 2.0]
    assert res.best_value == 0.0
    assert res.message.startswith("final mesh")


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-8, 8), min_size=2, max_size=2),
    st.lists(st.floats(0.5, 4), min_size=2, max_size=2),
    st.lists(st.integers(-9, 9), min_size=2, max_size=2),
)
def test_pattern_search_convex_quadratic(center, weights, start):
    cfg = PatternConfig()
    res = pattern_search_minimize(quad(center, weights), BOX2, start, cfg)
    assert np.all(np.abs(res.best_point - center) <= 10 * cfg.mesh_tol)


def test_pattern_search_respects_box_and_bad_start():
    res = pattern_search_minimize(quad((20, -20)), BOX2, (0, 0))
    assert res.best_point.tolist() == [10.0, -10.0]
    with pytest.raises(InputError):
        pattern_search_minimize(quad((0, 0)), BOX2, (11, 0))
    with pytest.raises(InputError):
        pattern_search_minimize(quad((0, 0)), BOX2, (1, 2, 3))


@pytest.mark.parametrize(
    "kwargs",
    [dict(initial_mesh=0), dict(contraction=1.0), dict(expansion=0.5), dict(mesh_tol=2.0),
     dict(max_iters=0)],
)
def test_pattern_config_validation(kwargs):
    with pytest.raises(InputError):
        PatternConfig(**kwargs)


# ---------------------------------------------------------------------------
# descent


def test_descent_smooth_quadratic():
    box = BoxDomain.cube(3)
    res = descent_minimize(quad((1, 1, 1)), box, (-5, 7, 2))
    assert np.allclose(res.best_point, 1.0, atol=1e-6)
    assert res.message == "converged"


def test_descent_linear_reaches_corner():
    res = descent_minimize(Field(lambda X: -X[:, 0] - X[:, 1]), BOX2, (0, 0))
    assert res.best_point.tolist() == [10.0, 10.0]


def test_descent_plain_gradient_mode():
    res = descent_minimize(quad((2, -3)), BOX2, (0, 0), DescentConfig(sample_count=0))
    assert np.allclose(res.best_point, (2, -3), atol=1e-6)


def test_descent_handles_kink():
    # gradient sampling gets to the kink of a nonsmooth convex function
    fn = Field(lambda X: np.abs(X[:, 0] - 1) + 2 * np.abs(X[:, 1] + 1))
    res = descent_minimize(fn, BOX2, (6, 4))
    assert np.allclose(res.best_point, (1, -1), atol=1e-5)


def test_descent_rejects_infinite_start():
    fn = Field(lambda X: 1.0 / X[:, 0])
    with pytest.raises(InputError):
        descent_minimize(fn, BOX2, (0, 1))


@pytest.mark.parametrize(
    "kwargs", [dict(fd_step=0), dict(backtrack=1.0), dict(max_iters=0), dict(sample_count=-1)]
)
def test_descent_config_validation(kwargs):
    with pytest.raises(InputError):
        DescentConfig(**kwargs)


# ---------------------------------------------------------------------------
# shared result invariants


def _runs():
    fn = Field(lambda X: (X[:, 0] - 2) ** 2 + np.abs(X[:, 1]) + np.cos(X[:, 0]))
    yield pso_minimize(fn, BOX2, PsoConfig(swarm_size=30, max_iters=200, seed=3))
    yield pattern_search_minimize(fn, BOX2, (-9, 9))
    yield descent_minimize(fn, BOX2, (-9, 9))


@pytest.mark.property
@pytest.mark.parametrize("solver", ["pso", "pattern", "descent"])
def test_bit_identical_reruns_on_example(solver):
    prob = builtin_example("5.45")
    field = deform(prob)
    if solver == "pso":
        run = lambda: pso_minimize(field, prob.domain, PsoConfig(max_iters=300, seed=9))
    elif solver == "pattern":
        run = lambda: pattern_search_minimize(field, prob.domain, (1, 1, 1))
    else:
        run = lambda: descent_minimize(field, prob.domain, (1, 1, 1), DescentConfig(seed=9))
    a, b = run(), run()
    assert a.best_point.tobytes() == b.best_point.tobytes()
    assert a.history == b.history and a.evaluations_used == b.evaluations_used


@pytest.mark.property
@pytest.mark.parametrize("run", list(_runs()), ids=["pso", "pattern", "descent"])
def test_history_monotone_and_point_in_box(run):
    vals = [v for _, v in run.history]
    iters = [i for i, _ in run.history]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert all(b > a for a, b in zip(iters, iters[1:]))
    assert iters[-1] == run.iterations_used
    assert vals[-1] == run.best_value
    assert BOX2.contains(run.best_point)
    assert run.evaluations_used > 0
