"""Command-line entry point.

Exit status: 0 on success, 1 when ``solve``/``fixpoint`` end at a point with
F > tol, 2 on input, parse or usage errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bench
from .applications import brouwer_problem, escaping_samples, fixed_point_residual, parse_selfmap
from .errors import DeformoptError, InputError
from .problem import DEFAULT_FEASIBILITY_TOL, PenaltyParams, constraint_report, feasibility_measure
from .source import parse_problem

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT = 0, 1, 2


def _vector(text):
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}")


def _common(p, solver=True):
    p.add_argument("--K", type=float, default=100.0, help="objective offset (default 100)")
    p.add_argument("--M", type=float, default=10000.0, help="penalty weight (default 10000)")
    p.add_argument("--t", type=float, default=0.95, help="deformation parameter in (0,1)")
    p.add_argument("--start", type=_vector, help="start point, e.g. 1,1")
    p.add_argument("--tol", type=float, default=DEFAULT_FEASIBILITY_TOL, help="feasibility tolerance on F")
    p.add_argument("--out", type=Path, help="also write the report to this file")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    if solver:
        p.add_argument("--solver", choices=bench.SOLVERS, default="pso")
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deformopt",
        description="Constrained minimization through a penalized deformation of the objective.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem file or built-in example")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", type=Path, help="problem file")
    src.add_argument("--example", choices=bench.EXAMPLE_IDS, help="built-in example")
    _common(p)

    p = sub.add_parser("bench", help="run the built-in examples")
    _common(p, solver=False)
    p.add_argument("--solver", choices=bench.SOLVERS, action="append",
                   help="repeatable; default runs all three")
    p.add_argument("--seed", type=int, action="append", help="PSO seed, repeatable (default 0)")
    p.add_argument("--examples", help="comma-separated subset of example ids")
    p.add_argument("--no-timing", action="store_true", help="print '-' for wall time")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("fixpoint", help="find a fixed point of a self-map file")
    p.add_argument("--map", type=Path, required=True, dest="map_path")
    _common(p)

    p = sub.add_parser("check", help="evaluate F and the constraint report at --start")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", type=Path)
    src.add_argument("--example", choices=bench.EXAMPLE_IDS)
    _common(p, solver=False)
    return parser


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as err:
        raise InputError(f"{path}: cannot read file ({err.strerror or err})")


def _load_problem(args):
    if args.example:
        return bench.builtin_example(args.example), bench.START_POINTS[args.example], args.example
    text = _read(args.problem)
    try:
        return parse_problem(text), None, args.problem.stem
    except DeformoptError as err:
        raise type(err)(f"{args.problem}: {err}") from None


def _emit(args, text, out):
    out.write(text if text.endswith("\n") else text + "\n")
    if args.out:
        args.out.write_text(text, encoding="utf-8")


def _fmt_vec(x):
    return "(" + ", ".join(f"{v + 0.0:.6g}" for v in x) + ")"


def cmd_solve(args, out):
    problem, registry_start, name = _load_problem(args)
    start = args.start or (registry_start if args.example else None)
    if args.solver != "pso" and start is None:
        raise InputError(f"--solver {args.solver} needs --start")
    params = PenaltyParams(args.K, args.M, args.t)
    row = bench.solve_problem(problem, args.solver, params, None, start, name,
                              args.seed if args.solver == "pso" else None)
    _emit(args, bench.emit_report([row], args.format), out)
    out.write(f"F = {row.feasibility:.6g}\n")
    return EXIT_OK if row.feasibility <= args.tol else EXIT_INFEASIBLE


def cmd_bench(args, out):
    ids = args.examples.split(",") if args.examples else bench.EXAMPLE_IDS
    params = PenaltyParams(args.K, args.M, args.t)
    rows = []
    for solver in args.solver or bench.SOLVERS:
        rows += bench.run_benchmark(ids, solver, params, seeds=args.seed or [0],
                                    workers=args.workers)
    _emit(args, bench.emit_report(rows, args.format, timing=not args.no_timing), out)
    return EXIT_OK


def cmd_fixpoint(args, out):
    text = _read(args.map_path)
    try:
        selfmap = parse_selfmap(text)
    except DeformoptError as err:
        raise type(err)(f"{args.map_path}: {err}") from None
    if args.solver != "pso" and args.start is None:
        raise InputError(f"--solver {args.solver} needs --start")
    escaped = escaping_samples(selfmap, warn=False)
    if escaped:
        print(f"warning: {escaped} of 10000 sampled points are mapped outside the box",
              file=sys.stderr)
    problem = brouwer_problem(selfmap)
    params = PenaltyParams(args.K, args.M, args.t)
    row = bench.solve_problem(problem, args.solver, params, None, args.start,
                              args.map_path.stem, args.seed if args.solver == "pso" else None)
    residual = fixed_point_residual(selfmap, np.array(row.point))
    text = f"point = {_fmt_vec(row.point)}\nfixed_point_residual = {residual:.6g}\nF = {row.feasibility:.6g}\n"
    _emit(args, text, out)
    return EXIT_OK if row.feasibility <= args.tol else EXIT_INFEASIBLE


def cmd_check(args, out):
    problem, registry_start, _ = _load_problem(args)
    start = args.start or (registry_start if args.example else None)
    if start is None:
        raise InputError("check needs --start")
    x = np.array(start)
    F = feasibility_measure(problem, x)
    rep = constraint_report(problem, x)
    lines = [
        f"point = {_fmt_vec(x)}",
        f"F = {F:.6g}",
        "max|g_i(x)| = " + ("-" if rep.max_eq_residual is None else f"{rep.max_eq_residual:.6g}"),
        "max h_j(x) = " + ("-" if rep.max_ineq_value is None else f"{rep.max_ineq_value:.6g}"),
        f"feasible = {'yes' if F <= args.tol and problem.domain.contains(x) else 'no'}",
    ]
    _emit(args, "\n".join(lines) + "\n", out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "fixpoint": cmd_fixpoint, "check": cmd_check}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except DeformoptError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
