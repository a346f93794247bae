"""Run every built-in example with every solver and write the result tables.

    python scripts/run_tables.py --seeds 0 1 2 3 --out results/
"""
import argparse
from pathlib import Path

from deformopt.bench import EXAMPLE_IDS, SOLVERS, emit_report, run_benchmark
from deformopt.problem import PenaltyParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--K", type=float, default=100.0)
    ap.add_argument("--M", type=float, default=10000.0)
    ap.add_argument("--t", type=float, default=0.95)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", type=Path, help="directory for tables.md and tables.csv")
    args = ap.parse_args()

    params = PenaltyParams(args.K, args.M, args.t)
    rows = []
    for solver in SOLVERS:
        rows += run_benchmark(EXAMPLE_IDS, solver, params, seeds=args.seeds, workers=args.workers)

    md = emit_report(rows, "markdown")
    print(md)
    for r in rows:
        if r.feasibility > 1e-6:
            seed = "" if r.seed is None else f" (seed {r.seed})"
            print(f"note: {r.solver} on {r.example}{seed} ends with F = {r.feasibility:.3g}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "tables.md").write_text(md)
        (args.out / "tables.csv").write_text(emit_report(rows, "csv"))


if __name__ == "__main__":
    main()
