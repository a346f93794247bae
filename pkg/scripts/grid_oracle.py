"""Brute-force grid optimum for the built-in examples with p <= 3.

    python scripts/grid_oracle.py 5.3 5.4 --step 0.05 --tol 1e-3
"""
import argparse
import time

from deformopt.bench import builtin_example, grid_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("examples", nargs="*", default=["5.1", "5.2", "5.3", "5.4", "5.45", "5.8", "5.9"])
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args()

    for ex in args.examples:
        prob = builtin_example(ex)
        if prob.p > 3:
            print(f"{ex}: skipped (p = {prob.p})")
            continue
        t0 = time.perf_counter()
        value, point, n = grid_oracle(prob, args.step, args.tol)
        where = "-" if point is None else "(" + ", ".join(f"{v:.4g}" for v in point) + ")"
        print(f"{ex}: value {value!r} at {where}, {n} feasible grid points, "
              f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
