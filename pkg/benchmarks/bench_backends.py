#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-numpy fallback.

Run from anywhere after installing the package:

    python3 benchmarks/bench_backends.py

Equivalent to `catsdr bench --mode backends` minus the CSV output.
"""

import argparse

from catsdr.benchmarks import run_backend_benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=200, help="observations per problem")
    parser.add_argument("--p", type=int, default=10, help="predictors per problem")
    args = parser.parse_args()

    rows = run_backend_benchmark(seed=args.seed, n=args.n, p=args.p)
    print(f"{'kernel':12s} {'backend':8s} {'us/call':>12s} {'speedup':>8s}")
    for kernel, backend, us, speedup in rows:
        print(f"{kernel:12s} {backend:8s} {us:12.1f} {speedup:8.2f}")
    if not any(row[1] == "cython" for row in rows):
        print("compiled extension not available; showing the fallback only")


if __name__ == "__main__":
    main()
