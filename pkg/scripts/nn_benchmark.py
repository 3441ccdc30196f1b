"""Timing comparison of the two neighbor-search routes.

The brute-force route is vectorized but quadratic; the tree route is
plain Python but n log n. This prints where the crossover lands on the
current machine.

    python scripts/nn_benchmark.py --sizes 500 1000 2000 4000 8000
"""

import argparse
import time

import numpy as np

from crowdmark import KdTree, brute_force_all_nn


def best_of(fn, runs):
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+",
                    default=[500, 1000, 2000, 4000, 8000])
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'n':>7}  {'brute (s)':>10}  {'tree (s)':>10}  ratio")
    for n in args.sizes:
        pts = rng.uniform(0, 1000, size=(n, 2))
        k = min(args.k, n - 1)

        def brute():
            brute_force_all_nn(pts, k=k)

        def tree_route():
            tree = KdTree(pts)
            for i in range(n):
                tree.query(i, k)

        tb = best_of(brute, args.runs)
        tt = best_of(tree_route, args.runs)
        print(f"{n:>7}  {tb:>10.4f}  {tt:>10.4f}  {tb / tt:>5.2f}")


if __name__ == "__main__":
    main()
