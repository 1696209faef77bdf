"""Micro-benchmark comparing the compiled geometry/assignment kernels with
the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--sizes 10,50,200] [--repeats 5]
"""
import argparse
import timeit

import numpy as np

from ltrack._kernels import _ref


def _backends():
    backends = [("python", _ref)]
    try:
        from ltrack._kernels import _core
        backends.insert(0, ("cython", _core))
    except ImportError:
        print("compiled kernels unavailable; benchmarking fallback only")
    return backends


def random_boxes(rng, n):
    xy = rng.uniform(0, 1000, (n, 2))
    wh = rng.uniform(5, 120, (n, 2))
    return np.hstack([xy, wh])


def bench(fn, repeats):
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10,50,200,500",
                        help="comma-separated problem sizes")
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(args.seed)
    backends = _backends()

    print(f"{'kernel':<12}{'n':>6}" +
          "".join(f"{name:>14}" for name, _ in backends) +
          ("  speedup" if len(backends) == 2 else ""))
    for n in sizes:
        a, b = random_boxes(rng, n), random_boxes(rng, n)
        cost = rng.uniform(0, 10, (n, n))
        for kernel, make in (
                ("iou_matrix", lambda mod: lambda: mod.iou_matrix(a, b)),
                ("lap_solve", lambda mod: lambda: mod.lap_solve(cost))):
            times = [bench(make(mod), args.repeats) for _, mod in backends]
            row = f"{kernel:<12}{n:>6}" + \
                "".join(f"{t * 1e3:>12.3f}ms" for t in times)
            if len(times) == 2:
                row += f"  {times[1] / times[0]:>6.1f}x"
            print(row)


if __name__ == "__main__":
    main()
