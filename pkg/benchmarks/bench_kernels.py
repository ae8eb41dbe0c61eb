"""Compare the compiled and pure-Python hull-projection kernels.

    python benchmarks/bench_kernels.py [--repeats 5] [--seed 0]

For each problem size a batch of random projections is timed with both
kernels; the table reports the median batch time, the speed-up and the
largest disagreement in distance.
"""
import argparse
import statistics
import sys
import time

import numpy as np

from codiffkit import _kernels
from codiffkit.descent import benchmark_suite, minimize

SIZES = [(4, 2), (16, 3), (64, 4), (256, 6), (1024, 8)]


def batch(rng, m, n, count):
    out = []
    for _ in range(count):
        V = rng.normal(size=(m, n))
        q = rng.normal(size=n) * 2 if rng.uniform() < 0.5 else rng.dirichlet(np.ones(m)) @ V
        out.append((np.ascontiguousarray(V), q))
    return out


def time_batch(kernel, problems, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for V, q in problems:
            kernel(V, q, 1e-11, 10_000, 1e-14)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=50, help="projections per batch")
    args = ap.parse_args(argv)

    if _kernels.compiled_min_norm_fw is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'m x n':>10} {'compiled ms':>12} {'python ms':>10} {'speed-up':>9} {'max |d diff|':>13}")
    for m, n in SIZES:
        problems = batch(rng, m, n, args.count)
        tc = time_batch(_kernels.compiled_min_norm_fw, problems, args.repeats)
        tp = time_batch(_kernels.python_min_norm_fw, problems, args.repeats)
        diff = max(abs(_kernels.compiled_min_norm_fw(V, q, 1e-11, 10_000, 1e-14)[0]
                       - _kernels.python_min_norm_fw(V, q, 1e-11, 10_000, 1e-14)[0])
                   for V, q in problems)
        print(f"{m:>5} x {n:<2} {1e3 * tc / args.count:>12.4f} {1e3 * tp / args.count:>10.4f} "
              f"{tp / tc:>8.1f}x {diff:>13.1e}")

    # end to end: the descent suite under each kernel
    suite = [b for b in benchmark_suite() if b.check == "unconstrained"]
    for name, kernel in (("compiled", _kernels.compiled_min_norm_fw),
                         ("python", _kernels.python_min_norm_fw)):
        _kernels.min_norm_fw = kernel
        t0 = time.perf_counter()
        for b in suite:
            minimize(b.problem.objective, b.start)
        print(f"descent suite ({len(suite)} problems), {name} kernel: "
              f"{time.perf_counter() - t0:.3f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
