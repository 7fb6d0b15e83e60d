"""Time the compiled and pure-Python trajectory kernels on the same workload.

    python benchmarks/bench_kernels.py [--trials N] [--repeat R]
"""

import argparse
import time

import numpy as np

from qjpd import kernels
from qjpd.rates import SunModel


def bench(kernel, up, down, trials, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        end = np.zeros(trials, np.int8)
        read = np.zeros(trials, np.int8)
        jumps = np.zeros(trials, np.int64)
        t0 = time.perf_counter()
        kernel.run_trials(up, down, 1e-2, 12345, 0, 0.0, 0.0, end, read, jumps)
        best = min(best, time.perf_counter() - t0)
        out = (end, read, jumps)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sun-nW", type=float, default=20.0)
    args = ap.parse_args()
    rs = SunModel.fitted().rates(args.sun_nW * 1e-9, 127.5)
    results = {}
    for name, kern in sorted(kernels.BACKENDS.items()):
        t, out = bench(kern, rs.up, rs.down, args.trials, args.repeat)
        results[name] = (t, out)
        print(f"{name:8s} {t * 1e3:9.2f} ms  {args.trials / t / 1e6:7.3f} Mtrials/s")
    if "cython" in results:
        a, b = results["cython"][1], results["python"][1]
        same = all(np.array_equal(x, y) for x, y in zip(a, b))
        print(f"speedup {results['python'][0] / results['cython'][0]:.1f}x, outputs identical: {same}")
    else:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
