"""Compiled vs pure-Python kernels: wall time per workload.

    python benchmarks/bench_kernels.py [--q 8] [--repeat 3] [--scale 1.0]

The pure-Python sizes are 1/pyfrac of the compiled ones and the reported
rate is normalised per step, so the speed-up column compares like with like.
"""
import argparse
import time

import numpy as np

from cfx import kernels
from cfx.maps import map_interval
from cfx.moebius import make_context


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(ctx, scale):
    rng = np.random.default_rng(0)
    out = []
    for m in ("h", "r", "v"):
        lo, hi = map_interval(ctx, m)
        xs = rng.uniform(lo, hi, int(200_000 * scale))
        out.append((f"step_many {m}", len(xs),
                    lambda b, xs=xs, m=m, k=1: kernels.step_many(ctx, m, xs[:len(xs) // k], backend=b)))
    for m in ("k", "r", "v"):
        n = int(1_000_000 * scale)
        out.append((f"birkhoff {m}", n,
                    lambda b, n=n, m=m, k=1: kernels.birkhoff(ctx, m, 0.1234, n // k, 100, backend=b)))
    n = int(200_000 * scale)
    out.append(("planar_orbit h", n,
                lambda b, n=n, k=1: kernels.planar_orbit(ctx, "h", 0.3141592653589793, 0.0, n // k,
                                                         backend=b)))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--pyfrac", type=int, default=20, help="pure-Python runs use n / pyfrac steps")
    args = ap.parse_args(argv)
    ctx = make_context(args.q)
    if kernels._ckernels is None:
        print("compiled kernels not built; only the pure-Python timings are shown")
    print(f"q={args.q}  best of {args.repeat}  (rates in steps per second)")
    print(f"{'workload':<16} {'n':>9} {'cython':>12} {'python':>12} {'speed-up':>9}")
    for name, n, fn in workloads(ctx, args.scale):
        t_py = best_of(lambda: fn("python", k=args.pyfrac), args.repeat)
        r_py = (n // args.pyfrac) / t_py
        if kernels._ckernels is not None:
            t_c = best_of(lambda: fn("cython"), args.repeat)
            r_c = n / t_c
            print(f"{name:<16} {n:>9} {r_c:>12.3g} {r_py:>12.3g} {r_c / r_py:>8.0f}x")
        else:
            print(f"{name:<16} {n:>9} {'-':>12} {r_py:>12.3g} {'-':>9}")


if __name__ == "__main__":
    main()
