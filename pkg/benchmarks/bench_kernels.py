"""Compare the compiled and numpy kernels.

Usage: ``python benchmarks/bench_kernels.py [--n 16] [--replicas 32] [--periods 20]``

Prints wall times per call and the speed-up, and checks that both
backends return identical numbers.
"""
import argparse
import time

import numpy as np

from forcedchain import ChainParams, ForceSpec, validate
from forcedchain.kernels import get_backend
from forcedchain.simulation import estimate_periodic_averages


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_tridiag(backends, n, k, repeat):
    rng = np.random.default_rng(1)
    c = rng.normal(size=k) + 1j * rng.normal(size=k) + 3.0
    rhs = rng.normal(size=(k, n + 1)) + 1j * rng.normal(size=(k, n + 1))
    res = {}
    for name, mod in backends.items():
        res[name] = best_of(lambda: mod.shifted_tridiag_solve(c, rhs), repeat)
    return res


def bench_splitting(backends, n, replicas, periods, threads):
    model = validate(ChainParams(n), ForceSpec.cosine(1.0))
    res = {}
    for name, mod in backends.items():
        res[name] = best_of(lambda: estimate_periodic_averages(
            model, replicas=replicas, burn_in=0, periods=periods, seed=3, threads=threads, backend=mod), 1)
    return res


def report(title, res):
    print(title)
    for name, (t, _) in res.items():
        print(f"  {name:7s} {t * 1e3:10.2f} ms")
    if len(res) == 2:
        print(f"  speed-up {res['python'][0] / res['cython'][0]:.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--replicas", type=int, default=32)
    ap.add_argument("--periods", type=int, default=20)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = {"python": get_backend("python")}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled extension not built; timing the numpy kernels only")

    tri = bench_tridiag(backends, 512, 64, args.repeat)
    report("tridiagonal solve, n=512, 64 shifts", tri)
    sim = bench_splitting(backends, args.n, args.replicas, args.periods, args.threads)
    report(f"splitting, n={args.n}, R={args.replicas}, {args.periods} periods x 256 steps", sim)

    if len(backends) == 2:
        a, b = tri["python"][1], tri["cython"][1]
        print("tridiagonal max difference:", float(np.max(np.abs(a - b))))
        sa, sb = sim["python"][1], sim["cython"][1]
        print("splitting bitwise identical:", bool(np.array_equal(sa.p2_mean, sb.p2_mean)
                                                   and np.array_equal(sa.current_mean, sb.current_mean)))


if __name__ == "__main__":
    main()
