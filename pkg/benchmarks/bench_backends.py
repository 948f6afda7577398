#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-Python fallback.

Times the Hermitian Jacobi eigensolver and the midpoint-unitary
propagation loop for a few Hilbert-space dimensions, and reports the
per-call / per-step cost of each backend plus the speedup.

    python benchmarks/bench_backends.py [--steps 20000] [--repeats 200]
"""

import argparse
import time

import numpy as np

from qlyap._kernels import available_backends, get_backend


def bench_jacobi(mod, n, repeats):
    rng = np.random.default_rng(42)
    mats = []
    for _ in range(16):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        mats.append(0.5 * (a + a.conj().T))
    start = time.perf_counter()
    for i in range(repeats):
        mod.jacobi_eigh(mats[i % 16])
    return (time.perf_counter() - start) / repeats


def bench_propagate(mod, n, steps):
    rng = np.random.default_rng(7)
    levels = np.sort(rng.standard_normal(n))[::-1]
    h0 = np.diag(levels - levels.mean()).astype(complex)
    h1 = (np.ones((n, n)) - np.eye(n)).astype(complex)
    w = np.sort(rng.dirichlet(np.ones(n)))[::-1]
    rhod = np.diag(w).astype(complex)
    perm = rng.permutation(n)
    rho0 = np.diag(w[perm]).astype(complex)
    rho0[0, 1] = rho0[1, 0] = 0.05
    rho0 = rho0 / np.trace(rho0).real
    start = time.perf_counter()
    mod.propagate(h0, h1, 1.0, rho0, rhod, 1e-3, steps, max(1, steps // 10))
    return (time.perf_counter() - start) / steps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=20000, help="propagation steps per timing")
    parser.add_argument("--repeats", type=int, default=2000, help="eigensolver calls per timing")
    parser.add_argument("--dims", type=int, nargs="+", default=[2, 3, 5])
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print()
    print(f"{'kernel':28s} {'n':>3s} " + "".join(f"{b:>14s}" for b in backends) + f"{'speedup':>10s}")
    for n in args.dims:
        times = {}
        for b in backends:
            # the python loop is slow; keep its workload proportionate
            reps = args.repeats if b == "compiled" else max(20, args.repeats // 20)
            times[b] = bench_jacobi(get_backend(b), n, reps)
        row = "".join(f"{times[b] * 1e6:11.2f} us" for b in backends)
        speed = times["python"] / times["compiled"] if len(backends) == 2 else float("nan")
        print(f"{'jacobi_eigh (per call)':28s} {n:3d} {row}{speed:9.1f}x")
    for n in args.dims:
        times = {}
        for b in backends:
            steps = args.steps if b == "compiled" else max(200, args.steps // 100)
            times[b] = bench_propagate(get_backend(b), n, steps)
        row = "".join(f"{times[b] * 1e6:11.2f} us" for b in backends)
        speed = times["python"] / times["compiled"] if len(backends) == 2 else float("nan")
        print(f"{'propagate (per step)':28s} {n:3d} {row}{speed:9.1f}x")


if __name__ == "__main__":
    main()
