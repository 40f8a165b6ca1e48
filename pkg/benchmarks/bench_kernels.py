#!/usr/bin/env python3
"""Benchmark the correlator RHS kernels: compiled extension vs numpy.

The right-hand side of the correlator ODE system dominates quench
runtime at large L, so this is the one hot spot worth compiling.  Run

    python3 benchmarks/bench_kernels.py [--sizes 100 200 400] [--repeats 50]

to compare both backends on identical random packed states and print a
per-call timing table plus the max elementwise deviation between them.
"""

import argparse
import time

import numpy as np

from taclab import _kernels


def random_state(L, rng):
    m = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    x = 0.5 * (m + m.conj().T)          # Hermitian, real diagonal
    a = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
    y = 0.5 * (a - a.T)                 # antisymmetric, zero diagonal
    return _kernels.pack_state(x, y)


def bench_backend(backend, L, z, g, J, gamma, repeats):
    rhs = _kernels.make_rhs(L, backend=backend)
    rhs(z, g, J, gamma)  # warm up (allocations, code paths)
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = rhs(z, g, J, gamma)
    dt = (time.perf_counter() - t0) / repeats
    return dt, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--repeats", type=int, default=50)
    ap.add_argument("--gamma", type=float, default=0.1)
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    have_cython = _kernels.BACKEND == "cython"
    print(f"available backend at import: {_kernels.BACKEND}")
    header = f"{'L':>6} {'numpy [ms]':>12}"
    if have_cython:
        header += f" {'cython [ms]':>12} {'speedup':>8} {'max |diff|':>11}"
    print(header)
    for L in args.sizes:
        z = random_state(L, rng)
        g = rng.uniform(0.5, 1.5, L)
        J = rng.uniform(0.5, 1.5, L - 1)
        t_np, out_np = bench_backend("numpy", L, z, g, J, args.gamma,
                                     args.repeats)
        row = f"{L:>6} {t_np * 1e3:>12.3f}"
        if have_cython:
            t_cy, out_cy = bench_backend("cython", L, z, g, J, args.gamma,
                                         args.repeats)
            diff = float(np.max(np.abs(out_np - out_cy)))
            row += f" {t_cy * 1e3:>12.3f} {t_np / t_cy:>8.2f} {diff:>11.2e}"
        print(row)


if __name__ == "__main__":
    main()
