#!/usr/bin/env python3
"""Benchmark the numba-jitted hot kernels against their numpy fallbacks.

Runs the velocity upwind sweep on an acceptance-sized phase-space grid and
the particle push at the oracle's particle count, and prints per-call times
with the speedup.  Both implementations are imported explicitly, so the
result does not depend on the VPFP_NUMBA flag.

Usage: python benchmarks/bench_backends.py [--reps 200]
"""

import argparse
import time

import numpy as np

from vpfp.backend import HAS_NUMBA
from vpfp.grids import build_grids
from vpfp.kernels import (
    particle_push_numba,
    particle_push_numpy,
    upwind_sweep_numba,
    upwind_sweep_numpy,
)


def time_call(fn, *args, reps):
    fn(*args)  # warmup (JIT compilation for the numba variants)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=200)
    args = parser.parse_args()

    sg, vg = build_grids(128, 256, 8.0)
    rng = np.random.default_rng(0)

    rho = 1.0 + 0.5 * np.cos(2 * np.pi * sg.x)
    f = np.outer(rho, vg.M)
    a = 0.05 * np.sin(2 * np.pi * sg.x) / 0.1
    dt = 0.3 * vg.dv / np.max(np.abs(a))
    sweep_args = (f, a, vg.dv, vg.w, dt)

    n = 100_000
    X = rng.uniform(0, sg.L, n)
    V = rng.normal(0, 1, n)
    disp = np.zeros(n)
    E = 0.05 * np.sin(2 * np.pi * sg.x)
    noise = rng.normal(0, 1, n)
    push_args = (X, V, disp, E, sg.L, sg.dx, 0.1, 1e-4, noise)

    rows = []
    t_np = time_call(upwind_sweep_numpy, *sweep_args, reps=args.reps)
    rows.append(("upwind_sweep 128x256", t_np, None))
    if HAS_NUMBA:
        t_nb = time_call(upwind_sweep_numba, *sweep_args, reps=args.reps)
        rows[-1] = ("upwind_sweep 128x256", t_np, t_nb)

    t_np = time_call(particle_push_numpy, *push_args, reps=args.reps)
    rows.append((f"particle_push n={n}", t_np, None))
    if HAS_NUMBA:
        t_nb = time_call(particle_push_numba, *push_args, reps=args.reps)
        rows[-1] = (f"particle_push n={n}", t_np, t_nb)

    print(f"{'kernel':<24} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{name:<24} {t_np * 1e6:>10.1f}us {'n/a':>12} {'n/a':>9}")
        else:
            print(f"{name:<24} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us {t_np / t_nb:>8.1f}x")
    if not HAS_NUMBA:
        print("numba not importable: only the numpy fallback was timed")


if __name__ == "__main__":
    main()
