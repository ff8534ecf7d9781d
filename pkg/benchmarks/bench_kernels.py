#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the NumPy fallback.

Times the three hot primitives (pairwise squared distances, the fused
Matern-5/2 covariance + radial-derivative pass, and cross distances) at the
sizes the optimizer actually hits (training sets of 10-60 points, scoring
over pools of a few hundred), plus larger sizes for headroom.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from poolbo.kernels import _numpy as numpy_backend
from poolbo.kernels import native_backend

SIZES = [(20, 16), (60, 16), (60, 64), (300, 64), (1000, 64)]
CROSS = [(300, 60, 64), (2000, 60, 64)]


def best_of(fn, *args, repeats=7, min_time=0.02):
    best = float("inf")
    for _ in range(repeats):
        loops = 1
        while True:
            t0 = time.perf_counter()
            for _ in range(loops):
                fn(*args)
            dt = time.perf_counter() - t0
            if dt >= min_time:
                break
            loops *= 4
        best = min(best, dt / loops)
    return best


def fmt(seconds):
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    return f"{seconds * 1e3:8.2f} ms"


def main():
    native = native_backend()
    if native is None:
        print("compiled extension not built; benchmarking the fallback only")
    rng = np.random.default_rng(0)

    header = f"{'operation':<34} {'numpy':>12} {'native':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))

    def row(name, np_time, nat_time):
        if nat_time is None:
            print(f"{name:<34} {fmt(np_time):>12} {'-':>12} {'-':>9}")
        else:
            print(f"{name:<34} {fmt(np_time):>12} {fmt(nat_time):>12} "
                  f"{np_time / nat_time:8.2f}x")

    for n, d in SIZES:
        X = rng.standard_normal((n, d))
        t_np = best_of(numpy_backend.pairwise_sq_dists, X)
        t_nat = best_of(native.pairwise_sq_dists, X) if native else None
        row(f"pairwise_sq_dists n={n} d={d}", t_np, t_nat)

    for n in sorted({n for n, _ in SIZES}):
        X = rng.standard_normal((n, 8))
        D2 = numpy_backend.pairwise_sq_dists(X)
        t_np = best_of(numpy_backend.matern52_k_rc, D2, 1.3, 0.9)
        t_nat = best_of(native.matern52_k_rc, D2, 1.3, 0.9) if native else None
        row(f"matern52_k_rc n={n}", t_np, t_nat)

    for q, n, d in CROSS:
        A = rng.standard_normal((q, d))
        B = rng.standard_normal((n, d))
        t_np = best_of(numpy_backend.cross_sq_dists, A, B)
        t_nat = best_of(native.cross_sq_dists, A, B) if native else None
        row(f"cross_sq_dists q={q} n={n} d={d}", t_np, t_nat)

    # End-to-end: one gradient step of the joint objective, both backends.
    import os
    import subprocess
    import sys
    code = (
        "import time, numpy as np\n"
        "from poolbo.gp import GPHyperparams, mll_and_grad_features\n"
        "from poolbo.kernels import BACKEND\n"
        "rng = np.random.default_rng(0)\n"
        "Z = rng.standard_normal((60, 64)); y = rng.standard_normal(60)\n"
        "p = GPHyperparams.from_values(2.0, 1.0, 1e-4)\n"
        "mll_and_grad_features(Z, y, p)\n"
        "t0 = time.perf_counter()\n"
        "for _ in range(200): mll_and_grad_features(Z, y, p)\n"
        "print(BACKEND, (time.perf_counter() - t0) / 200)\n"
    )
    times = {}
    for force in ("0", "1"):
        env = dict(os.environ, POOLBO_NO_NATIVE=force)
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        backend, value = out.stdout.split()
        times[backend] = float(value)
    if "native" in times and "numpy" in times:
        row("joint grad step n=60 m=64", times["numpy"], times["native"])
    else:
        row("joint grad step n=60 m=64", times["numpy"], None)


if __name__ == "__main__":
    main()
