#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure numpy/LAPACK lane.

Times three stages on a shared random mesh: building all L1 rows, building
the orthogonal/complementary triangles, and evaluating the identity residuals
at every level.  Usage:

    python benchmarks/bench_kernels.py [--sizes 100,200,400,800] [--seed 1]
"""

import argparse
import time

import numpy as np

from tfac.kernels import HAVE_COMPILED, KernelWorkspace
from tfac.mesh import random_mesh


def bench_one(mesh, alpha, backend):
    t0 = time.perf_counter()
    ws = KernelWorkspace.from_mesh(mesh, alpha, backend=backend)
    t_rows = time.perf_counter() - t0

    t0 = time.perf_counter()
    ws.theta_coeffs(mesh.N)  # forces the whole theta/p triangle
    t_doc = time.perf_counter() - t0

    t0 = time.perf_counter()
    worst = 0.0
    for n in range(1, mesh.N + 1):
        worst = max(worst, ws.check_identities(n).max_residual)
    t_check = time.perf_counter() - t0
    return t_rows, t_doc, t_check, worst


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="100,200,400,800")
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    backends = ["numpy"] + (["compiled"] if HAVE_COMPILED else [])
    if not HAVE_COMPILED:
        print("note: compiled core not built; timing the numpy lane only")

    rng = np.random.Generator(np.random.PCG64(args.seed))
    print(f"{'N':>6} {'backend':>9} {'L1 rows':>10} {'DOC/DCC':>10} {'identities':>11} {'residual':>10}")
    for N in (int(s) for s in args.sizes.split(",")):
        mesh = random_mesh(rng, N, N=N)
        rows = {}
        for backend in backends:
            rows[backend] = bench_one(mesh, args.alpha, backend)
            t_rows, t_doc, t_check, worst = rows[backend]
            print(f"{N:>6} {backend:>9} {t_rows:>9.4f}s {t_doc:>9.4f}s {t_check:>10.4f}s {worst:>10.2e}")
        if len(rows) == 2:
            py, cy = rows["numpy"], rows["compiled"]
            print(f"{'':>6} {'speedup':>9} {py[0] / cy[0]:>9.1f}x {py[1] / cy[1]:>9.1f}x {py[2] / cy[2]:>10.1f}x")


if __name__ == "__main__":
    main()
