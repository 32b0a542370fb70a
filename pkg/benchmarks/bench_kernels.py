#!/usr/bin/env python3
"""Compare the compiled accumulation kernel against the NumPy fallback.

Reports per-backend throughput of the fused (sum, sum of squares, positive
mass) pass over frame-sized matrices, the accuracy of each on a cancelling
input with a known exact total, and end-to-end timing of one simulation cell
per backend (the end-to-end runs re-exec this script with
``HOYERSTREAM_NO_EXT`` set, since the backend is chosen at import time).

Usage: python benchmarks/bench_kernels.py [--skip-e2e]
"""

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from hoyerstream.kernels import available_backends

SIZES = [(100, 200), (250, 400), (1000, 1000)]
CANCEL_BLOCK = np.array([1e16, 3.0, -1e16, 2.0])


def bench_throughput():
    backends = available_backends()
    rng = np.random.Generator(np.random.Philox(7))
    print(f"{'size':>12} {'backend':>8} {'per call':>12} {'rate':>12}")
    for p1, p2 in SIZES:
        x = rng.standard_normal((p1, p2))
        for name, impl in sorted(backends.items()):
            impl.matrix_stats(x)  # warm
            reps = max(3, int(2e7 / x.size))
            t0 = time.perf_counter()
            for _ in range(reps):
                impl.matrix_stats(x)
            dt = (time.perf_counter() - t0) / reps
            print(
                f"{p1}x{p2:>7} {name:>8} {dt * 1e6:>10.1f}us "
                f"{x.size / dt / 1e6:>9.0f}M/s"
            )


def bench_accuracy():
    # 2500 repeats of a block whose exact sum is 5 per block; naive or
    # pairwise float64 accumulation loses the small terms entirely.
    x = np.tile(CANCEL_BLOCK, 2500).reshape(50, -1)
    exact = math.fsum(float(v) for v in x.ravel())
    print(f"\ncancelling input, exact sum {exact}:")
    for name, impl in sorted(available_backends().items()):
        s, _, _ = impl.matrix_stats(x)
        print(f"  {name:>8}: sum {s!r}, error {abs(s - exact):g}")


def bench_cell():
    import warnings

    from hoyerstream import MixedSignWarning, NoiseSpec, fit_baseline, corrected_reading
    from hoyerstream import make_dense_anomaly, simulate_residual_stream, hoyer_index
    from hoyerstream.kernels import BACKEND

    warnings.simplefilter("ignore", MixedSignWarning)
    a = make_dense_anomaly(100, 200)
    h = hoyer_index(a)
    t0 = time.perf_counter()
    frames = simulate_residual_stream(a, NoiseSpec(6.0, 1), n_ic=200, n_ooc=200)
    baseline = fit_baseline(frames[:200])
    errs = [abs(corrected_reading(frames[200 + i], baseline).g - h) for i in range(200)]
    dt = time.perf_counter() - t0
    print(f"  {BACKEND:>8}: one 400-frame cell in {dt:.3f}s (m_eps {np.mean(errs):.4f})")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--skip-e2e", action="store_true")
    parser.add_argument("--cell-only", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.cell_only:
        bench_cell()
        return
    bench_throughput()
    bench_accuracy()
    if not args.skip_e2e:
        print("\nend-to-end simulation cell (backend chosen at import):")
        sys.stdout.flush()
        for env in ({}, {"HOYERSTREAM_NO_EXT": "1"}):
            subprocess.run(
                [sys.executable, os.path.abspath(__file__), "--cell-only"],
                env={**os.environ, **env},
                check=True,
            )


if __name__ == "__main__":
    main()
