#!/usr/bin/env python3
"""Benchmark the compiled envelope kernel against the pure-Python fallback.

The monotone-chain node extraction is the one sequential hot loop in the
package (it runs inside every Burgers solve); everything else is FFT- or
BLAS-bound.  Usage:

    python3 benchmarks/bench_envelopes.py [--sizes 14,16,18,20] [--repeats 5]
"""

import argparse
import time

import numpy as np

from burgerslab import _envelope_py
from burgerslab.envelopes import envelope_backend
from burgerslab.fbm import sample_fbm_fast
from burgerslab.grids import RandomnessSpec, SampleGrid

try:
    from burgerslab import _envelope_core
except ImportError:
    _envelope_core = None


def potential_values(log2n: int, seed: int) -> np.ndarray:
    n = 2 ** log2n
    grid = SampleGrid.anchored(2.0 / n, n // 2, n // 2)
    u0 = sample_fbm_fast(0.5, grid, RandomnessSpec(seed))
    from burgerslab.burgers import build_potential
    return build_potential(u0, 1.0).values


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="14,16,18,20",
                        help="comma-separated log2 sequence lengths")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"active package backend: {envelope_backend()}")
    if _envelope_core is None:
        print("compiled kernel unavailable; benchmarking fallback only")
    header = f"{'n':>9} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for log2n in sizes:
        y = potential_values(log2n, seed=42)
        t_py = best_of(args.repeats, _envelope_py.hull_nodes, y, True)
        if _envelope_core is not None:
            t_c = best_of(args.repeats, _envelope_core.hull_nodes, y, True)
            nodes_py = _envelope_py.hull_nodes(y, True)
            nodes_c = _envelope_core.hull_nodes(y, True)
            assert np.array_equal(nodes_py, nodes_c), "backends disagree"
            print(f"{2 ** log2n:>9} {t_py * 1e3:>12.2f} {t_c * 1e3:>14.2f} "
                  f"{t_py / t_c:>7.1f}x")
        else:
            print(f"{2 ** log2n:>9} {t_py * 1e3:>12.2f} {'-':>14} {'-':>8}")


if __name__ == "__main__":
    main()
