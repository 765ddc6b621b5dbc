"""Compare the compiled and pure-numpy Monte Carlo selection samplers.

Run with:  python3 benchmarks/bench_kernels.py [--samples N]
"""
import argparse
import time

import numpy as np

from imidyn._kernels._mc_py import mc_selection_counts as mc_py
from imidyn.protocols import _KIND_IDS, SELECTION_KINDS

try:
    from imidyn._kernels._mc_cy import mc_selection_counts as mc_cy
except ImportError:
    mc_cy = None


def bench(fn, kind, x, samples, repeats=3):
    m_values = np.array([3], dtype=np.int64)
    m_probs = np.array([1.0])
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(_KIND_IDS[kind], m_values, m_probs, x, 0, samples, 42, 0.0)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=1_000_000)
    args = parser.parse_args()

    x = np.array([0.15, 0.25, 0.6])
    print(f"{'kind':<14} {'python':>10} {'cython':>10} {'speedup':>8}")
    for kind in SELECTION_KINDS:
        t_py = bench(mc_py, kind, x, args.samples)
        if mc_cy is None:
            print(f"{kind:<14} {t_py:>9.3f}s {'n/a':>10} {'':>8}")
            continue
        t_cy = bench(mc_cy, kind, x, args.samples)
        print(f"{kind:<14} {t_py:>9.3f}s {t_cy:>9.3f}s {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
