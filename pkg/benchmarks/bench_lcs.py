"""Benchmark the numba LCS kernel against the pure-numpy fallback.

Usage:
    python3 benchmarks/bench_lcs.py [--sizes 100,400,1600] [--repeats 5]

The numba path is what `constsum` uses by default; CONSTSUM_NO_NUMBA=1
switches the package to the numpy path measured here. Both kernels are
checked for table equality before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from constsum._lcskernels import _lcs_table_numpy

try:
    from numba import njit

    @njit(cache=True)
    def _lcs_table_numba(a, b):
        n, m = a.shape[0], b.shape[0]
        table = np.zeros((n + 1, m + 1), dtype=np.int64)
        for i in range(1, n + 1):
            ai = a[i - 1]
            for j in range(1, m + 1):
                if ai == b[j - 1]:
                    table[i, j] = table[i - 1, j - 1] + 1
                elif table[i - 1, j] >= table[i, j - 1]:
                    table[i, j] = table[i - 1, j]
                else:
                    table[i, j] = table[i, j - 1]
        return table

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def sequences(size: int, vocab: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    return (rng.integers(0, vocab, size=size, dtype=np.int64),
            rng.integers(0, vocab, size=size, dtype=np.int64))


def best_of(fn, a, b, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(a, b)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="100,400,1600",
                        help="comma-separated sequence lengths")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats; the best run is reported")
    parser.add_argument("--vocab", type=int, default=500)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if HAVE_NUMBA:
        warm_a, warm_b = sequences(16, args.vocab, 0)
        _lcs_table_numba(warm_a, warm_b)  # JIT compile outside the timer

    print(f"{'size':>6}  {'numpy (ms)':>12}  {'numba (ms)':>12}  {'speedup':>8}")
    for size in sizes:
        a, b = sequences(size, args.vocab, size)
        t_numpy = best_of(_lcs_table_numpy, a, b, args.repeats)
        if HAVE_NUMBA:
            assert np.array_equal(_lcs_table_numba(a, b), _lcs_table_numpy(a, b))
            t_numba = best_of(_lcs_table_numba, a, b, args.repeats)
            print(f"{size:>6}  {t_numpy * 1e3:>12.3f}  {t_numba * 1e3:>12.3f}  "
                  f"{t_numpy / t_numba:>7.1f}x")
        else:
            print(f"{size:>6}  {t_numpy * 1e3:>12.3f}  {'n/a':>12}  {'n/a':>8}")
    if not HAVE_NUMBA:
        print("numba is not importable; only the fallback was measured")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
