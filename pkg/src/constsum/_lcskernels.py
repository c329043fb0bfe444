"""Longest-common-subsequence kernels.

The LCS dynamic program is the one genuinely hot loop in the metric suite
(O(n*m) over token sequences that can run to thousands of tokens for a
multi-country source text), so it is JIT-compiled with numba by default.
Setting the environment variable CONSTSUM_NO_NUMBA=1 selects a pure-numpy
fallback; ``benchmarks/bench_lcs.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np


def _lcs_table_numpy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """LCS length table, shape (len(a)+1, len(b)+1), row-vectorized numpy."""
    n, m = a.shape[0], b.shape[0]
    table = np.zeros((n + 1, m + 1), dtype=np.int64)
    for i in range(1, n + 1):
        eq = b == a[i - 1]
        # cell = max(up, diag + eq, left); the left-neighbour dependency is a
        # running maximum, so one cumulative max per row covers it.
        cand = np.maximum(table[i - 1, 1:], table[i - 1, :-1] + eq)
        table[i, 1:] = np.maximum.accumulate(cand)
    return table


_DISABLED = os.environ.get("CONSTSUM_NO_NUMBA", "").lower() in ("1", "true", "yes")

if not _DISABLED:
    try:
        from numba import njit

        @njit(cache=True)
        def _lcs_table_numba(a: np.ndarray, b: np.ndarray) -> np.ndarray:
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

        _lcs_table_impl = _lcs_table_numba
        _BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _lcs_table_impl = _lcs_table_numpy
        _BACKEND = "numpy"
else:
    _lcs_table_impl = _lcs_table_numpy
    _BACKEND = "numpy"


def backend() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return _BACKEND


def lcs_table(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    return _lcs_table_impl(a, b)


def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
    if len(a) == 0 or len(b) == 0:
        return 0
    return int(lcs_table(a, b)[-1, -1])


def lcs_hit_mask(ref: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Boolean mask over ``ref`` positions belonging to the canonical LCS.

    The LCS is not unique; the canonical backtrack used everywhere in this
    package is: take the diagonal on equal tokens, otherwise prefer moving up
    (dropping a ref token) when the up cell is >= the left cell.
    """
    mask = np.zeros(len(ref), dtype=bool)
    if len(ref) == 0 or len(cand) == 0:
        return mask
    table = lcs_table(ref, cand)
    i, j = len(ref), len(cand)
    while i > 0 and j > 0:
        if ref[i - 1] == cand[j - 1]:
            mask[i - 1] = True
            i -= 1
            j -= 1
        elif table[i - 1, j] >= table[i, j - 1]:
            i -= 1
        else:
            j -= 1
    return mask
