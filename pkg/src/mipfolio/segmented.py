"""Segmented sort / inclusive scan / argmax over padded triplet rows.

Segments are laid out as rows of a 2-D array, padded on the right with
``(+inf, PAD_MARKER, 0)`` entries so that padding sorts last and adds
nothing to the scan. Rows of width 2, 4, 8 or 16 are sorted with a bitonic
network whose compare-exchange pattern does not depend on the data; wider
rows fall back to a general lexicographic sort.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

PAD_MARKER = 2
NETWORK_WIDTHS = (2, 4, 8, 16)


@lru_cache(maxsize=None)
def bitonic_network(width: int) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]:
    """Compare-exchange stages ``(lo, hi, ascending)`` of a bitonic sorter."""
    if width < 1 or width & (width - 1):
        raise ValueError("network width must be a power of two")
    stages = []
    k = 2
    while k <= width:
        j = k // 2
        while j >= 1:
            lo, hi, asc = [], [], []
            for i in range(width):
                l = i ^ j
                if l > i:
                    lo.append(i)
                    hi.append(l)
                    asc.append((i & k) == 0)
            stages.append((np.array(lo), np.array(hi), np.array(asc)))
            j //= 2
        k *= 2
    return tuple(stages)


def _lex_greater(v1, m1, d1, v2, m2, d2):
    return (v1 > v2) | ((v1 == v2) & ((m1 > m2) | ((m1 == m2) & (d1 > d2))))


def network_sort_rows(V: np.ndarray, M: np.ndarray, D: np.ndarray):
    """Sort each row of ``(V, M, D)`` lexicographically with a bitonic network."""
    V, M, D = V.copy(), M.copy(), D.copy()
    for lo, hi, asc in bitonic_network(V.shape[1]):
        a = (V[:, lo], M[:, lo], D[:, lo])
        b = (V[:, hi], M[:, hi], D[:, hi])
        gt = _lex_greater(*a, *b)
        lt = _lex_greater(*b, *a)
        swap = np.where(asc, gt, lt)
        for arr, x, y in ((V, a[0], b[0]), (M, a[1], b[1]), (D, a[2], b[2])):
            arr[:, lo] = np.where(swap, y, x)
            arr[:, hi] = np.where(swap, x, y)
    return V, M, D


def lexsort_rows(V: np.ndarray, M: np.ndarray, D: np.ndarray):
    """Sort each row of ``(V, M, D)`` lexicographically with a general sort."""
    rows, width = V.shape
    rid = np.repeat(np.arange(rows), width)
    order = np.lexsort((D.ravel(), M.ravel(), V.ravel(), rid))
    return (V.ravel()[order].reshape(rows, width), M.ravel()[order].reshape(rows, width),
            D.ravel()[order].reshape(rows, width))


def sort_rows(V, M, D):
    """Length-dispatched row sort: sorting network up to width 16, general sort beyond."""
    if V.shape[1] in NETWORK_WIDTHS:
        return network_sort_rows(V, M, D)
    return lexsort_rows(V, M, D)


def inclusive_scan_rows(D: np.ndarray) -> np.ndarray:
    return np.cumsum(D, axis=1)


def bucket_width(length: int) -> int:
    """Smallest power of two holding ``length`` entries (at least 2)."""
    w = 2
    while w < length:
        w *= 2
    return w


def pad_segments(seg: np.ndarray, nseg: int, *arrays, fill=(np.inf, PAD_MARKER, 0.0)):
    """Scatter flat per-entry arrays into per-width padded row blocks.

    Returns ``{width: (segment_ids, [padded arrays...])}``.
    """
    counts = np.bincount(seg, minlength=nseg)
    order = np.argsort(seg, kind="stable")
    seg_sorted = seg[order]
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    pos = np.arange(seg.size) - starts[seg_sorted]
    widths = np.array([bucket_width(int(c)) for c in counts], dtype=np.int64)
    blocks = {}
    for w in np.unique(widths[counts > 0]):
        w = int(w)
        ids = np.flatnonzero((widths == w) & (counts > 0))
        row_of = np.full(nseg, -1, dtype=np.int64)
        row_of[ids] = np.arange(ids.size)
        sel = widths[seg_sorted] == w
        rr = row_of[seg_sorted[sel]]
        cc = pos[sel]
        padded = []
        for arr, f in zip(arrays, fill):
            P = np.full((ids.size, w), f, dtype=np.asarray(arr).dtype)
            P[rr, cc] = np.asarray(arr)[order][sel]
            padded.append(P)
        blocks[w] = (ids, padded)
    return blocks


def argmax_rows(V, M, S, xbar, lb, ub):
    """Best candidate per row under the best-shift tie-breaking rule.

    Candidates are marker ``-1`` entries with value in ``[lb, ub]`` and
    different from ``xbar``. Ties go to the value closest to ``xbar``, then to
    the smaller value. Rows whose best score is not positive (or that have no
    candidate) return ``(xbar, 0)``.
    """
    xb = xbar[:, None]
    cand = (M == -1) & (V >= lb[:, None]) & (V <= ub[:, None]) & (V != xb) & np.isfinite(V)
    Sm = np.where(cand, S, -np.inf)
    best = Sm.max(axis=1)
    tie = cand & (Sm == best[:, None])
    dist = np.where(tie, np.abs(V - xb), np.inf)
    dmin = dist.min(axis=1)
    tie &= dist == dmin[:, None]
    val = np.where(tie, V, np.inf).min(axis=1)
    improving = best > 0.0
    return np.where(improving, val, xbar), np.where(improving, best, 0.0)
