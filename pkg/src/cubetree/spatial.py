"""Output-sensitive search for point pairs at l-infinity distance <= 1.

Points are bucketed on a uniform grid of cell width 1 over a few selected
coordinates (the ones with the largest variance).  Any two points within
distance 1 lie in the same or adjacent cells, so candidate pairs come from
the 3^k neighbouring cells and are refined exactly on every coordinate.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

GRID_DIMS = 3
_BATCH = 1 << 21
_KEY_LIMIT = 1 << 62


def is_integral(points: np.ndarray) -> bool:
    return points.dtype.kind in "iu"


def _floor_cells(cols: np.ndarray) -> np.ndarray:
    if is_integral(cols):
        return cols.astype(np.int64)
    flat = [math.floor(x) for x in cols.ravel().tolist()]
    return np.asarray(flat, dtype=np.int64).reshape(cols.shape)


def _variances(points: np.ndarray) -> np.ndarray:
    if points.shape[0] == 0:
        return np.zeros(points.shape[1])
    return points.astype(np.float64).var(axis=0)


def grid_coordinates(points: np.ndarray, k: int = GRID_DIMS) -> np.ndarray:
    """Indices of the ``k`` highest-variance coordinates (ties: lower index)."""
    d = points.shape[1]
    var = _variances(points)
    return np.sort(np.argsort(-var, kind="stable")[: min(k, d)])


def refine(points: np.ndarray, us: np.ndarray, vs: np.ndarray, step: int = 16) -> np.ndarray:
    """Boolean mask of pairs whose full l-infinity gap is <= 1."""
    keep = np.ones(len(us), dtype=bool)
    idx = np.arange(len(us))
    d = points.shape[1]
    one = 1 if is_integral(points) else Fraction(1)
    for c in range(0, d, step):
        if len(idx) == 0:
            break
        a = points[us[idx], c: c + step]
        b = points[vs[idx], c: c + step]
        ok = np.all(np.abs(a - b) <= one, axis=1)
        keep[idx[~ok]] = False
        idx = idx[ok]
    return keep


def _expand(lo: np.ndarray, cnt: np.ndarray):
    """For rows with ranges [lo, lo+cnt), return (row index, position) pairs."""
    total = int(cnt.sum())
    rows = np.repeat(np.arange(len(cnt)), cnt)
    start = np.cumsum(cnt) - cnt
    pos = np.arange(total) - np.repeat(start, cnt) + np.repeat(lo, cnt)
    return rows, pos


def close_pairs(points: np.ndarray, groups: np.ndarray | None = None,
                grid_dims: int = GRID_DIMS) -> np.ndarray:
    """All pairs ``u < v`` with ``max_k |p_u[k] - p_v[k]| <= 1``.

    With ``groups`` only pairs carrying the same group label are reported.
    Returns an ``(m, 2)`` int64 array in lexicographic order.
    """
    n = points.shape[0]
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    dims = grid_coordinates(points, grid_dims)
    while True:
        cells = _floor_cells(points[:, dims]) if len(dims) else np.zeros((n, 0), dtype=np.int64)
        cells = cells - (cells.min(axis=0) if len(dims) else 0) + 1
        radix = [int(x) + 2 for x in (cells.max(axis=0) if len(dims) else [])]
        gradix = int(groups.max()) + 1 if groups is not None else 1
        if math.prod(radix) * gradix < _KEY_LIMIT or len(dims) == 0:
            break
        dims = dims[:-1]
    mult = []
    m = 1
    for r in radix:
        mult.append(m)
        m *= r
    keys = cells @ np.asarray(mult, dtype=np.int64) if len(dims) else np.zeros(n, dtype=np.int64)
    if groups is not None:
        keys = keys + np.asarray(groups, dtype=np.int64) * m
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)

    found_u, found_v = [], []
    for delta in itertools.product((-1, 0, 1), repeat=len(dims)):
        # each unordered pair once: same cell, or a lexicographically positive offset
        if any(delta):
            first = next(x for x in delta if x)
            if first < 0:
                continue
        shift = int(np.dot(delta, mult)) if len(dims) else 0
        target = keys + shift
        lo = np.searchsorted(sk, target, side="left")
        hi = np.searchsorted(sk, target, side="right")
        if not any(delta):
            lo = np.maximum(lo, rank + 1)
        cnt = np.maximum(hi - lo, 0)
        total_rows = np.nonzero(cnt)[0]
        if len(total_rows) == 0:
            continue
        csum = np.cumsum(cnt[total_rows])
        start = 0
        while start < len(total_rows):
            base = csum[start - 1] if start else 0
            stop = int(np.searchsorted(csum, base + _BATCH, side="right"))
            stop = max(stop, start + 1)
            rows = total_rows[start:stop]
            r_idx, pos = _expand(lo[rows], cnt[rows])
            us = rows[r_idx]
            vs = order[pos]
            keep = refine(points, us, vs)
            found_u.append(us[keep])
            found_v.append(vs[keep])
            start = stop
    if not found_u:
        return np.empty((0, 2), dtype=np.int64)
    us = np.concatenate(found_u)
    vs = np.concatenate(found_v)
    a = np.minimum(us, vs)
    b = np.maximum(us, vs)
    idx = np.lexsort((b, a))
    return np.stack([a[idx], b[idx]], axis=1)
