"""Independent reference implementations used as test oracles.

None of these share code with the package: they are slow, obvious
algorithms whose answers the fast paths must reproduce.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra


def grid_dijkstra(occ, h, source, diagonal=True, corner_rule=True):
    """8-connected (or 4-connected) shortest-path lengths from ``source``."""
    H, W = occ.shape
    rows, cols, w = [], [], []
    steps = [(1, 0), (0, 1)] + ([(1, 1), (1, -1)] if diagonal else [])
    for y in range(H):
        for x in range(W):
            if occ[y, x]:
                continue
            for dx, dy in steps:
                nx, ny = x + dx, y + dy
                if not (0 <= nx < W and 0 <= ny < H) or occ[ny, nx]:
                    continue
                if dx and dy and corner_rule and (occ[y, nx] or occ[ny, x]):
                    continue
                rows.append(y * W + x)
                cols.append(ny * W + nx)
                w.append(h * math.hypot(dx, dy))
    G = coo_matrix((w, (rows, cols)), shape=(H * W, H * W)).tocsr()
    sx, sy = source
    return dijkstra(G, directed=False, indices=sy * W + sx).reshape(H, W)


def held_karp(C, start=0):
    """Optimal open-route cost from ``start`` through every vertex."""
    C = np.asarray(C, dtype=float)
    n = len(C)
    if n == 1:
        return 0.0
    others = [v for v in range(n) if v != start]
    m = len(others)
    sub = C[np.ix_(others, others)]
    full = 1 << m
    dp = np.full((full, m), np.inf)
    for k, v in enumerate(others):
        dp[1 << k, k] = C[start, v]
    masks_by_size = [[] for _ in range(m + 1)]
    for mask in range(1, full):
        masks_by_size[bin(mask).count("1")].append(mask)
    for size in range(2, m + 1):
        masks = np.array(masks_by_size[size])
        for k in range(m):
            sel = masks[(masks >> k) & 1 == 1]
            prev = sel ^ (1 << k)
            # best predecessor j in prev for each mask
            cand = dp[prev] + sub[:, k][None, :]
            member = ((prev[:, None] >> np.arange(m)[None, :]) & 1) == 1
            cand[~member] = np.inf
            dp[sel, k] = cand.min(axis=1)
    return float(dp[full - 1].min())


def brute_force_assignment(D):
    """Minimum cost over all injective row->column (or column->row) maps."""
    D = np.asarray(D, dtype=float)
    r, c = D.shape
    if r <= c:
        return min(sum(D[i, p[i]] for i in range(r))
                   for p in itertools.permutations(range(c), r))
    return min(sum(D[p[j], j] for j in range(c))
               for p in itertools.permutations(range(r), c))


def brute_force_open_tsp(C, start=0):
    C = np.asarray(C, dtype=float)
    rest = [v for v in range(len(C)) if v != start]
    best = math.inf
    for perm in itertools.permutations(rest):
        route = (start,) + perm
        best = min(best, sum(C[route[k], route[k + 1]] for k in range(len(route) - 1)))
    return best


def prim_weight(A):
    """Minimum spanning tree weight of a dense symmetric matrix."""
    A = np.asarray(A, dtype=float)
    n = len(A)
    seen = [0]
    total = 0.0
    while len(seen) < n:
        w, v = min((A[u, v], v) for u in seen for v in range(n) if v not in seen)
        total += w
        seen.append(v)
    return total


def segment_touches_cell(a, b, cx, cy, eps=1e-12):
    """Does the closed segment a-b intersect the closed unit square at (cx, cy)?

    Coordinates are in cell units with cell (cx, cy) spanning
    [cx, cx+1] x [cy, cy+1].  Liang-Barsky clipping.
    """
    x0, y0 = a
    dx, dy = b[0] - a[0], b[1] - a[1]
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0 - cx), (dx, cx + 1 - x0), (-dy, y0 - cy), (dy, cy + 1 - y0)):
        if abs(p) < eps:
            if q < -eps:
                return False
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
    return t0 <= t1 + eps


def segment_clear(occ, a_cell, b_cell):
    """Line of sight between cell centers by exhaustive cell intersection."""
    a = (a_cell[0] + 0.5, a_cell[1] + 0.5)
    b = (b_cell[0] + 0.5, b_cell[1] + 0.5)
    H, W = occ.shape
    for y in range(H):
        for x in range(W):
            if occ[y, x] and segment_touches_cell(a, b, x, y):
                return False
    return True
