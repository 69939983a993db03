"""Open-route TSP solvers picked by instance size.

Routes start at a fixed vertex and do not return.  Up to 12 vertices the
route is found by exhaustive enumeration, from 13 to 19 by best-first
branch and bound, and from 20 on by nearest neighbour followed by 2-opt.
"""

from __future__ import annotations

import heapq

import numpy as np
from numba import njit

BRUTE_FORCE_MAX = 12
BRANCH_BOUND_MAX = 19


def route_cost(cost, route) -> float:
    cost = np.asarray(cost, dtype=float)
    return float(sum(cost[route[k], route[k + 1]] for k in range(len(route) - 1)))


@njit(cache=True)
def _brute_force(C, start):
    n = C.shape[0]
    m = n - 1
    arr = np.zeros(m, np.int64)
    k = 0
    for v in range(n):
        if v != start:
            arr[k] = v
            k += 1
    best_path = arr.copy()
    at = np.zeros(m, np.int64)
    acc = np.zeros(m + 1)
    best = np.inf
    d = 0
    at[0] = 0
    # swap-based permutation walk: positions d..m-1 hold the unused vertices
    while d >= 0:
        i = at[d]
        if i >= m:
            d -= 1
            if d >= 0:
                j = at[d]
                arr[d], arr[j] = arr[j], arr[d]
                at[d] = j + 1
            continue
        arr[d], arr[i] = arr[i], arr[d]
        prev = start if d == 0 else arr[d - 1]
        c = acc[d] + C[prev, arr[d]]
        if d >= m - 2:
            if d == m - 1:
                if c < best:
                    best = c
                    best_path[:] = arr
            else:
                # close out the last two slots in both orders directly
                a = arr[m - 2]
                b = arr[m - 1]
                c1 = c + C[a, b]
                if c1 < best:
                    best = c1
                    best_path[:] = arr
            arr[d], arr[i] = arr[i], arr[d]
            at[d] = i + 1
            continue
        acc[d + 1] = c
        d += 1
        at[d] = d
    return best_path


@njit(cache=True)
def _set_bound(C, mask, n):
    """Lower bound on an open path through the unvisited vertices alone.

    The path has one outgoing edge per vertex but its last, one incoming
    edge per vertex but its first, and spans the set; each observation gives
    a bound (row minima, column minima, spanning tree) and the largest wins.
    """
    rows = 0.0
    cols = 0.0
    worst_r = 0.0
    worst_c = 0.0
    count = 0
    for u in range(n):
        if mask & (1 << u):
            continue
        count += 1
        rm = np.inf
        cm = np.inf
        for w in range(n):
            if w == u or (mask & (1 << w)):
                continue
            if C[u, w] < rm:
                rm = C[u, w]
            if C[w, u] < cm:
                cm = C[w, u]
        if count > 0 and rm < np.inf:
            rows += rm
            cols += cm
            worst_r = max(worst_r, rm)
            worst_c = max(worst_c, cm)
    if count <= 1:
        return 0.0
    return max(rows - worst_r, cols - worst_c, _tree_bound(C, mask, n))


@njit(cache=True)
def _tree_bound(C, mask, n):
    # spanning tree of the unvisited set under min(C[i, j], C[j, i])
    key = np.full(n, np.inf)
    done = np.zeros(n, np.bool_)
    root = -1
    for u in range(n):
        if mask & (1 << u):
            done[u] = True
        elif root < 0:
            root = u
    done[root] = True
    for u in range(n):
        if not done[u]:
            key[u] = min(C[root, u], C[u, root])
    total = 0.0
    while True:
        v = -1
        for u in range(n):
            if not done[u] and (v < 0 or key[u] < key[v]):
                v = u
        if v < 0:
            return total
        done[v] = True
        total += key[v]
        for u in range(n):
            if not done[u]:
                e = min(C[v, u], C[u, v])
                if e < key[u]:
                    key[u] = e


@njit(cache=True)
def _row_min_bound(C, last, mask, n, memo):
    """Cheapest edge out of ``last`` plus the cached bound of the unvisited set."""
    if mask == (1 << n) - 1:
        return 0.0
    h = memo[mask]
    if np.isnan(h):
        h = memo[mask] = _set_bound(C, mask, n)
    first = np.inf
    cols = 0.0
    for u in range(n):
        if mask & (1 << u):
            continue
        if C[last, u] < first:
            first = C[last, u]
        # one edge enters every unvisited vertex, from ``last`` or the set
        cm = C[last, u]
        for w in range(n):
            if w != u and not (mask & (1 << w)) and C[w, u] < cm:
                cm = C[w, u]
        cols += cm
    return max(first + h, cols)


@njit(cache=True)
def _branch_and_bound(C, start, upper):
    n = C.shape[0]
    full = (1 << n) - 1
    # best cost seen per (visited set, last vertex); dense table
    best_g = np.full((1 << n) * n, np.inf)
    memo = np.full(1 << n, np.nan)
    cap = 1 << 16
    node_last = np.empty(cap, np.int64)
    node_parent = np.empty(cap, np.int64)
    node_mask = np.empty(cap, np.int64)
    node_g = np.empty(cap)
    node_last[0] = start
    node_parent[0] = -1
    node_mask[0] = 1 << start
    node_g[0] = 0.0
    size = 1
    heap = [(_row_min_bound(C, start, np.int64(1 << start), n, memo), np.int64(0))]
    tol = 1e-9 * max(1.0, upper)
    goal = -1
    while len(heap) > 0:
        f, k = heapq.heappop(heap)
        mask = node_mask[k]
        last = node_last[k]
        g = node_g[k]
        if mask == full:
            goal = k
            break
        if best_g[mask * n + last] < g:
            continue
        for v in range(n):
            if mask & (1 << v):
                continue
            ng = g + C[last, v]
            nmask = mask | (1 << v)
            nkey = nmask * n + v
            if best_g[nkey] <= ng:
                continue
            nf = ng + _row_min_bound(C, v, nmask, n, memo)
            if nf > upper + tol:
                continue
            best_g[nkey] = ng
            if size == cap:
                cap *= 2
                node_last = _grow_i(node_last, cap)
                node_parent = _grow_i(node_parent, cap)
                node_mask = _grow_i(node_mask, cap)
                node_g = _grow_f(node_g, cap)
            node_last[size] = v
            node_parent[size] = k
            node_mask[size] = nmask
            node_g[size] = ng
            heapq.heappush(heap, (nf, np.int64(size)))
            size += 1
    out = np.zeros(n, np.int64)
    if goal < 0:
        return out, False
    k = goal
    i = n - 1
    while k >= 0:
        out[i] = node_last[k]
        k = node_parent[k]
        i -= 1
    return out, True


@njit(cache=True)
def _grow_i(a, cap):
    b = np.empty(cap, np.int64)
    b[:a.shape[0]] = a
    return b


@njit(cache=True)
def _grow_f(a, cap):
    b = np.empty(cap)
    b[:a.shape[0]] = a
    return b


@njit(cache=True)
def _nearest_neighbour(C, start):
    n = C.shape[0]
    route = np.zeros(n, np.int64)
    used = np.zeros(n, np.bool_)
    route[0] = start
    used[start] = True
    for k in range(1, n):
        last = route[k - 1]
        best = -1
        for v in range(n):
            if not used[v] and (best < 0 or C[last, v] < C[last, best]):
                best = v
        route[k] = best
        used[best] = True
    return route


@njit(cache=True)
def _two_opt_deltas(C, r):
    """Cost change of reversing r[i..j] for every 1 <= i < j < n."""
    n = r.shape[0]
    fwd = np.zeros(n)
    bwd = np.zeros(n)
    for k in range(1, n):
        fwd[k] = fwd[k - 1] + C[r[k - 1], r[k]]
        bwd[k] = bwd[k - 1] + C[r[k], r[k - 1]]
    delta = np.zeros((n, n))
    for i in range(1, n - 1):
        for j in range(i + 1, n):
            old = C[r[i - 1], r[i]] + (fwd[j] - fwd[i])
            new = C[r[i - 1], r[j]] + (bwd[j] - bwd[i])
            if j < n - 1:
                old += C[r[j], r[j + 1]]
                new += C[r[i], r[j + 1]]
            delta[i, j] = new - old
    return delta


@njit(cache=True)
def _two_opt(C, route):
    r = route.copy()
    n = r.shape[0]
    scale = 0.0
    for a in range(n):
        for b in range(n):
            if C[a, b] > scale:
                scale = C[a, b]
    eps = 1e-12 * max(scale, 1.0)
    while True:
        delta = _two_opt_deltas(C, r)
        bi = -1
        bj = -1
        bd = -eps
        for i in range(1, n - 1):
            for j in range(i + 1, n):
                if delta[i, j] < bd:
                    bd = delta[i, j]
                    bi = i
                    bj = j
        if bi < 0:
            return r
        r[bi:bj + 1] = r[bi:bj + 1][::-1].copy()


@njit(cache=True)
def _multi_start_upper(C, start):
    # best 2-opt route over every choice of second vertex; a tighter
    # incumbent lets branch and bound prune more
    n = C.shape[0]
    best = np.inf
    for v in range(n):
        if v == start:
            continue
        route = np.zeros(n, np.int64)
        used = np.zeros(n, np.bool_)
        route[0] = start
        route[1] = v
        used[start] = True
        used[v] = True
        for k in range(2, n):
            last = route[k - 1]
            nxt = -1
            for u in range(n):
                if not used[u] and (nxt < 0 or C[last, u] < C[last, nxt]):
                    nxt = u
            route[k] = nxt
            used[nxt] = True
        route = _two_opt(C, route)
        c = 0.0
        for k in range(n - 1):
            c += C[route[k], route[k + 1]]
        if c < best:
            best = c
    return best


def two_opt_deltas(cost, route) -> np.ndarray:
    return _two_opt_deltas(np.asarray(cost, dtype=float), np.asarray(route, dtype=np.int64))


def nearest_neighbour_route(cost, start: int = 0) -> list[int]:
    return _nearest_neighbour(np.asarray(cost, dtype=float), int(start)).tolist()


def tsp_route(cost, start: int = 0) -> list[int]:
    """Open route from ``start`` through every vertex of ``cost``."""
    C = np.asarray(cost, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("cost matrix must be square")
    if (C < 0).any():
        raise ValueError("cost matrix must be non-negative")
    n = C.shape[0]
    if not 0 <= start < n:
        raise ValueError("start vertex out of range")
    if n <= 2:
        return [start] + [v for v in range(n) if v != start]
    if n <= BRUTE_FORCE_MAX:
        return [start] + _brute_force(C, start).tolist()
    seed = _two_opt(C, _nearest_neighbour(C, start))
    if n <= BRANCH_BOUND_MAX:
        upper = min(route_cost(C, seed.tolist()), _multi_start_upper(C, start))
        route, ok = _branch_and_bound(C, start, upper)
        if ok:
            return route.tolist()
    return seed.tolist()
