"""Cluster visit ordering: sequential heuristics S1-S8 and concurrent plans C1-C9.

Sequential heuristics route the whole team through the clusters one at a
time.  Concurrent heuristics build a tree of clusters rooted at the base
station (RL, DL or RDL) and then open several chains per wave (LC, MC or
MP), splitting the free robots between the reachable clusters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import FieldCache
from .errors import InfeasiblePlanError
from .tsp import tsp_route

SEQUENTIAL = ("S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8")
CONCURRENT = {
    "C1": ("RL", "LC"), "C2": ("RL", "MC"), "C3": ("RL", "MP"),
    "C4": ("DL", "LC"), "C5": ("DL", "MC"), "C6": ("DL", "MP"),
    "C7": ("RDL", "LC"), "C8": ("RDL", "MC"), "C9": ("RDL", "MP"),
}
HEURISTICS = SEQUENTIAL + tuple(CONCURRENT)

# destination-cluster terms multiplied onto the normalised distance
_TERMS = {
    "S3": ("RA",), "S4": ("PA",), "S5": ("CMD",), "S6": ("CWD",),
    "S7": ("PA", "CMD"), "S8": ("PA", "CWD"),
}


def normalize(v) -> np.ndarray:
    """Divide by the maximum; an all-zero input stays all-zero."""
    v = np.asarray(v, dtype=float)
    top = v.max() if v.size else 0.0
    return v / top if top > 0 else np.zeros_like(v)


@dataclass
class ClusterMetrics:
    ids: list
    CD: np.ndarray
    CD_bs: np.ndarray
    RA: np.ndarray
    PA: np.ndarray
    CMD: np.ndarray
    CWD: np.ndarray
    m_rel: np.ndarray

    @property
    def K(self) -> int:
        return len(self.ids)

    def with_bs(self) -> np.ndarray:
        """Distance matrix with the base station prepended as vertex 0."""
        K = self.K
        A = np.zeros((K + 1, K + 1))
        A[0, 1:] = self.CD_bs
        A[1:, 0] = self.CD_bs
        A[1:, 1:] = self.CD
        return A

    def subset(self, keep) -> "ClusterMetrics":
        idx = [self.ids.index(c) for c in keep]
        return ClusterMetrics(
            [self.ids[i] for i in idx], self.CD[np.ix_(idx, idx)], self.CD_bs[idx],
            self.RA[idx], self.PA[idx], self.CMD[idx], self.CWD[idx], self.m_rel[idx])


def cluster_metrics(grid, clusters, x_bs, team_size: int,
                    cache: FieldCache | None = None) -> ClusterMetrics:
    cache = cache or FieldCache(grid)
    clusters = list(clusters)
    K = len(clusters)
    anchors = [c.anchor(x_bs) for c in clusters]
    CD = np.zeros((K, K))
    for i in range(K):
        for j in range(i + 1, K):
            # first-order fields are not exactly symmetric; average both ways
            d = 0.5 * (cache.distance(anchors[i], anchors[j]) +
                       cache.distance(anchors[j], anchors[i]))
            CD[i, j] = CD[j, i] = d
    CD_bs = np.array([cache.distance(a, x_bs) for a in anchors])
    m_rel = np.array([c.m_rel for c in clusters], dtype=int)
    RA = (m_rel + 1) / float(team_size)
    PA = np.array([c.pa for c in clusters], dtype=float)
    CMD = np.zeros(K)
    CWD = np.zeros(K)
    for i, c in enumerate(clusters):
        d = [cache.distance(g, anchors[i]) for g in c.primary_goals]
        if d:
            CMD[i] = float(np.mean(d))
            CWD[i] = float(np.max(d))
    return ClusterMetrics([c.id for c in clusters], CD, CD_bs, RA, PA, CMD, CWD, m_rel)


@dataclass
class SequentialOrder:
    heuristic: str
    order: list
    skipped: list = field(default_factory=list)


def sequential_cost(metrics: ClusterMetrics, heuristic: str) -> np.ndarray:
    """Edge costs over base station + clusters for a routed heuristic."""
    A = metrics.with_bs()
    if heuristic == "S1":
        return A
    terms = _TERMS[heuristic]
    weight = np.ones(metrics.K)
    for t in terms:
        if t == "RA":
            weight = weight * metrics.RA
        else:
            weight = weight * normalize(getattr(metrics, t))
    C = normalize(A) * np.concatenate([[0.0], weight])[None, :]
    return C


def sequential_order(metrics: ClusterMetrics, heuristic: str) -> SequentialOrder:
    if heuristic not in SEQUENTIAL:
        raise ValueError(f"unknown sequential heuristic {heuristic!r}")
    K = metrics.K
    if K == 0:
        return SequentialOrder(heuristic, [])
    if heuristic == "S2":
        idx = sorted(range(K), key=lambda i: (metrics.RA[i], metrics.CD_bs[i], metrics.ids[i]))
        return SequentialOrder(heuristic, [metrics.ids[i] for i in idx])
    route = tsp_route(sequential_cost(metrics, heuristic), 0)
    return SequentialOrder(heuristic, [metrics.ids[v - 1] for v in route[1:]])


@dataclass
class ClusterGraph:
    mode: str
    order: list          # metric indices in connection order
    parent: dict         # metric index -> parent metric index, -1 for the base station
    level: dict          # metric index -> hop level
    weights: dict = field(default_factory=dict)

    @property
    def total_weight(self) -> float:
        return float(sum(self.weights.values()))


def _relay_sort(metrics):
    return sorted(range(metrics.K), key=lambda i: (metrics.m_rel[i], metrics.CD_bs[i], i))


def build_cluster_graph(metrics: ClusterMetrics, mode: str) -> ClusterGraph:
    """Tree over the clusters rooted at the base station.

    RL groups clusters by relay demand; each group is one level and hangs
    off the closest cluster of the previous group.  DL is Prim's rule on the
    cluster distances.  RDL takes clusters in RL order but hangs each one
    off the closest cluster already in the tree.
    """
    if mode not in ("RL", "DL", "RDL"):
        raise ValueError(f"unknown cluster graph mode {mode!r}")
    A = metrics.with_bs()  # vertex v+1 is cluster v, vertex 0 the base station
    K = metrics.K
    order, parent, level, weights = [], {}, {}, {}

    def attach(v, p):
        order.append(v)
        parent[v] = p
        level[v] = 1 if p < 0 else level[p] + 1
        weights[v] = float(A[p + 1, v + 1])

    if mode == "RL":
        prev_group, group, demand = [-1], [], None
        for v in _relay_sort(metrics):
            if demand is not None and metrics.m_rel[v] != demand:
                prev_group, group = group, []
            demand = metrics.m_rel[v]
            p = min(prev_group, key=lambda u: (A[u + 1, v + 1], u))
            attach(v, p)
            group.append(v)
    elif mode == "RDL":
        connected = [-1]
        for v in _relay_sort(metrics):
            p = min(connected, key=lambda u: (A[u + 1, v + 1], u))
            attach(v, p)
            connected.append(v)
    else:
        connected = [-1]
        left = set(range(K))
        while left:
            _, v, p = min((A[u + 1, w + 1], w, u) for w in left for u in connected)
            attach(v, p)
            connected.append(v)
            left.discard(v)
    return ClusterGraph(mode, order, parent, level, weights)


@dataclass
class Wave:
    opened: list                              # cluster ids whose chains deploy now
    visitors: dict = field(default_factory=dict)  # cluster id -> visitor count


@dataclass
class ConcurrentPlan:
    heuristic: str
    waves: list
    skipped: list = field(default_factory=list)

    @property
    def order(self) -> list:
        return [c for w in self.waves for c in w.opened]


def distribute_visitors(budget: int, pa: dict) -> dict:
    """Split ``budget`` robots across clusters proportionally to their goals.

    Largest-remainder rounding (ties to larger PA, then lower id); every
    cluster gets at least one visitor when the budget allows and none gets
    more visitors than it has goals.
    """
    ids = list(pa)
    if not ids or budget <= 0:
        return {c: 0 for c in ids}
    total = float(sum(pa.values()))
    if total <= 0:
        return {c: 0 for c in ids}
    quota = {c: budget * pa[c] / total for c in ids}
    out = {c: int(np.floor(quota[c])) for c in ids}
    left = budget - sum(out.values())
    for c in sorted(ids, key=lambda c: (-(quota[c] - out[c]), -pa[c], c))[:left]:
        out[c] += 1
    for c in sorted(ids, key=lambda c: (-pa[c], c)):
        if out[c] == 0 and pa[c] > 0:
            donor = max((d for d in ids if out[d] > 1), key=lambda d: (out[d], -d), default=None)
            if donor is None:
                break
            out[donor] -= 1
            out[c] += 1
    spare = 0
    for c in ids:
        if out[c] > pa[c]:
            spare += out[c] - int(pa[c])
            out[c] = int(pa[c])
    while spare:
        room = [c for c in ids if out[c] < pa[c]]
        if not room:
            break
        c = max(room, key=lambda c: (pa[c] - out[c], -c))
        out[c] += 1
        spare -= 1
    return out


def feasible_clusters(metrics: ClusterMetrics, team_size: int):
    keep = [metrics.ids[i] for i in range(metrics.K) if metrics.m_rel[i] + 1 <= team_size]
    skipped = [metrics.ids[i] for i in range(metrics.K) if metrics.m_rel[i] + 1 > team_size]
    return keep, skipped


def concurrent_plan(graph: ClusterGraph, metrics: ClusterMetrics, strategy: str,
                    team_size: int, heuristic: str = "") -> ConcurrentPlan:
    """Group clusters into waves that each fit the team."""
    if strategy not in ("LC", "MC", "MP"):
        raise ValueError(f"unknown extension strategy {strategy!r}")
    need = {v: int(metrics.m_rel[v]) + 1 for v in graph.order}
    skipped = [metrics.ids[v] for v in graph.order if need[v] > team_size]
    remaining = [v for v in graph.order if need[v] <= team_size]
    if graph.order and not remaining:
        raise InfeasiblePlanError("no cluster fits the team", skipped)
    waves = []
    while remaining:
        if strategy == "MP":
            v = max(remaining, key=lambda v: (metrics.PA[v] / need[v], -remaining.index(v)))
            chosen = [v]
            # spare robots beyond one per goal would idle, so the count stops at PA
            visitors = {metrics.ids[v]: min(team_size - int(metrics.m_rel[v]), int(metrics.PA[v]))}
        else:
            if strategy == "LC":
                lowest = min(graph.level[v] for v in remaining)
                cands = [v for v in remaining if graph.level[v] == lowest]
            else:
                cands = list(remaining)
            chosen, used = [], 0
            for v in cands:
                if used + need[v] <= team_size:
                    chosen.append(v)
                    used += need[v]
            free = team_size - sum(int(metrics.m_rel[v]) for v in chosen)
            visitors = distribute_visitors(free, {metrics.ids[v]: int(metrics.PA[v]) for v in chosen})
        waves.append(Wave([metrics.ids[v] for v in chosen], visitors))
        remaining = [v for v in remaining if v not in chosen]
    return ConcurrentPlan(heuristic or strategy, waves, skipped)


def plan_visits(metrics: ClusterMetrics, heuristic: str, team_size: int):
    """SequentialOrder or ConcurrentPlan for a heuristic id (S1-S8, C1-C9)."""
    if heuristic in SEQUENTIAL:
        keep, skipped = feasible_clusters(metrics, team_size)
        seq = sequential_order(metrics.subset(keep), heuristic)
        seq.skipped = skipped
        return seq
    if heuristic in CONCURRENT:
        mode, strategy = CONCURRENT[heuristic]
        graph = build_cluster_graph(metrics, mode)
        return concurrent_plan(graph, metrics, strategy, team_size, heuristic)
    raise ValueError(f"unknown heuristic {heuristic!r}")
