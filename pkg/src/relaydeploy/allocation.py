"""Geodesic cost matrices, relay-priority scaling and Hungarian allocation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import fmm
from .errors import InfeasibleClusterError, UnreachableError
from .grid_world import GridMap, world_to_cell

SENTINEL = 1e9
MIN_COST_FLOOR = 1e-6

RELAY = "relay"
PRIMARY = "primary"


class FieldCache:
    """Unit-speed distance fields keyed by source cell, solved on demand."""

    def __init__(self, grid: GridMap):
        self.grid = grid
        self._fields = {}
        self.solves = 0

    def field(self, p) -> fmm.DistanceField:
        c = world_to_cell(p, self.grid)
        f = self._fields.get(c)
        if f is None:
            f = self._fields[c] = fmm.solve(self.grid, [c])
            self.solves += 1
        return f

    def distance(self, a, b) -> float:
        """Geodesic meters from ``a`` to ``b`` (``inf`` when disconnected)."""
        return self.field(b).at(world_to_cell(a, self.grid))

    def __len__(self):
        return len(self._fields)


@dataclass
class CostMatrix:
    D: np.ndarray
    goal_kinds: list = field(default_factory=list)

    def __post_init__(self):
        self.D = np.asarray(self.D, dtype=float)
        if self.D.ndim != 2:
            raise ValueError("cost matrix must be 2-D")
        if not self.goal_kinds:
            self.goal_kinds = [PRIMARY] * self.D.shape[1]
        if len(self.goal_kinds) != self.D.shape[1]:
            raise ValueError("one goal kind per column is required")

    @property
    def relay_columns(self) -> np.ndarray:
        return np.array([k == RELAY for k in self.goal_kinds], dtype=bool)


@dataclass
class Assignment:
    pairs: list
    cost: float


def build_cost_matrix(grid: GridMap, robots, goals, kinds=None,
                      cache: FieldCache | None = None) -> CostMatrix:
    """Robot-by-goal geodesic distances, one distance field per goal."""
    cache = cache or FieldCache(grid)
    cells = [world_to_cell(r, grid) for r in robots]
    D = np.empty((len(robots), len(goals)))
    for j, g in enumerate(goals):
        vals = cache.field(g).values
        for i, (cx, cy) in enumerate(cells):
            D[i, j] = vals[cy, cx]
    D[~np.isfinite(D)] = SENTINEL
    return CostMatrix(D, list(kinds) if kinds else [])


def apply_relay_priority(cm: CostMatrix) -> CostMatrix:
    """Shrink relay columns so that their largest entry equals ``min(D)``.

    Relay entries become ``D_relay * min(D) / max(D_relay)``; unreachable
    (sentinel) entries are left as they are.
    """
    relay = cm.relay_columns
    D = cm.D.copy()
    if not relay.any():
        warnings.warn("cost matrix has no relay columns; nothing to prioritise")
        return CostMatrix(D, list(cm.goal_kinds))
    if D.size == 0:
        return CostMatrix(D, list(cm.goal_kinds))
    lo = D.min()
    if lo <= 0:
        lo = MIN_COST_FLOOR
    block = D[:, relay]
    live = block < SENTINEL
    hi = block[live].max() if live.any() else 0.0
    if hi > 0:
        block = np.where(live, block * lo / hi, block)
        D[:, relay] = block
    return CostMatrix(D, list(cm.goal_kinds))


def hungarian(cm) -> Assignment:
    """Minimum-cost assignment of ``min(rows, cols)`` robot/goal pairs.

    Among equal-cost optima, the one that covers every relay column is
    returned whenever the team is large enough.
    """
    if not isinstance(cm, CostMatrix):
        cm = CostMatrix(cm)
    D = cm.D
    if D.size == 0:
        return Assignment([], 0.0)
    rows, cols = linear_sum_assignment(D)
    match = dict(zip(rows.tolist(), cols.tolist()))
    relay = cm.relay_columns
    if relay.any():
        _prefer_relays(D, match, relay)
    pairs = sorted(match.items())
    return Assignment(pairs, float(sum(D[i, j] for i, j in pairs)))


def _prefer_relays(D, match, relay):
    # swaps never raise the total cost because scaled relay costs sit at or
    # below every primary cost in the same row
    taken = set(match.values())
    for r in np.flatnonzero(relay):
        if r in taken:
            continue
        best = None
        for i, j in match.items():
            if relay[j]:
                continue
            gain = D[i, j] - D[i, r]
            if gain >= -1e-12 * max(1.0, abs(D[i, j])) and (best is None or gain > best[0]):
                best = (gain, i, j)
        if best is None:
            break
        _, i, j = best
        match[i] = int(r)
        taken.discard(j)
        taken.add(int(r))


class Task(NamedTuple):
    robot: int
    kind: str
    index: int  # position in relay_goals, or global goal id for primaries
    position: tuple
    distance: float


def allocate_cluster(grid: GridMap, cluster, robots, cache: FieldCache | None = None):
    """Rounds of assignments that deploy a cluster's chain and visit its goals.

    ``robots`` maps robot id to current position.  Round 0 assigns every
    relay goal plus a first batch of primaries; chain robots stay put and
    later rounds send the remaining visitors on from their last goal.
    """
    cache = cache or FieldCache(grid)
    robot_ids = sorted(robots)
    m_rel = cluster.m_rel
    if len(robot_ids) < m_rel + 1:
        raise InfeasibleClusterError(
            f"cluster {cluster.id} needs {m_rel + 1} robots, {len(robot_ids)} available")
    relay_goals = cluster.relay_goals
    goal_pos = list(relay_goals) + list(cluster.primary_goals)
    kinds = [RELAY] * len(relay_goals) + [PRIMARY] * cluster.pa
    positions = {r: robots[r] for r in robot_ids}

    cm = build_cost_matrix(grid, [positions[r] for r in robot_ids], goal_pos, kinds, cache)
    scaled = apply_relay_priority(cm) if relay_goals else cm
    first = hungarian(scaled)
    rounds = []
    tasks = []
    assigned_primary = set()
    pinned = set()
    for i, j in first.pairs:
        rid = robot_ids[i]
        d = cm.D[i, j]
        if d >= SENTINEL:
            raise UnreachableError(f"robot {rid} cannot reach goal {goal_pos[j]}")
        if j < len(relay_goals):
            tasks.append(Task(rid, RELAY, j, goal_pos[j], d))
            pinned.add(rid)
        else:
            gid = cluster.goal_ids[j - len(relay_goals)]
            tasks.append(Task(rid, PRIMARY, gid, goal_pos[j], d))
            assigned_primary.add(j - len(relay_goals))
        positions[rid] = goal_pos[j]
    if len(pinned) != len(relay_goals):
        raise InfeasibleClusterError(f"cluster {cluster.id}: not every relay goal was assigned")
    rounds.append(tasks)

    visitors = [r for r in robot_ids if r not in pinned]
    remaining = [k for k in range(cluster.pa) if k not in assigned_primary]
    while remaining:
        goals = [cluster.primary_goals[k] for k in remaining]
        cm = build_cost_matrix(grid, [positions[r] for r in visitors], goals, None, cache)
        res = hungarian(cm)
        tasks = []
        done = set()
        for i, j in res.pairs:
            rid = visitors[i]
            d = cm.D[i, j]
            if d >= SENTINEL:
                raise UnreachableError(f"robot {rid} cannot reach goal {goals[j]}")
            k = remaining[j]
            tasks.append(Task(rid, PRIMARY, cluster.goal_ids[k], goals[j], d))
            positions[rid] = goals[j]
            done.add(k)
        rounds.append(tasks)
        remaining = [k for k in remaining if k not in done]
    return rounds
