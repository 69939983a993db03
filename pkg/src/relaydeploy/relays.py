"""Maximum-connectivity relay selection, relay chains and goal clusters."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import fmm
from .comms import CommConfig, comm_area_flat, comm_link
from .errors import UnreachableError
from .grid_world import GridMap, WorldPoint, cell_to_world, world_to_cell


@dataclass
class MaxConRelay:
    position: WorldPoint
    covered_goals: list
    bs_geodesic: float


@dataclass
class RelayChain:
    relays: list = field(default_factory=list)  # base-station side first
    vp: fmm.Path = field(default_factory=fmm.Path)

    def __len__(self):
        return len(self.relays)


@dataclass
class Cluster:
    id: int
    x_mc: WorldPoint | None
    chain: RelayChain
    primary_goals: list
    goal_ids: list

    @property
    def is_bs(self) -> bool:
        return self.x_mc is None

    @property
    def m_rel(self) -> int:
        return 0 if self.is_bs else len(self.chain) + 1

    @property
    def pa(self) -> int:
        return len(self.primary_goals)

    @property
    def relay_goals(self) -> list:
        if self.is_bs:
            return []
        return list(self.chain.relays) + [self.x_mc]

    def anchor(self, x_bs) -> WorldPoint:
        return x_bs if self.is_bs else self.x_mc

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "x_mc": None if self.x_mc is None else list(self.x_mc),
            "chain": [list(p) for p in self.chain.relays],
            "m_rel": self.m_rel,
            "pa": self.pa,
            "goal_ids": list(self.goal_ids),
            "primary_goals": [list(p) for p in self.primary_goals],
        }


@dataclass
class ClusterSet:
    clusters: list
    unconnected_goals: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.clusters)

    def by_id(self, cid):
        for c in self.clusters:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def to_json(self) -> str:
        return json.dumps({
            "K": self.K,
            "clusters": [c.to_dict() for c in self.clusters],
            "unconnected_goals": list(self.unconnected_goals),
        }, indent=2)


def _greedy_cover(grid, x_bs, goals, cfg, bs_field=None):
    """Greedy maximum-coverage pass.

    Returns ``(relays, bs_goals, unconnected)`` where ``relays`` lists the
    chosen positions with the goals each one claimed.
    """
    if bs_field is None:
        bs_field = fmm.solve(grid, [world_to_cell(x_bs, grid)])
    dist = bs_field.values.ravel()
    reach = np.isfinite(dist)

    bs_goals, pending = [], []
    for i, g in enumerate(goals):
        (bs_goals if comm_link(grid, g, x_bs, cfg) else pending).append(i)

    areas = {}
    unconnected = []
    counter = np.zeros(grid.occupancy.size, dtype=np.int64)
    for i in pending:
        a = comm_area_flat(grid, goals[i], cfg)
        a = a[reach[a]]
        if a.size == 0:
            unconnected.append(i)
            continue
        areas[i] = a
        counter[a] += 1

    relays = []
    uncovered = sorted(areas)
    while uncovered:
        best = counter.max()
        cand = np.flatnonzero(counter == best)
        pick = cand[np.lexsort((cand, dist[cand]))[0]]
        covered = [i for i in uncovered if _contains(areas[i], pick)]
        # greedy step must claim exactly the best count
        assert len(covered) == best > 0
        for i in covered:
            counter[areas[i]] -= 1
        claimed = set(covered)
        uncovered = [i for i in uncovered if i not in claimed]
        relays.append(MaxConRelay(cell_to_world(grid.cell_of_flat(pick), grid),
                                  covered, float(dist[pick])))
    return relays, bs_goals, unconnected


def _contains(sorted_arr, value) -> bool:
    k = np.searchsorted(sorted_arr, value)
    return k < sorted_arr.size and sorted_arr[k] == value


def max_connectivity_relays(grid: GridMap, x_bs, goals, cfg: CommConfig) -> list[MaxConRelay]:
    """Relay positions covering every goal outside the base station's range."""
    return _greedy_cover(grid, x_bs, goals, cfg)[0]


def _snapped_path(grid, path):
    out = []
    for p in path.points:
        c = cell_to_world(world_to_cell(p, grid), grid)
        if not out or out[-1] != c:
            out.append(c)
    return out


def build_relay_chain(grid: GridMap, x_bs, mc: MaxConRelay, cfg: CommConfig,
                      bs_field_v: fmm.DistanceField) -> RelayChain:
    """Place relays along the Voronoi path from ``mc`` back to the base station.

    From each anchor the next relay goes on the path point closest to the
    base station that the anchor can still talk to.
    """
    target = mc.position if isinstance(mc, MaxConRelay) else mc
    try:
        vp = fmm.voronoi_path(grid, bs_field_v, target)
    except UnreachableError:
        raise UnreachableError(f"no Voronoi path to {tuple(target)}") from None
    pts = _snapped_path(grid, vp)
    anchor = len(pts) - 1
    relays = []
    while not comm_link(grid, pts[anchor], x_bs, cfg):
        nxt = None
        for i in range(1, anchor):
            if comm_link(grid, pts[anchor], pts[i], cfg):
                nxt = i
                break
        if nxt is None:
            raise UnreachableError(f"relay chain to {tuple(target)} cannot advance")
        relays.append(pts[nxt])
        anchor = nxt
    relays.reverse()
    return RelayChain(relays, vp)


def form_clusters(grid: GridMap, x_bs, goals, cfg: CommConfig,
                  bs_field=None, bs_field_v=None) -> ClusterSet:
    """Group goals into the base-station cluster and one cluster per relay."""
    x_bs = cell_to_world(world_to_cell(x_bs, grid), grid)
    relays, bs_goals, unconnected = _greedy_cover(grid, x_bs, goals, cfg, bs_field)
    clusters = []
    if bs_goals:
        clusters.append(Cluster(0, None, RelayChain(), [goals[i] for i in bs_goals], bs_goals))
    if relays and bs_field_v is None:
        bs_field_v = fmm.voronoi_field(grid, x_bs)
    for k, mc in enumerate(relays, start=1):
        chain = build_relay_chain(grid, x_bs, mc, cfg, bs_field_v)
        clusters.append(Cluster(k, mc.position, chain,
                                [goals[i] for i in mc.covered_goals], list(mc.covered_goals)))
    return ClusterSet(clusters, unconnected)
