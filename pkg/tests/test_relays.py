from __future__ import annotations

import numpy as np
import pytest

from conftest import TWO_ROOMS_BS, TWO_ROOMS_GOALS, corridor, two_rooms
from relaydeploy import fmm
from relaydeploy.comms import CommConfig, comm_link
from relaydeploy.grid_world import GridMap, WorldPoint, cell_to_world, reachable_mask, world_to_cell
from relaydeploy.relays import (MaxConRelay, build_relay_chain, form_clusters,
                                max_connectivity_relays)

CFG = CommConfig(10.0)


def random_scene(seed, n_goals, size=40, fill=0.15, res=0.5):
    rng = np.random.default_rng(seed)
    occ = rng.random((size, size)) < fill
    occ[size // 2 - 1:size // 2 + 2, 1:4] = False
    grid = GridMap(occ, res)
    bs = cell_to_world((2, size // 2), grid)
    reach = np.argwhere(reachable_mask(grid, bs))
    picks = reach[rng.choice(len(reach), n_goals, replace=False)]
    return grid, bs, [cell_to_world((x, y), grid) for y, x in picks]


def greedy_oracle(grid, bs, goals, cfg):
    """Greedy cover with every coverage count found by an exhaustive link scan."""
    pending = [i for i, g in enumerate(goals) if not comm_link(grid, g, bs, cfg)]
    dist = fmm.solve(grid, [world_to_cell(bs, grid)]).values
    free = [(x, y) for y, x in np.argwhere(~grid.occupancy) if np.isfinite(dist[y, x])]
    covers = {c: {i for i in pending if comm_link(grid, cell_to_world(c, grid), goals[i], cfg)}
              for c in free}
    picks, left = [], set(pending)
    while True:
        scored = [(len(covers[c] & left), c) for c in free]
        best = max(s for s, _ in scored)
        if best == 0:
            return picks, left
        c = min((dist[c[1], c[0]], c[1], c[0]) for s, c in scored if s == best)
        cell = (c[2], c[1])
        picks.append((cell, best))
        left -= covers[cell]


def test_all_goals_near_bs():
    grid = GridMap(np.zeros((30, 30), dtype=bool), 0.5)
    bs = WorldPoint(7.25, 7.25)
    goals = [WorldPoint(2.25, 3.25), WorldPoint(12.75, 11.25), WorldPoint(7.25, 14.25)]
    assert max_connectivity_relays(grid, bs, goals, CFG) == []
    cs = form_clusters(grid, bs, goals, CFG)
    assert cs.K == 1 and cs.clusters[0].is_bs
    assert cs.clusters[0].m_rel == 0 and cs.clusters[0].pa == 3


def test_two_rooms_layout():
    grid = two_rooms()
    relays = max_connectivity_relays(grid, TWO_ROOMS_BS, TWO_ROOMS_GOALS, CFG)
    assert [len(r.covered_goals) for r in relays] == [3, 2]
    cs = form_clusters(grid, TWO_ROOMS_BS, TWO_ROOMS_GOALS, CFG)
    assert cs.K == 2
    assert sorted(c.pa for c in cs.clusters) == [2, 3]
    assert [c.m_rel for c in cs.clusters] == [3, 3]
    assert cs.unconnected_goals == []


def test_straight_corridor_chain():
    grid = corridor(54, width_cells=6, resolution=0.5)
    bs = cell_to_world((1, 4), grid)
    far = cell_to_world((51, 4), grid)
    assert far[0] - bs[0] == pytest.approx(25.0)
    chain = build_relay_chain(grid, bs, MaxConRelay(far, [0], 25.0), CFG, fmm.voronoi_field(grid, bs))
    assert len(chain) == 2
    hops = [bs] + chain.relays + [far]
    assert all(comm_link(grid, a, b, CFG) for a, b in zip(hops, hops[1:]))


def test_mc_in_bs_range_has_empty_chain():
    grid = corridor(30)
    bs = cell_to_world((1, 4), grid)
    near = cell_to_world((15, 4), grid)
    chain = build_relay_chain(grid, bs, MaxConRelay(near, [0], 7.0), CFG, fmm.voronoi_field(grid, bs))
    assert len(chain) == 0


@pytest.mark.parametrize("seed", range(8))
def test_greedy_matches_exhaustive_scan(seed):
    cfg = CommConfig(4.0)
    grid, bs, goals = random_scene(seed, 6)
    relays = max_connectivity_relays(grid, bs, goals, cfg)
    picks, left = greedy_oracle(grid, bs, goals, cfg)
    assert [len(r.covered_goals) for r in relays] == [n for _, n in picks]
    assert [world_to_cell(r.position, grid) for r in relays] == [c for c, _ in picks]
    assert not left


def _audit(grid, bs, goals, cfg, cs):
    seen = list(cs.unconnected_goals)
    for c in cs.clusters:
        seen += c.goal_ids
        hub = c.anchor(bs)
        assert all(comm_link(grid, g, hub, cfg) for g in c.primary_goals)
        if c.is_bs:
            continue
        assert c.m_rel == len(c.chain) + 1
        hops = [bs] + c.chain.relays + [c.x_mc]
        assert all(comm_link(grid, a, b, cfg) for a, b in zip(hops, hops[1:]))
        on_path = {world_to_cell(p, grid) for p in c.chain.vp.points}
        assert all(world_to_cell(r, grid) in on_path for r in c.chain.relays)
    assert sorted(seen) == list(range(len(goals)))


def test_chain_and_partition_audit_random():
    cfg = CommConfig(5.0)
    for seed in range(100):
        grid, bs, goals = random_scene(seed, 8, size=36, fill=0.2)
        cs = form_clusters(grid, bs, goals, cfg)
        _audit(grid, bs, goals, cfg, cs)


def test_unconnected_goals_reported():
    occ = np.zeros((20, 60), dtype=bool)
    occ[:, 30] = True
    grid = GridMap(occ, 0.5)
    bs = WorldPoint(1.25, 5.25)
    # the second goal sits behind a wall with no reachable cell in range
    goals = [WorldPoint(3.25, 5.25), WorldPoint(25.25, 5.25)]
    cs = form_clusters(grid, bs, goals, CommConfig(3.0))
    assert cs.unconnected_goals == [1]
    assert cs.K == 1


def test_form_clusters_deterministic():
    grid = two_rooms()
    a = form_clusters(grid, TWO_ROOMS_BS, TWO_ROOMS_GOALS, CFG).to_json()
    b = form_clusters(grid, TWO_ROOMS_BS, TWO_ROOMS_GOALS, CFG).to_json()
    assert a == b
