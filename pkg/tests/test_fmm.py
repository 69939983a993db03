from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import block_room, corridor, two_rooms
from oracles import grid_dijkstra
from relaydeploy import fmm
from relaydeploy.errors import InvalidSourceError, UnreachableError
from relaydeploy.grid_world import GridMap, WorldPoint, cell_to_world, world_to_cell

# 8-connected paths overshoot straight lines by at most 1/cos(22.5 deg)
OCTILE_SLACK = 1.0 / math.cos(math.pi / 8)


def random_map(seed, shape=(40, 40), fill=0.2):
    rng = np.random.default_rng(seed)
    occ = rng.random(shape) < fill
    free = np.argwhere(~occ)
    y, x = free[rng.integers(len(free))]
    return GridMap(occ, 1.0), (int(x), int(y))


def test_source_value_zero(empty_map):
    f = fmm.solve(empty_map, [(3, 4), (40, 40)])
    assert f.at((3, 4)) == 0.0 and f.at((40, 40)) == 0.0


def test_empty_map_corner_to_corner(empty_map):
    f = fmm.solve(empty_map, [(0, 0)])
    assert f.at((49, 49)) == pytest.approx(49 * math.sqrt(2), rel=0.02)


def test_resolution_scales_values():
    a = fmm.solve(GridMap(np.zeros((20, 20), dtype=bool), 1.0), [(0, 0)])
    b = fmm.solve(GridMap(np.zeros((20, 20), dtype=bool), 0.25), [(0, 0)])
    assert np.allclose(b.values, 0.25 * a.values)


def test_u_wall_against_graph_oracle():
    occ = np.zeros((40, 40), dtype=bool)
    occ[10, 8:32] = True
    occ[10:30, 8] = True
    occ[10:30, 31] = True
    g = GridMap(occ, 1.0)
    f = fmm.solve(g, [(20, 20)])
    ref = grid_dijkstra(occ, 1.0, (20, 20))[5, 20]
    # straight-line detour is at least 30 m, far beyond the 15 m crow-flies gap
    assert ref > 30
    assert ref / OCTILE_SLACK <= f.at((20, 5)) <= 1.05 * ref


def test_invalid_sources(empty_map):
    occ = np.zeros((5, 5), dtype=bool)
    occ[2, 2] = True
    g = GridMap(occ, 1.0)
    with pytest.raises(InvalidSourceError):
        fmm.solve(g, [(2, 2)])
    with pytest.raises(InvalidSourceError):
        fmm.solve(g, [])
    with pytest.raises(InvalidSourceError):
        fmm.solve(g, [(7, 0)])
    with pytest.raises(ValueError):
        fmm.solve(g, [(0, 0)], speed=np.ones((4, 4)))


def test_unreached_cells_are_inf():
    occ = np.zeros((5, 7), dtype=bool)
    occ[:, 3] = True
    f = fmm.solve(GridMap(occ, 1.0), [(0, 0)])
    assert np.isinf(f.values[:, 4:]).all()
    assert np.isinf(f.values[:, 3]).all()
    assert np.isfinite(f.values[:, :3]).all()
    assert not f.reached((5, 2))


@pytest.mark.parametrize("seed", range(5))
def test_no_local_minima_off_sources(seed):
    g, src = random_map(seed)
    D = fmm.solve(g, [src]).values
    H, W = D.shape
    for y in range(H):
        for x in range(W):
            if not np.isfinite(D[y, x]) or (x, y) == src:
                continue
            nb = [D[y + dy, x + dx] for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
                  if 0 <= x + dx < W and 0 <= y + dy < H]
            assert D[y, x] >= min(nb)


def _upwind(a, b, t):
    if a > b:
        a, b = b, a
    if b == np.inf or b - a >= t:
        return a + t
    return 0.5 * (a + b + math.sqrt(2 * t * t - (b - a) ** 2))


@pytest.mark.parametrize("seed", range(3))
def test_eikonal_residual(seed):
    g, src = random_map(seed, fill=0.15)
    rng = np.random.default_rng(seed)
    speed = np.where(g.occupancy, 0.0, rng.uniform(0.2, 1.0, g.occupancy.shape))
    D = fmm.solve(g, [src], speed).values
    H, W = D.shape
    checked = 0
    for y in range(H):
        for x in range(W):
            if not np.isfinite(D[y, x]) or (x, y) == src:
                continue
            d = D[y, x]

            def up(cells):
                vals = [D[cy, cx] for cx, cy in cells
                        if 0 <= cx < W and 0 <= cy < H and D[cy, cx] <= d]
                return min(vals, default=np.inf)
            a = up([(x - 1, y), (x + 1, y)])
            b = up([(x, y - 1), (x, y + 1)])
            assert abs(_upwind(a, b, 1.0 / speed[y, x]) - d) <= 1e-6
            checked += 1
    assert checked > 500


@given(seed=st.integers(0, 10_000), boost=st.floats(1.0, 3.0))
@settings(max_examples=25, deadline=None)
def test_monotone_in_speed(seed, boost):
    g, src = random_map(seed % 50, shape=(20, 20))
    rng = np.random.default_rng(seed)
    slow = np.where(g.occupancy, 0.0, rng.uniform(0.1, 0.5, g.occupancy.shape))
    fast = np.where(g.occupancy, 0.0, slow * rng.uniform(1.0, boost, slow.shape))
    a = fmm.solve(g, [src], slow).values
    b = fmm.solve(g, [src], fast).values
    live = np.isfinite(a)
    assert np.all(b[live] <= a[live] + 1e-12)


def test_deterministic():
    g, src = random_map(11)
    a = fmm.solve(g, [src]).values
    b = fmm.solve(g, [src]).values
    assert np.array_equal(a, b)


def test_csv_dump():
    occ = np.array([[False, True], [False, False]])
    text = fmm.solve(GridMap(occ, 1.0), [(0, 0)]).to_csv()
    rows = text.strip().splitlines()
    assert rows[0].split(",")[1] == "inf"
    assert float(rows[1].split(",")[0]) == 1.0


# -- obstacle distance and clearance speed --------------------------------

def test_obstacle_distance_basics():
    occ = np.zeros((11, 11), dtype=bool)
    occ[5, 5] = True
    g = GridMap(occ, 0.5)
    f = fmm.obstacle_distance_field(g)
    assert f.at((5, 5)) == 0.0
    assert f.at((5, 4)) == pytest.approx(0.5, rel=0.3)


@pytest.mark.parametrize("shape", [(9, 9), (10, 10), (7, 12)])
def test_obstacle_distance_peaks_at_center(shape):
    g = GridMap(np.zeros(shape, dtype=bool), 1.0)
    f = fmm.obstacle_distance_field(g)
    H, W = shape
    # brute force: distance from each cell center to the padded boundary ring
    ys, xs = np.mgrid[0:H, 0:W]
    oracle = np.minimum.reduce([xs + 1, W - xs, ys + 1, H - ys]).astype(float)
    best = set(zip(*np.nonzero(oracle == oracle.max())))
    peak = set(zip(*np.nonzero(f.values == f.values.max())))
    assert peak <= best


def test_voronoi_speed_properties():
    g = corridor(30, width_cells=9, resolution=0.5)
    F = fmm.voronoi_speed(g)
    assert np.all(F[g.occupancy] == 0)
    assert F.max() == 1.0
    assert F[g.free].min() >= fmm.SPEED_FLOOR
    col = F[1:-1, 15]
    center = len(col) // 2
    assert col[center] > col[0]
    # clearance grows monotonically toward the centerline
    assert np.all(np.diff(col[:center + 1]) > 0)
    obst = fmm.obstacle_distance_field(g).values
    free = g.free
    order = np.argsort(obst[free], kind="stable")
    assert np.all(np.diff(F[free][order]) >= 0)


# -- descent ----------------------------------------------------------------

def test_descend_from_source(empty_map):
    f = fmm.solve(empty_map, [(5, 5)])
    p = fmm.descend(f, empty_map, cell_to_world((5, 5), empty_map))
    assert len(p) == 1 and p.length == 0.0


@pytest.mark.parametrize("start", [(45, 10), (10, 45), (40, 40), (30, 6), (0, 49)])
def test_descend_empty_map_length(empty_map, start):
    f = fmm.solve(empty_map, [(5, 5)])
    p = fmm.descend(f, empty_map, cell_to_world(start, empty_map))
    straight = math.hypot(start[0] - 5, start[1] - 5)
    assert p.length == pytest.approx(straight, rel=0.03)
    assert p.points[-1] == cell_to_world((5, 5), empty_map)


def _check_path(path, g, field):
    pts = path.points
    seg = sum(math.dist(pts[k], pts[k + 1]) for k in range(len(pts) - 1))
    assert path.length == pytest.approx(seg)
    for k in range(len(pts) - 1):
        assert math.dist(pts[k], pts[k + 1]) <= math.sqrt(2) * g.resolution + 1e-9
    for p in pts:
        assert g.is_free(world_to_cell(p, g))
    vals = [field.interpolate(p) for p in pts]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("seed", range(6))
def test_descend_path_invariants(seed):
    g, src = random_map(seed + 20, fill=0.15)
    f = fmm.solve(g, [src])
    rng = np.random.default_rng(seed)
    reached = np.argwhere(np.isfinite(f.values))
    for y, x in reached[rng.choice(len(reached), 8, replace=False)]:
        start = cell_to_world((x, y), g)
        path = fmm.descend(f, g, start)
        _check_path(path, g, f)
        assert world_to_cell(path.points[-1], g) == src
        # the first-order field overestimates geodesics, so the path may be
        # shorter than the field value but never shorter than a straight line
        v = f.at((x, y))
        assert path.length >= math.dist(start, cell_to_world(src, g)) - 1e-9
        assert path.length <= 1.05 * v + g.resolution


def test_descend_unreached():
    occ = np.zeros((5, 7), dtype=bool)
    occ[:, 3] = True
    g = GridMap(occ, 1.0)
    f = fmm.solve(g, [(0, 0)])
    with pytest.raises(UnreachableError):
        fmm.descend(f, g, (5.5, 1.5))


def _clearance(path, obst):
    return min(obst.interpolate(p) for p in path.points[1:-1])


def test_voronoi_path_keeps_away_from_block():
    g = block_room()
    obst = fmm.obstacle_distance_field(g)
    start, goal = WorldPoint(3.25, 10.25), WorldPoint(17.75, 14.25)
    unit = fmm.descend(fmm.solve(g, [world_to_cell(start, g)]), g, goal)
    vp = fmm.voronoi_path(g, fmm.voronoi_field(g, start), goal)
    # the unit-speed path wraps the block's corner; the VP does not
    assert _clearance(unit, obst) < 2 * g.resolution
    assert _clearance(vp, obst) >= 2 * _clearance(unit, obst)
    assert vp.points[0] == start and vp.points[-1] == goal


def test_voronoi_path_to_source():
    g = block_room()
    bs = WorldPoint(3.25, 10.25)
    vp = fmm.voronoi_path(g, fmm.voronoi_field(g, bs), bs)
    assert len(vp) == 1


def test_voronoi_path_corridor_centerline():
    # 3 m wide corridor, 20 m long
    g = corridor(40, width_cells=6, resolution=0.5)
    obst = fmm.obstacle_distance_field(g)
    bs = WorldPoint(1.25, 1.75)
    vp = fmm.voronoi_path(g, fmm.voronoi_field(g, bs), WorldPoint(19.75, 2.25))
    half = 1.5
    interior = [p for p in vp.points if 4.0 <= p.x <= 17.0]
    assert interior
    assert min(obst.interpolate(p) for p in interior) >= 0.8 * half


def test_voronoi_path_passes_doorways():
    g = two_rooms()
    bs = WorldPoint(3.25, 7.25)
    field = fmm.voronoi_field(g, bs)
    for target in (WorldPoint(16.25, 3.75), WorldPoint(16.75, 13.25)):
        cells = {world_to_cell(p, g) for p in fmm.voronoi_path(g, field, target).points}
        assert cells & {(15, y) for y in range(13, 17)}


def test_descent_deterministic():
    g = block_room()
    f = fmm.voronoi_field(g, WorldPoint(3.25, 10.25))
    a = fmm.voronoi_path(g, f, WorldPoint(17.75, 14.25))
    b = fmm.voronoi_path(g, f, WorldPoint(17.75, 14.25))
    assert a.points == b.points
