"""Fast Marching distance fields, gradient-descent paths and Voronoi paths.

The solver is the classic first-order upwind scheme on the 4-neighbourhood
with a binary-heap narrow band.  Heap entries are ``(value, flat_index)`` so
ties resolve in row-major order and repeated solves are bit-identical.
"""

from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .comms import _los_cells
from .errors import DescentStallError, InvalidSourceError, UnreachableError
from .grid_world import GridMap, WorldPoint, cell_to_world, world_to_cell

SPEED_FLOOR = 1e-3
# cells around a source initialised with exact straight-line distances; this
# removes most of the first-order scheme's point-source error
EXACT_INIT_RADIUS = 8.0

_FAR, _TRIAL, _DONE = 0, 1, 2


@njit(cache=True)
def _exact_disc(speed, h, sources, radius):
    """Straight-line arrival times near each source, where they are exact.

    A cell within ``radius`` cells of a source whose supercover segment to
    the source crosses only cells of the source's speed gets distance/speed.
    Only meaningful when the speed is uniform over the reachable region.
    """
    H, W = speed.shape
    D0 = np.full(H * W, np.inf)
    r = int(radius)
    for s in sources:
        sy = s // W
        sx = s - sy * W
        f0 = speed[sy, sx]
        other = speed != f0
        for y in range(max(0, sy - r), min(H, sy + r + 1)):
            for x in range(max(0, sx - r), min(W, sx + r + 1)):
                d = math.hypot(x - sx, y - sy)
                if d > radius:
                    continue
                v = d * h / f0
                j = y * W + x
                if v < D0[j] and _los_cells(other, sx, sy, x, y):
                    D0[j] = v
    return D0


@njit(cache=True)
def _march(speed, h, sources, D0):
    H, W = speed.shape
    n = H * W
    F = speed.ravel()
    D = np.full(n, np.inf)
    state = np.zeros(n, np.uint8)
    heap = [(0.0, np.int64(0))]
    heapq.heappop(heap)
    for s in sources:
        D[s] = 0.0
        state[s] = 1
        heapq.heappush(heap, (0.0, np.int64(s)))
    for j in range(n):
        if D0[j] < D[j]:
            D[j] = D0[j]
            state[j] = 1
            heapq.heappush(heap, (D[j], np.int64(j)))
    while len(heap) > 0:
        val, idx = heapq.heappop(heap)
        if state[idx] == 2 or val > D[idx]:
            continue
        state[idx] = 2
        iy = idx // W
        ix = idx - iy * W
        for k in range(4):
            if k == 0:
                nx, ny = ix - 1, iy
            elif k == 1:
                nx, ny = ix + 1, iy
            elif k == 2:
                nx, ny = ix, iy - 1
            else:
                nx, ny = ix, iy + 1
            if nx < 0 or nx >= W or ny < 0 or ny >= H:
                continue
            j = ny * W + nx
            if state[j] == 2 or F[j] <= 0.0:
                continue
            # upwind neighbour minima along each axis, accepted cells only
            a = np.inf
            if nx > 0 and state[j - 1] == 2:
                a = D[j - 1]
            if nx < W - 1 and state[j + 1] == 2 and D[j + 1] < a:
                a = D[j + 1]
            b = np.inf
            if ny > 0 and state[j - W] == 2:
                b = D[j - W]
            if ny < H - 1 and state[j + W] == 2 and D[j + W] < b:
                b = D[j + W]
            if a > b:
                a, b = b, a
            t = h / F[j]
            if b == np.inf or b - a >= t:
                cand = a + t
            else:
                cand = 0.5 * (a + b + math.sqrt(2.0 * t * t - (b - a) * (b - a)))
            if cand < D[j]:
                D[j] = cand
                state[j] = 1
                heapq.heappush(heap, (cand, np.int64(j)))
    return D.reshape((H, W))


def unit_speed(grid: GridMap) -> np.ndarray:
    """Speed 1 on free cells and 0 on obstacles."""
    return np.where(grid.occupancy, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Arrival distances in meters; ``inf`` marks unreached cells."""

    values: np.ndarray
    sources: tuple
    resolution: float

    def __post_init__(self):
        self.values.setflags(write=False)

    def at(self, cell) -> float:
        return float(self.values[cell[1], cell[0]])

    def reached(self, cell) -> bool:
        return math.isfinite(self.values[cell[1], cell[0]])

    def interpolate(self, p) -> float:
        """Field value at a continuous point.

        Bilinear blend of the surrounding cell centers that are mutually
        visible from the point's own cell; unreached cells are skipped and
        the weights renormalised.
        """
        return _interp(self.values, self.resolution, p[0], p[1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self.values:
            buf.write(",".join("inf" if not math.isfinite(v) else repr(float(v)) for v in row))
            buf.write("\n")
        return buf.getvalue()


def solve(grid: GridMap, sources, speed: np.ndarray | None = None) -> DistanceField:
    """Distance field from a set of source cells under ``speed``."""
    if speed is None:
        speed = unit_speed(grid)
    speed = np.asarray(speed, dtype=float)
    if speed.shape != grid.occupancy.shape:
        raise ValueError(f"speed shape {speed.shape} does not match map {grid.occupancy.shape}")
    cells = [tuple(int(v) for v in c) for c in sources]
    if not cells:
        raise InvalidSourceError("at least one source cell is required")
    flat = []
    for c in cells:
        if not grid.is_free(c):
            raise InvalidSourceError(f"source {c} is outside the map or in an obstacle")
        if speed[c[1], c[0]] <= 0:
            raise InvalidSourceError(f"source {c} has zero speed")
        flat.append(grid.flat_index(c))
    src = np.array(flat, dtype=np.int64)
    values = _march(speed, grid.resolution, src, _initial(speed, grid.resolution, src))
    return DistanceField(values, tuple(cells), grid.resolution)


def _initial(speed, h, src):
    live = speed[speed > 0]
    if live.size and np.all(live == live[0]):
        return _exact_disc(speed, h, src, EXACT_INIT_RADIUS)
    return np.full(speed.size, np.inf)


def obstacle_distance_field(grid: GridMap) -> DistanceField:
    """Distance from every cell to the nearest obstacle or map boundary."""
    padded = np.ones((grid.height + 2, grid.width + 2), dtype=bool)
    padded[1:-1, 1:-1] = grid.occupancy
    src = np.flatnonzero(padded.ravel())
    speed = np.ones(padded.shape)
    src = src.astype(np.int64)
    values = _march(speed, grid.resolution, src, _initial(speed, grid.resolution, src))
    values = np.ascontiguousarray(values[1:-1, 1:-1])
    ys, xs = np.nonzero(grid.occupancy)
    return DistanceField(values, tuple(zip(xs.tolist(), ys.tolist())), grid.resolution)


def voronoi_speed(grid: GridMap, obstacle_field: DistanceField | None = None) -> np.ndarray:
    """Clearance-proportional speed, normalised to (0, 1] on free cells."""
    if obstacle_field is None:
        obstacle_field = obstacle_distance_field(grid)
    d = obstacle_field.values
    free = ~grid.occupancy
    top = d[free].max() if free.any() else 0.0
    F = np.zeros(d.shape)
    if top > 0:
        F[free] = np.maximum(d[free] / top, SPEED_FLOOR)
    return F


@dataclass
class Path:
    points: list = field(default_factory=list)

    @property
    def length(self) -> float:
        pts = self.points
        return float(sum(math.dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1)))

    def reversed(self) -> "Path":
        return Path(list(reversed(self.points)))

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------------------
# gradient descent

_NEIGH8 = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))


@njit(cache=True)
def _visible(values, cx, cy, nx, ny):
    H, W = values.shape
    if nx < 0 or ny < 0 or nx >= W or ny >= H:
        return False
    if not np.isfinite(values[ny, nx]):
        return False
    if nx != cx and ny != cy:
        # diagonal hop needs both orthogonal cells open
        return np.isfinite(values[cy, nx]) and np.isfinite(values[ny, cx])
    return True


@njit(cache=True)
def _interp(values, h, x, y):
    H, W = values.shape
    cx = int(math.floor(x / h))
    cy = int(math.floor(y / h))
    gx = x / h - 0.5
    gy = y / h - 0.5
    x0 = int(math.floor(gx))
    y0 = int(math.floor(gy))
    fx = gx - x0
    fy = gy - y0
    acc = 0.0
    wsum = 0.0
    for dy in range(2):
        for dx in range(2):
            nx = x0 + dx
            ny = y0 + dy
            w = (fx if dx == 1 else 1.0 - fx) * (fy if dy == 1 else 1.0 - fy)
            if w <= 0.0:
                continue
            if (nx == cx and ny == cy) or _visible(values, cx, cy, nx, ny):
                v = values[ny, nx] if (0 <= nx < W and 0 <= ny < H) else np.inf
                if np.isfinite(v):
                    acc += w * v
                    wsum += w
    if wsum <= 0.0:
        if 0 <= cx < W and 0 <= cy < H:
            return values[cy, cx]
        return np.inf
    return acc / wsum


def _cell_descent(values, h, ix, iy):
    """Upwind descent direction at a cell center (unnormalised)."""
    H, W = values.shape
    d = values[iy, ix]
    out = [0.0, 0.0]
    for axis, (lo, hi) in enumerate((((ix - 1, iy), (ix + 1, iy)), ((ix, iy - 1), (ix, iy + 1)))):
        vl = values[lo[1], lo[0]] if 0 <= lo[0] < W and 0 <= lo[1] < H else math.inf
        vh = values[hi[1], hi[0]] if 0 <= hi[0] < W and 0 <= hi[1] < H else math.inf
        m = min(vl, vh)
        if m < d:
            slope = (d - m) / h
            if vl < vh:
                out[axis] = -slope
            elif vh < vl:
                out[axis] = slope
    return out


def _direction(values, h, p):
    gx = p[0] / h - 0.5
    gy = p[1] / h - 0.5
    x0, y0 = math.floor(gx), math.floor(gy)
    fx, fy = gx - x0, gy - y0
    H, W = values.shape
    vx = vy = wsum = 0.0
    for dy in (0, 1):
        for dx in (0, 1):
            nx, ny = x0 + dx, y0 + dy
            w = (fx if dx else 1 - fx) * (fy if dy else 1 - fy)
            if w <= 0 or not (0 <= nx < W and 0 <= ny < H) or not math.isfinite(values[ny, nx]):
                continue
            gxy = _cell_descent(values, h, nx, ny)
            vx += w * gxy[0]
            vy += w * gxy[1]
            wsum += w
    if wsum == 0:
        return 0.0, 0.0
    return vx / wsum, vy / wsum


def descend(field: DistanceField, grid: GridMap, start) -> Path:
    """Follow the field downhill from ``start`` to one of its sources.

    Steps of half a cell along the interpolated upwind gradient; when a step
    fails to lower the field value the walker hops to the lowest visible
    neighbouring cell center instead.  The returned points have strictly
    decreasing interpolated field values and end on a source cell center.
    """
    values = field.values
    h = field.resolution
    H, W = values.shape
    try:
        c0 = world_to_cell(start, grid)
    except Exception:
        raise UnreachableError(f"start {tuple(start)} is outside the map") from None
    if not field.reached(c0):
        raise UnreachableError(f"start {tuple(start)} is not reached by the field")
    source_mask = np.zeros(values.shape, dtype=bool)
    for sx, sy in field.sources:
        source_mask[sy, sx] = True

    p = WorldPoint(float(start[0]), float(start[1]))
    vp = field.interpolate(p)
    pts = [p]
    diag = math.sqrt(2.0) * h * (1 + 1e-9)
    step = 0.5 * h
    max_iter = 8 * W * H + 16
    for _ in range(max_iter):
        c = world_to_cell(p, grid)
        if source_mask[c[1], c[0]]:
            if vp > 0:
                pts.append(cell_to_world(c, grid))
            return Path(pts)
        # finish on a neighbouring source cell when it is a legal hop
        best = None
        for dx, dy in _NEIGH8:
            n = (c[0] + dx, c[1] + dy)
            if 0 <= n[0] < W and 0 <= n[1] < H and source_mask[n[1], n[0]] \
                    and _visible(values, c[0], c[1], n[0], n[1]):
                q = cell_to_world(n, grid)
                dq = math.dist(p, q)
                if dq <= diag and (best is None or dq < best[0]):
                    best = (dq, q)
        if best is not None:
            pts.append(best[1])
            return Path(pts)

        q = None
        vx, vy = _direction(values, h, p)
        norm = math.hypot(vx, vy)
        if norm > 0:
            cand = WorldPoint(float(p[0] + step * vx / norm), float(p[1] + step * vy / norm))
            cx, cy = math.floor(cand[0] / h), math.floor(cand[1] / h)
            if (cand[0] >= 0 and cand[1] >= 0 and 0 <= cx < W and 0 <= cy < H
                    and ((cx, cy) == c or _visible(values, c[0], c[1], cx, cy))):
                vc = field.interpolate(cand)
                if vc < vp:
                    q, vq = cand, vc
        if q is None:
            choice = None
            own = values[c[1], c[0]]
            if own < vp:
                choice = (own, grid.flat_index(c), c)
            for dx, dy in _NEIGH8:
                n = (c[0] + dx, c[1] + dy)
                # hops stay within one cell diagonal of the current point
                if (_visible(values, c[0], c[1], n[0], n[1])
                        and math.dist(p, cell_to_world(n, grid)) <= diag):
                    v = values[n[1], n[0]]
                    key = (v, grid.flat_index(n), n)
                    if v < vp and (choice is None or key[:2] < choice[:2]):
                        choice = key
            if choice is None:
                raise DescentStallError(f"descent stalled at {tuple(p)}")
            q = cell_to_world(choice[2], grid)
            vq = field.interpolate(q)
            if not vq < vp:
                raise DescentStallError(f"descent stalled at {tuple(p)}")
        pts.append(q)
        p, vp = q, vq
    raise DescentStallError("descent exceeded its iteration budget")


def voronoi_field(grid: GridMap, x_bs) -> DistanceField:
    """Field from the base station under the clearance speed."""
    return solve(grid, [world_to_cell(x_bs, grid)], voronoi_speed(grid))


def voronoi_path(grid: GridMap, bs_field_v: DistanceField, target) -> Path:
    """Clearance-maximising path, ordered from the base station to ``target``."""
    return descend(bs_field_v, grid, target).reversed()
