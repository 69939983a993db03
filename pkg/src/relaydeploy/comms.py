"""Line-of-sight disk communication model.

Two positions can talk when the straight segment between their cell centers
touches no obstacle cell and they are at most ``d_gamma`` meters apart.  The
segment test is a supercover traversal: a cell counts as touched even when
the segment only grazes one of its corners.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InvalidEndpointError
from .grid_world import GridMap, world_to_cell

RANGE_EPS = 1e-9


@dataclass(frozen=True)
class CommConfig:
    d_gamma: float = 10.0

    def __post_init__(self):
        if not self.d_gamma > 0:
            raise ValueError("d_gamma must be positive")


@njit(cache=True)
def _los_cells(occ, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    nx = abs(dx)
    ny = abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    x = ax
    y = ay
    if occ[y, x]:
        return False
    ix = 0
    iy = 0
    while ix < nx or iy < ny:
        lhs = (1 + 2 * ix) * ny
        rhs = (1 + 2 * iy) * nx
        if lhs == rhs:
            # segment passes exactly through a grid corner
            if occ[y, x + sx] or occ[y + sy, x]:
                return False
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif lhs < rhs:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        if occ[y, x]:
            return False
    return True


@njit(cache=True)
def _supercover(ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    nx = abs(dx)
    ny = abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    x = ax
    y = ay
    out = [(x, y)]
    ix = 0
    iy = 0
    while ix < nx or iy < ny:
        lhs = (1 + 2 * ix) * ny
        rhs = (1 + 2 * iy) * nx
        if lhs == rhs:
            out.append((x + sx, y))
            out.append((x, y + sy))
            x += sx
            y += sy
            ix += 1
            iy += 1
        elif lhs < rhs:
            x += sx
            ix += 1
        else:
            y += sy
            iy += 1
        out.append((x, y))
    return out


def supercover_cells(a_cell, b_cell) -> list[tuple[int, int]]:
    """Every cell touched by the segment joining two cell centers."""
    return [(int(x), int(y)) for x, y in _supercover(int(a_cell[0]), int(a_cell[1]),
                                                    int(b_cell[0]), int(b_cell[1]))]


@njit(cache=True)
def _area_flat(occ, h, px, py, cx, cy, d):
    H, W = occ.shape
    r = int(math.ceil(d / h)) + 1
    x0 = max(0, cx - r)
    x1 = min(W - 1, cx + r)
    y0 = max(0, cy - r)
    y1 = min(H - 1, cy + r)
    lim = d + 1e-9
    out = []
    for y in range(y0, y1 + 1):
        yy = (y + 0.5) * h - py
        for x in range(x0, x1 + 1):
            if occ[y, x]:
                continue
            xx = (x + 0.5) * h - px
            if math.sqrt(xx * xx + yy * yy) > lim:
                continue
            if _los_cells(occ, cx, cy, x, y):
                out.append(y * W + x)
    return np.array(out, dtype=np.int64)


def _free_cell(grid: GridMap, p):
    try:
        c = world_to_cell(p, grid)
    except Exception:
        raise InvalidEndpointError(f"endpoint {tuple(p)} is outside the map") from None
    if not grid.is_free(c):
        raise InvalidEndpointError(f"endpoint {tuple(p)} lies in an obstacle cell")
    return c


def line_of_sight(grid: GridMap, a, b) -> bool:
    ca = _free_cell(grid, a)
    cb = _free_cell(grid, b)
    return bool(_los_cells(grid.occupancy, ca[0], ca[1], cb[0], cb[1]))


def in_range(a, b, cfg: CommConfig) -> bool:
    return math.dist(a, b) <= cfg.d_gamma + RANGE_EPS


def comm_link(grid: GridMap, a, b, cfg: CommConfig) -> bool:
    ca = _free_cell(grid, a)
    cb = _free_cell(grid, b)
    if not in_range(a, b, cfg):
        return False
    return bool(_los_cells(grid.occupancy, ca[0], ca[1], cb[0], cb[1]))


def comm_area_flat(grid: GridMap, p, cfg: CommConfig) -> np.ndarray:
    """Sorted row-major indices of the cells linked to ``p``."""
    c = _free_cell(grid, p)
    return _area_flat(grid.occupancy, grid.resolution, float(p[0]), float(p[1]),
                      c[0], c[1], float(cfg.d_gamma))


def comm_area_mask(grid: GridMap, p, cfg: CommConfig) -> np.ndarray:
    mask = np.zeros(grid.occupancy.size, dtype=bool)
    mask[comm_area_flat(grid, p, cfg)] = True
    return mask.reshape(grid.occupancy.shape)


def comm_area(grid: GridMap, p, cfg: CommConfig) -> set[tuple[int, int]]:
    """Free cells whose centers share a communication link with ``p``."""
    return {grid.cell_of_flat(i) for i in comm_area_flat(grid, p, cfg)}


def connected_to_bs(grid: GridMap, x_bs, agents, cfg: CommConfig) -> list[bool]:
    """Which agents reach the base station over a multi-hop link graph."""
    nodes = [x_bs] + list(agents)
    n = len(nodes)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in range(1, n):
            if not seen[j] and comm_link(grid, nodes[i], nodes[j], cfg):
                seen[j] = True
                queue.append(j)
    return seen[1:]


class LinkChecker:
    """Memoised link queries for repeated audits over the same positions."""

    def __init__(self, grid: GridMap, cfg: CommConfig):
        self.grid = grid
        self.cfg = cfg
        self._links = {}
        self._backbones = {}

    def link(self, a, b) -> bool:
        key = (tuple(a), tuple(b)) if tuple(a) <= tuple(b) else (tuple(b), tuple(a))
        hit = self._links.get(key)
        if hit is None:
            hit = self._links[key] = comm_link(self.grid, a, b, self.cfg)
        return hit

    def backbone(self, x_bs, relays) -> list:
        """Base station plus every relay with a multi-hop path to it."""
        key = (tuple(x_bs), frozenset(tuple(r) for r in relays))
        hit = self._backbones.get(key)
        if hit is None:
            nodes = [tuple(x_bs)] + sorted(key[1])
            out = [nodes[0]]
            rest = nodes[1:]
            frontier = [nodes[0]]
            while frontier:
                a = frontier.pop()
                keep = []
                for r in rest:
                    if self.link(a, r):
                        out.append(r)
                        frontier.append(r)
                    else:
                        keep.append(r)
                rest = keep
            hit = self._backbones[key] = out
        return hit

    def connected(self, x_bs, relays, agent) -> bool:
        return any(self.link(agent, node) for node in self.backbone(x_bs, relays))
