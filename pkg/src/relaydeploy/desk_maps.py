"""Procedural office-style test maps.

The layout is defined in meters (corridors, rooms, doors and desks) and
rasterised at any resolution, so the same floor plan can be produced at
the bundled benchmark size or at finer grids for scaling tests.
"""

from __future__ import annotations

import numpy as np

from .grid_world import GridMap, WorldPoint, cell_to_world, world_to_cell

BUNDLED = {
    # name: (width cells, height cells, resolution m, base-station placement)
    "centered-BS": (120, 160, 0.4, "center"),
    "extreme-BS": (120, 160, 0.4, "extreme"),
}


def _layout(W, H):
    """Wall and door rectangles ``(x0, y0, x1, y1)`` in meters."""
    t = 0.4
    walls = [(0, 0, W, t), (0, H - t, W, H), (0, 0, t, H), (W - t, 0, W, H)]
    doors = []
    cx0, cx1 = 0.45 * W, 0.55 * W
    bands = [(0.0, 0.30 * H), (0.37 * H, 0.63 * H), (0.70 * H, H)]
    door = 1.6
    for y0, y1 in bands:
        # corridor-facing walls of the left and right blocks
        walls.append((cx0 - t, y0, cx0, y1))
        walls.append((cx1, y0, cx1 + t, y1))
        mid = 0.5 * (y0 + y1)
        for x in (0.5 * cx0, 0.5 * (cx1 + W)):
            # block split into two rooms by a horizontal wall
            xa, xb = (0, cx0) if x < cx0 else (cx1, W)
            walls.append((xa, mid - t / 2, xb, mid + t / 2))
        for ya, yb in ((y0, mid), (mid, y1)):
            dy = 0.5 * (ya + yb)
            doors.append((cx0 - 2 * t, dy - door / 2, cx0 + t, dy + door / 2))
            doors.append((cx1 - t, dy - door / 2, cx1 + 2 * t, dy + door / 2))
        # outer rooms also open onto the horizontal corridors
        for xa, xb in ((0, cx0), (cx1, W)):
            dx = 0.5 * (xa + xb)
            if y0 > 0:
                walls.append((xa, y0 - t, xb, y0))
                doors.append((dx - door / 2, y0 - 2 * t, dx + door / 2, y0 + t))
            if y1 < H:
                walls.append((xa, y1, xb, y1 + t))
                doors.append((dx - door / 2 + 0.25 * (xb - xa), y1 - t,
                              dx + door / 2 + 0.25 * (xb - xa), y1 + 2 * t))
    desks = []
    for y0, y1 in bands:
        mid = 0.5 * (y0 + y1)
        for xa, xb in ((0, cx0), (cx1, W)):
            for ya, yb in ((y0, mid), (mid, y1)):
                w, h = xb - xa, yb - ya
                for fx, fy in ((0.3, 0.35), (0.65, 0.65)):
                    x, y = xa + fx * w, ya + fy * h
                    desks.append((x - 0.8, y - 0.5, x + 0.8, y + 0.5))
    return walls, doors, desks


def desk_map(width: int, height: int, resolution: float, bs: str = "center"):
    """Rasterise the office floor plan; returns ``(GridMap, x_bs)``."""
    W, H = width * resolution, height * resolution
    xs = (np.arange(width) + 0.5) * resolution
    ys = (np.arange(height) + 0.5) * resolution
    X, Y = np.meshgrid(xs, ys)
    walls, doors, desks = _layout(W, H)

    def paint(rects):
        m = np.zeros((height, width), dtype=bool)
        for x0, y0, x1, y1 in rects:
            m |= (X >= x0) & (X < x1) & (Y >= y0) & (Y < y1)
        return m

    occ = paint(walls)
    occ &= ~paint(doors)
    occ |= paint(desks)
    # keep the outer boundary closed even where a door rectangle touches it
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    grid = GridMap(occ, resolution)
    if bs == "center":
        p = (0.5 * W, 0.5 * H)
    elif bs == "extreme":
        p = (0.5 * W, 0.04 * H)
    else:
        raise ValueError(f"unknown base-station placement {bs!r}")
    c = world_to_cell(p, grid)
    if not grid.is_free(c):
        raise ValueError("base-station cell is blocked")
    return grid, cell_to_world(c, grid)


def bundled(name: str):
    """Bundled desk map by name; returns ``(GridMap, x_bs)``."""
    w, h, res, bs = BUNDLED[name]
    return desk_map(w, h, res, bs)


def default_bs(name: str) -> WorldPoint | None:
    if name in BUNDLED:
        return bundled(name)[1]
    return None
