"""Occupancy grid world model, coordinate conversions and scenario I/O.

Cells are addressed as ``(ix, iy)`` with ``ix`` the column and ``iy`` the
row; row 0 is the top line of an ASCII map file.  World coordinates are in
meters with ``x = ix * resolution`` and ``y = iy * resolution`` at the cell
corner, so a cell center sits at ``((ix + 0.5) * res, (iy + 0.5) * res)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CapacityError, MapParseError, OutOfBoundsError, ScenarioError

MAPS_DIR = Path(__file__).parent / "maps"


class WorldPoint(NamedTuple):
    x: float
    y: float


Cell = tuple  # (ix, iy)


@dataclass(frozen=True, eq=False)
class GridMap:
    """Binary occupancy grid; ``occupancy[iy, ix]`` is True for obstacles."""

    occupancy: np.ndarray
    resolution: float

    def __post_init__(self):
        occ = np.array(self.occupancy, dtype=bool, copy=True)
        if occ.ndim != 2 or occ.shape[0] < 1 or occ.shape[1] < 1:
            raise ValueError("occupancy must be a non-empty 2-D array")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    @property
    def extent(self) -> tuple[float, float]:
        return self.width * self.resolution, self.height * self.resolution

    @property
    def free(self) -> np.ndarray:
        return ~self.occupancy

    def in_bounds(self, cell) -> bool:
        ix, iy = cell
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and not self.occupancy[cell[1], cell[0]]

    def flat_index(self, cell) -> int:
        return int(cell[1]) * self.width + int(cell[0])

    def cell_of_flat(self, index: int) -> tuple[int, int]:
        return int(index % self.width), int(index // self.width)

    def to_text(self) -> str:
        rows = ["".join("#" if v else "." for v in row) for row in self.occupancy]
        return f"resolution_m {self.resolution:g}\n" + "\n".join(rows) + "\n"


def load_map(text: str) -> GridMap:
    """Parse the ASCII map format (header line then ``#``/``.`` rows)."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MapParseError("empty map file", line=1)
    header = lines[0].split()
    if len(header) != 2 or header[0] != "resolution_m":
        raise MapParseError("expected header 'resolution_m <decimal>'", line=1)
    try:
        resolution = float(header[1])
    except ValueError:
        raise MapParseError(f"bad resolution {header[1]!r}", line=1) from None
    if not (resolution > 0 and math.isfinite(resolution)):
        raise MapParseError("resolution must be a positive number", line=1)
    body = lines[1:]
    if not body:
        raise MapParseError("map has no rows", line=2)
    width = len(body[0])
    rows = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != width or width == 0:
            raise MapParseError(
                f"row has {len(row)} cells, expected {width}", line=lineno)
        bad = set(row) - {"#", "."}
        if bad:
            raise MapParseError(
                f"unexpected characters {''.join(sorted(bad))!r}", line=lineno)
        rows.append([c == "#" for c in row])
    return GridMap(np.array(rows, dtype=bool), resolution)


def read_map(path) -> GridMap:
    """Load a map from a file path or the name of a bundled map."""
    p = Path(path)
    if not p.exists():
        bundled = MAPS_DIR / f"{path}.map"
        if bundled.exists():
            p = bundled
    return load_map(p.read_text())


def world_to_cell(p, grid: GridMap) -> tuple[int, int]:
    x, y = float(p[0]), float(p[1])
    ix = math.floor(x / grid.resolution)
    iy = math.floor(y / grid.resolution)
    if not grid.in_bounds((ix, iy)) or x < 0 or y < 0:
        raise OutOfBoundsError(f"point ({x}, {y}) is outside the map")
    return ix, iy


def cell_to_world(c, grid: GridMap) -> WorldPoint:
    if not grid.in_bounds(c):
        raise OutOfBoundsError(f"cell {tuple(c)} is outside the map")
    r = grid.resolution
    # rounding strips float noise such as 24.200000000000003 from outputs
    return WorldPoint(round((c[0] + 0.5) * r, 9), round((c[1] + 0.5) * r, 9))


def snap(p, grid: GridMap) -> WorldPoint:
    """Move a point to the center of the cell containing it."""
    return cell_to_world(world_to_cell(p, grid), grid)


def reachable_mask(grid: GridMap, origin) -> np.ndarray:
    from .fmm import solve

    field = solve(grid, [world_to_cell(origin, grid)])
    return np.isfinite(field.values)


def generate_goals(grid: GridMap, count: int, x_bs, seed: int) -> list[WorldPoint]:
    """Sample ``count`` distinct free cell centers reachable from ``x_bs``."""
    if count < 0:
        raise ValueError("count must be non-negative")
    if count == 0:
        return []
    mask = reachable_mask(grid, x_bs)
    candidates = np.flatnonzero(mask.ravel())
    if candidates.size < count:
        raise CapacityError(
            f"only {candidates.size} reachable free cells for {count} goals")
    rng = np.random.default_rng(seed)
    picks = rng.choice(candidates, size=count, replace=False)
    return [cell_to_world(grid.cell_of_flat(i), grid) for i in picks]


def cells_near(grid: GridMap, origin, count: int) -> list[WorldPoint]:
    """The ``count`` free cells closest to ``origin`` in breadth-first order."""
    from collections import deque

    start = world_to_cell(origin, grid)
    seen = {start}
    queue = deque([start])
    out = []
    while queue and len(out) < count:
        c = queue.popleft()
        out.append(cell_to_world(c, grid))
        for dx, dy in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            n = (c[0] + dx, c[1] + dy)
            if n not in seen and grid.is_free(n):
                seen.add(n)
                queue.append(n)
    if len(out) < count:
        raise CapacityError(f"only {len(out)} free cells connected to the start")
    return out


@dataclass(eq=False)
class Scenario:
    grid: GridMap
    x_bs: WorldPoint
    robot_starts: list
    goals: list
    d_gamma: float = 10.0
    velocity: float = 0.2
    seed: int = 0
    map_path: str | None = field(default=None, repr=False)

    def __post_init__(self):
        self.x_bs = self._checked(self.x_bs, "base station")
        self.robot_starts = [self._checked(p, "robot start") for p in self.robot_starts]
        self.goals = [self._checked(p, "goal") for p in self.goals]
        if not self.robot_starts:
            raise ScenarioError("team size must be at least 1")
        if not self.goals:
            raise ScenarioError("goal count must be at least 1")
        if len(self.robot_starts) > len(self.goals):
            raise ScenarioError(
                f"team size {len(self.robot_starts)} exceeds goal count {len(self.goals)}")
        if not self.d_gamma > 0:
            raise ScenarioError("d_gamma must be positive")
        if not self.velocity > 0:
            raise ScenarioError("velocity must be positive")

    def _checked(self, p, what):
        try:
            c = world_to_cell(p, self.grid)
        except OutOfBoundsError as exc:
            raise ScenarioError(f"{what} {tuple(p)}: {exc}") from None
        if not self.grid.is_free(c):
            raise ScenarioError(f"{what} {tuple(p)} lies in an obstacle cell")
        return cell_to_world(c, self.grid)

    @property
    def team_size(self) -> int:
        return len(self.robot_starts)

    def to_dict(self) -> dict:
        return {
            "map_path": self.map_path,
            "bs": list(self.x_bs),
            "robots": [list(p) for p in self.robot_starts],
            "goals": [list(p) for p in self.goals],
            "d_gamma_m": self.d_gamma,
            "velocity_mps": self.velocity,
            "seed": self.seed,
        }


def scenario_from_dict(doc: dict, base_dir=None) -> Scenario:
    """Build a Scenario from its JSON document.

    ``robots`` may be a list of positions or an integer team size, in which
    case the robots start on the free cells nearest the base station.  When
    ``goals`` is absent, ``num_goals`` goals are drawn with ``seed``.
    """
    try:
        map_path = doc["map_path"]
        bs = WorldPoint(*map(float, doc["bs"]))
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"scenario is missing or has a bad field: {exc}") from None
    path = Path(map_path)
    if base_dir is not None and not path.is_absolute() and (Path(base_dir) / path).exists():
        path = Path(base_dir) / path
    grid = read_map(path)
    seed = int(doc.get("seed", 0))
    robots = doc.get("robots", 1)
    if isinstance(robots, int):
        robots = cells_near(grid, bs, robots)
    goals = doc.get("goals")
    if goals is None:
        n = int(doc.get("num_goals", len(robots)))
        goals = generate_goals(grid, n, bs, seed)
    return Scenario(
        grid=grid,
        x_bs=bs,
        robot_starts=[WorldPoint(*map(float, p)) for p in robots],
        goals=[WorldPoint(*map(float, p)) for p in goals],
        d_gamma=float(doc.get("d_gamma_m", 10.0)),
        velocity=float(doc.get("velocity_mps", 0.2)),
        seed=seed,
        map_path=str(map_path),
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    return scenario_from_dict(doc, base_dir=path.parent)


def points(seq: Sequence) -> list[WorldPoint]:
    return [WorldPoint(float(p[0]), float(p[1])) for p in seq]
