from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from relaydeploy.grid_world import GridMap, WorldPoint, load_map  # noqa: E402


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def ascii_map(rows, resolution=1.0) -> GridMap:
    return load_map(f"resolution_m {resolution}\n" + "\n".join(rows))


def walled(height, width) -> np.ndarray:
    occ = np.zeros((height, width), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    return occ


def two_rooms() -> GridMap:
    """BS room on the left, a short corridor, and two rooms on the right.

    Three goals sit in the upper room and two in the lower one, so two
    relay chains are needed, each through the left doorway.
    """
    occ = walled(30, 60)
    occ[:, 15] = True
    occ[13:17, 15] = False
    occ[:, 20] = True
    occ[5:8, 20] = False
    occ[22:25, 20] = False
    occ[15, 20:] = True
    return GridMap(occ, 0.5)


TWO_ROOMS_BS = WorldPoint(3.25, 7.25)
TWO_ROOMS_GOALS = [WorldPoint(25.25, 2.25), WorldPoint(26.25, 3.75), WorldPoint(24.75, 5.25),
                   WorldPoint(25.25, 11.75), WorldPoint(26.75, 13.25)]


def corridor(length_cells, width_cells=6, resolution=0.5) -> GridMap:
    """Straight horizontal corridor with walls on every side."""
    return GridMap(walled(width_cells + 2, length_cells + 2), resolution)


def block_room() -> GridMap:
    """Open 40x40 room with a square block between left and right halves."""
    occ = walled(42, 42)
    occ[12:26, 16:26] = True
    return GridMap(occ, 0.5)


@pytest.fixture
def rooms():
    return two_rooms()


@pytest.fixture
def empty_map():
    return GridMap(np.zeros((50, 50), dtype=bool), 1.0)
