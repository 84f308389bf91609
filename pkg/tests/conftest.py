from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from mapexplore.belief import UNKNOWN, OccupancyBelief
from mapexplore.worldsim import FREE, OCCUPIED, WorldMap

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def report_criterion():
    """Record one acceptance line; all lines are printed in the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])


def random_world(rng: np.random.Generator, h: int = 20, w: int = 20, density: float = 0.15,
                 resolution: float = 0.1) -> WorldMap:
    cells = (rng.random((h, w)) < density).astype(np.uint8)
    cells[0, :] = cells[-1, :] = OCCUPIED
    cells[:, 0] = cells[:, -1] = OCCUPIED
    if not (cells == FREE).any():
        cells[h // 2, w // 2] = FREE
    return WorldMap(cells, resolution)


def random_belief(rng: np.random.Generator, h: int, w: int, p_unknown: float = 0.3,
                  p_occ: float = 0.15) -> OccupancyBelief:
    u = rng.random((h, w))
    cells = np.where(u < p_unknown, UNKNOWN, np.where(u < p_unknown + p_occ, OCCUPIED, FREE)).astype(np.int8)
    return OccupancyBelief(h, w, 0.1, (0.0, 0.0), cells)


def belief_from_rows(rows: list[str], resolution: float = 0.1) -> OccupancyBelief:
    lut = {"?": UNKNOWN, ".": FREE, "#": OCCUPIED}
    cells = np.array([[lut[c] for c in r] for r in rows], dtype=np.int8)
    return OccupancyBelief(cells.shape[0], cells.shape[1], resolution, (0.0, 0.0), cells)


def world_from_rows(rows: list[str], resolution: float = 0.1, start=None) -> WorldMap:
    cells = np.array([[1 if c == "#" else 0 for c in r] for r in rows], dtype=np.uint8)
    return WorldMap(cells, resolution, (0.0, 0.0), start)


def free_cells(world: WorldMap) -> np.ndarray:
    return np.argwhere(world.cells == FREE)
