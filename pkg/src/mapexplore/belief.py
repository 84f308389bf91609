"""Tri-state occupancy belief built from range scans at known poses."""
from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .worldsim import FREE, OCCUPIED, RangeScan, WorldMap, _dda_setup

UNKNOWN = -1


class BeliefBoundsError(ValueError):
    pass


class GeometryMismatchError(ValueError):
    pass


class OccupancyBelief:
    """Robot map with cells in {UNKNOWN, FREE, OCCUPIED}.

    OCCUPIED is sticky and nothing ever reverts to UNKNOWN.
    """

    def __init__(self, height: int, width: int, resolution: float = 0.1,
                 origin: tuple[float, float] = (0.0, 0.0), cells: np.ndarray | None = None):
        if cells is None:
            cells = np.full((height, width), UNKNOWN, dtype=np.int8)
        elif cells.shape != (height, width):
            raise GeometryMismatchError("cells shape does not match declared geometry")
        self.cells = cells.astype(np.int8, copy=True)
        self.resolution = float(resolution)
        self.origin = (float(origin[0]), float(origin[1]))
        self._recount()

    @classmethod
    def for_world(cls, world: WorldMap) -> "OccupancyBelief":
        return cls(world.height_cells, world.width_cells, world.resolution, world.origin)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        return self.width * self.resolution, self.height * self.resolution

    def _recount(self):
        self.free_count = int(np.count_nonzero(self.cells == FREE))
        self.occupied_count = int(np.count_nonzero(self.cells == OCCUPIED))
        self.unknown_count = self.cells.size - self.free_count - self.occupied_count

    def copy(self) -> "OccupancyBelief":
        return OccupancyBelief(self.height, self.width, self.resolution, self.origin, self.cells)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (
            int(math.floor((y - self.origin[1]) / self.resolution)),
            int(math.floor((x - self.origin[0]) / self.resolution)),
        )

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        )

    def in_bounds(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def value_at(self, x: float, y: float) -> int:
        row, col = self.cell_of(x, y)
        if not self.in_bounds(row, col):
            return UNKNOWN
        return int(self.cells[row, col])

    def same_geometry(self, world: WorldMap) -> bool:
        return (self.cells.shape == world.cells.shape
                and math.isclose(self.resolution, world.resolution)
                and np.allclose(self.origin, world.origin))

    def to_text(self) -> str:
        lut = np.array(["?", ".", "#"])
        header = f"meta resolution={self.resolution} origin={self.origin[0]},{self.origin[1]}"
        return header + "\n" + "\n".join("".join(lut[row + 1]) for row in self.cells) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "OccupancyBelief":
        lines = text.splitlines()
        resolution, origin = 0.1, (0.0, 0.0)
        if lines and lines[0].startswith("meta"):
            for token in lines[0].split()[1:]:
                key, _, value = token.partition("=")
                if key == "resolution":
                    resolution = float(value)
                elif key == "origin":
                    ox, oy = value.split(",")
                    origin = (float(ox), float(oy))
            lines = lines[1:]
        lines = [ln for ln in lines if ln]
        lookup = {"?": UNKNOWN, ".": FREE, "#": OCCUPIED}
        try:
            cells = np.array([[lookup[c] for c in ln] for ln in lines], dtype=np.int8)
        except KeyError as exc:
            raise ValueError(f"unexpected belief character {exc.args[0]!r}") from None
        return cls(cells.shape[0], cells.shape[1], resolution, origin, cells)


def integrate_scan(belief: OccupancyBelief, scan: RangeScan, protected: np.ndarray | None = None) -> OccupancyBelief:
    """Carve free space along every beam and mark hit endpoints occupied.

    Uses the same grid traversal as the simulator, so at zero noise the
    endpoint cell is exactly the obstacle cell that stopped the beam.  With
    range noise, cells within a margin of 2.5 sigma (at most half a cell)
    around the measured endpoint are left untouched and the occupied mark
    goes to the cell holding range + margin.  A beam that grazes a corner
    can push that point past the obstacle into free space; such a mark is
    dropped when another beam of the same scan passed through the cell.
    ``protected`` cells (and the scan's own cell) are never marked
    occupied.  Updates ``belief`` in place and returns it.
    """
    pose = scan.pose
    r0, c0 = belief.cell_of(pose.x, pose.y)
    if not belief.in_bounds(r0, c0):
        raise BeliefBoundsError(f"scan pose ({pose.x:.3f}, {pose.y:.3f}) outside belief grid")
    res = belief.resolution
    margin = min(2.5 * scan.noise_sigma, res / 2)
    angles = scan.world_angles()
    row, col, step_r, step_c, t_x, t_y, inv_x, inv_y = _dda_setup(
        pose.x, pose.y, angles, belief.origin, res)
    ranges = np.asarray(scan.ranges, dtype=float)
    hits = np.asarray(scan.hit_flags, dtype=bool)
    free_until = np.where(hits, ranges - margin, ranges)
    end_at = np.where(hits, ranges + margin, ranges)
    cells = belief.cells
    h, w = cells.shape
    free_r, free_c, occ_r, occ_c = [], [], [], []
    active = np.ones(angles.shape[0], dtype=bool)
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        r_i, c_i = row[idx], col[idx]
        outside = (r_i < 0) | (r_i >= h) | (c_i < 0) | (c_i >= w)
        t_exit = np.minimum(t_x[idx], t_y[idx]) * res
        is_end = (t_exit > end_at[idx]) | outside
        body = ~is_end & (t_exit <= free_until[idx])
        free_r.append(r_i[body])
        free_c.append(c_i[body])
        end_hit = is_end & ~outside & hits[idx]
        occ_r.append(r_i[end_hit])
        occ_c.append(c_i[end_hit])
        active[idx[is_end]] = False
        live = idx[~is_end]
        go_x = t_x[live] < t_y[live]
        col[live] += np.where(go_x, step_c[live], 0)
        row[live] += np.where(go_x, 0, step_r[live])
        t_x[live] += np.where(go_x, inv_x[live], 0.0)
        t_y[live] += np.where(go_x, 0.0, inv_y[live])
    fr, fc = np.concatenate(free_r), np.concatenate(free_c)
    orow, ocol = np.concatenate(occ_r), np.concatenate(occ_c)
    keep = ~((orow == r0) & (ocol == c0))
    if protected is not None:
        keep &= ~protected[orow, ocol]
    if fr.size:
        passed = np.zeros(cells.shape, dtype=bool)
        passed[fr, fc] = True
        keep &= ~passed[orow, ocol]
    cells[orow[keep], ocol[keep]] = OCCUPIED
    sel = cells[fr, fc] != OCCUPIED
    cells[fr[sel], fc[sel]] = FREE
    belief._recount()
    return belief


def explorable_mask(world: WorldMap, start: tuple[float, float]) -> np.ndarray:
    """FREE cells 4-connected to ``start`` plus their 4-adjacent OCCUPIED cells."""
    row, col = world.cell_of(*start)
    if not world.in_bounds(row, col) or world.cells[row, col] != FREE:
        raise ValueError("start must lie in a FREE world cell")
    labels, _ = ndimage.label(world.cells == FREE)
    reach = labels == labels[row, col]
    cross = ndimage.generate_binary_structure(2, 1)
    rim = ndimage.binary_dilation(reach, structure=cross) & (world.cells == OCCUPIED)
    return reach | rim


def completeness(belief: OccupancyBelief, world: WorldMap, start: tuple[float, float] | None = None,
                 mask: np.ndarray | None = None) -> float:
    """Fraction of reachable-explorable world cells that the belief has observed."""
    if not belief.same_geometry(world):
        raise GeometryMismatchError("belief and world geometry differ")
    if mask is None:
        if start is None:
            start = world.start
        if start is None:
            raise ValueError("completeness needs a start position or a precomputed mask")
        mask = explorable_mask(world, start)
    total = int(np.count_nonzero(mask))
    seen = int(np.count_nonzero(mask & (belief.cells != UNKNOWN)))
    return seen / total
