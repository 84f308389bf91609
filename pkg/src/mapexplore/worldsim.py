"""Ground-truth grid world, lidar raycasting and kinematic path following.

Coordinates: x grows with column index, y grows with row index, and the
world origin is the top-left corner of cell (row 0, col 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FREE = 0
OCCUPIED = 1

DEFAULT_RESOLUTION = 0.1
DEFAULT_SPEED = 0.45


class WorldFormatError(ValueError):
    """Malformed world file."""


class EmptyWorldError(ValueError):
    """World file without a single FREE cell."""


class InvalidPoseError(ValueError):
    """Pose outside the grid or inside an obstacle."""


class CollisionError(RuntimeError):
    def __init__(self, cell: tuple[int, int]):
        super().__init__(f"path collides with occupied cell (row={cell[0]}, col={cell[1]})")
        self.cell = cell


@dataclass(frozen=True)
class WorldMap:
    cells: np.ndarray  # (height, width) uint8, FREE / OCCUPIED
    resolution: float = DEFAULT_RESOLUTION
    origin: tuple[float, float] = (0.0, 0.0)
    start: tuple[float, float] | None = None

    def __post_init__(self):
        if self.cells.ndim != 2 or min(self.cells.shape) < 1:
            raise WorldFormatError("world grid must be a non-empty 2D array")
        if self.resolution <= 0:
            raise WorldFormatError("resolution must be positive")
        self.cells.setflags(write=False)

    @property
    def height_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def width_cells(self) -> int:
        return self.cells.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        """(width_m, height_m)."""
        return self.width_cells * self.resolution, self.height_cells * self.resolution

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
        return 0 <= row < self.height_cells and 0 <= col < self.width_cells

    def is_free(self, x: float, y: float) -> bool:
        row, col = self.cell_of(x, y)
        return self.in_bounds(row, col) and self.cells[row, col] == FREE


@dataclass(frozen=True)
class RobotPose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass(frozen=True)
class SensorModel:
    fov: float = math.pi
    max_range: float = 8.0
    beam_count: int = 361
    noise_sigma: float = 0.02

    def __post_init__(self):
        if not 0 < self.fov <= 2 * math.pi:
            raise ValueError("fov must lie in (0, 2*pi]")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")
        if self.beam_count < 2:
            raise ValueError("beam_count must be >= 2")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def beam_angles(self) -> np.ndarray:
        return np.linspace(-self.fov / 2, self.fov / 2, self.beam_count)


@dataclass(frozen=True)
class RangeScan:
    pose: RobotPose
    angles: np.ndarray
    ranges: np.ndarray
    hit_flags: np.ndarray
    max_range: float = field(default=8.0)
    noise_sigma: float = 0.0

    def world_angles(self) -> np.ndarray:
        return self.pose.heading + self.angles


def wrap_angle(a: float) -> float:
    """Wrap into [-pi, pi)."""
    return (a + math.pi) % (2 * math.pi) - math.pi


def load_world(text: str) -> WorldMap:
    resolution = DEFAULT_RESOLUTION
    origin = (0.0, 0.0)
    start = None
    lines = text.splitlines()
    first = 0
    if lines and lines[0].startswith("meta"):
        for token in lines[0].split()[1:]:
            key, _, value = token.partition("=")
            try:
                if key == "resolution":
                    resolution = float(value)
                elif key == "origin":
                    ox, oy = value.split(",")
                    origin = (float(ox), float(oy))
                elif key == "start":
                    sx, sy = value.split(",")
                    start = (float(sx), float(sy))
                else:
                    raise WorldFormatError(f"line 1: unknown meta key {key!r}")
            except ValueError as exc:
                if isinstance(exc, WorldFormatError):
                    raise
                raise WorldFormatError(f"line 1: bad meta value {token!r}") from exc
        first = 1
    rows = [ln.rstrip("\r") for ln in lines[first:]]
    while rows and not rows[-1]:
        rows.pop()
    if not rows:
        raise WorldFormatError("world has no grid rows")
    width = len(rows[0])
    grid = np.empty((len(rows), width), dtype=np.uint8)
    for i, row in enumerate(rows):
        lineno = i + first + 1
        if len(row) != width:
            raise WorldFormatError(f"line {lineno}: ragged row (length {len(row)}, expected {width})")
        for j, ch in enumerate(row):
            if ch == "#":
                grid[i, j] = OCCUPIED
            elif ch == ".":
                grid[i, j] = FREE
            else:
                raise WorldFormatError(f"line {lineno}, column {j + 1}: unexpected character {ch!r}")
    grid[0, :] = OCCUPIED
    grid[-1, :] = OCCUPIED
    grid[:, 0] = OCCUPIED
    grid[:, -1] = OCCUPIED
    if not (grid == FREE).any():
        raise EmptyWorldError("world has no FREE cell")
    return WorldMap(grid, resolution, origin, start)


def dump_world(world: WorldMap) -> str:
    header = f"meta resolution={world.resolution} origin={world.origin[0]},{world.origin[1]}"
    if world.start is not None:
        header += f" start={world.start[0]},{world.start[1]}"
    body = "\n".join("".join("#" if c else "." for c in row) for row in world.cells)
    return header + "\n" + body + "\n"


def _dda_setup(px, py, angles, origin, resolution):
    """Per-beam Amanatides-Woo state in cell units."""
    gx = (px - origin[0]) / resolution
    gy = (py - origin[1]) / resolution
    dx = np.cos(angles)
    dy = np.sin(angles)
    n = angles.shape[0]
    col = np.full(n, math.floor(gx), dtype=np.int64)
    row = np.full(n, math.floor(gy), dtype=np.int64)
    step_c = np.where(dx > 0, 1, -1)
    step_r = np.where(dy > 0, 1, -1)
    with np.errstate(divide="ignore"):
        inv_x = np.where(dx != 0, 1.0 / np.abs(dx), np.inf)
        inv_y = np.where(dy != 0, 1.0 / np.abs(dy), np.inf)
    fx = gx - math.floor(gx)
    fy = gy - math.floor(gy)
    # distance (in cells) to the first vertical / horizontal grid line
    t_x = np.where(dx > 0, (1.0 - fx) * inv_x, fx * inv_x)
    t_y = np.where(dy > 0, (1.0 - fy) * inv_y, fy * inv_y)
    t_x = np.where(dx == 0, np.inf, t_x)
    t_y = np.where(dy == 0, np.inf, t_y)
    return row, col, step_r, step_c, t_x, t_y, inv_x, inv_y


def cast_rays(grid: np.ndarray, blocked_value: int, px: float, py: float, angles: np.ndarray,
              max_range: float, origin=(0.0, 0.0), resolution=DEFAULT_RESOLUTION):
    """Distance (m) to the first cell equal to ``blocked_value`` along each ray.

    Rays that reach ``max_range`` first, or leave the grid, return ``inf``.
    """
    row, col, step_r, step_c, t_x, t_y, inv_x, inv_y = _dda_setup(px, py, angles, origin, resolution)
    limit = max_range / resolution
    h, w = grid.shape
    dist = np.full(angles.shape[0], np.inf)
    active = np.ones(angles.shape[0], dtype=bool)
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        go_x = t_x[idx] < t_y[idx]
        t_enter = np.where(go_x, t_x[idx], t_y[idx])
        col[idx] += np.where(go_x, step_c[idx], 0)
        row[idx] += np.where(go_x, 0, step_r[idx])
        t_x[idx] += np.where(go_x, inv_x[idx], 0.0)
        t_y[idx] += np.where(go_x, 0.0, inv_y[idx])
        r_i, c_i = row[idx], col[idx]
        beyond = t_enter > limit
        outside = (r_i < 0) | (r_i >= h) | (c_i < 0) | (c_i >= w)
        inside = ~(beyond | outside)
        hit = np.zeros(idx.size, dtype=bool)
        hit[inside] = grid[r_i[inside], c_i[inside]] == blocked_value
        dist[idx[hit]] = t_enter[hit] * resolution
        active[idx[beyond | outside | hit]] = False
    return dist


def raycast(world: WorldMap, pose: RobotPose, model: SensorModel, rng_seed: int = 0) -> RangeScan:
    if not world.is_free(pose.x, pose.y):
        raise InvalidPoseError(f"pose ({pose.x:.3f}, {pose.y:.3f}) is not inside a FREE cell")
    rel = model.beam_angles()
    dist = cast_rays(world.cells, OCCUPIED, pose.x, pose.y, pose.heading + rel,
                     model.max_range, world.origin, world.resolution)
    hit = np.isfinite(dist)
    ranges = np.where(hit, dist, model.max_range)
    if model.noise_sigma > 0:
        rng = np.random.default_rng(rng_seed)
        noise = rng.normal(0.0, model.noise_sigma, size=ranges.shape)
        ranges = np.where(hit, ranges + noise, ranges)
        # clamp into (0, max_range]
        ranges = np.clip(ranges, 1e-6, model.max_range)
    return RangeScan(pose, rel, ranges, hit, model.max_range, model.noise_sigma)


def path_length(points: Sequence[tuple[float, float]]) -> float:
    return float(sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(points, points[1:])))


def traverse(world: WorldMap, start: RobotPose, path: Sequence[tuple[float, float]],
             speed: float = DEFAULT_SPEED, jitter_sigma: float = 0.0, rng_seed: int = 0):
    """Move the robot kinematically along ``path``.

    Returns (final_pose, elapsed_s, distance_m).  The start pose is prepended,
    so a path whose first waypoint equals the start adds no distance.
    """
    if speed <= 0:
        raise ValueError("speed must be positive")
    if not path:
        return start, 0.0, 0.0
    for x, y in path:
        row, col = world.cell_of(x, y)
        if not world.in_bounds(row, col) or world.cells[row, col] != FREE:
            raise CollisionError((row, col))
    pts = [(start.x, start.y), *path]
    distance = path_length(pts)
    heading = start.heading
    for a, b in zip(pts, pts[1:]):
        if a != b:
            heading = math.atan2(b[1] - a[1], b[0] - a[0])
    x, y = path[-1]
    if jitter_sigma > 0:
        rng = np.random.default_rng(rng_seed)
        jx, jy = rng.normal(0.0, jitter_sigma, size=2)
        if world.is_free(x + jx, y + jy):
            x, y = x + jx, y + jy
    return RobotPose(x, y, heading), distance / speed, distance
