"""Boundary point pipeline: ROI index -> world point, density screening,
mean-shift compression, nearest-member proxy selection and the exclusion set."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .structmap import RoiGrid

DEFAULT_R = 1.0
DEFAULT_K = 3
BANDWIDTH_QUANTILE = 0.3
SHIFT_TOL = 1e-4
MAX_SHIFT_ITER = 300
SHIFT_CHUNK = 1 << 20  # distance-matrix entries per block
DEDUPE_MIN = 128  # below this the dedupe sort costs more than it saves
DENSE_LIMIT = 1024  # below this many points pairwise distances beat a k-d tree


def roi_to_world(index: tuple[int, int], origin: tuple[float, float], n: int, r: float) -> tuple[float, float]:
    """Top-left corner of ROI ``index`` = (i_width, j_height) in world metres."""
    i_width, j_height = index
    return origin[0] + n * i_width * r, origin[1] + n * j_height * r


def boundary_points(roi: RoiGrid, origin: tuple[float, float], r: float) -> np.ndarray:
    """World coordinates of every boundary-flagged ROI, row-major order."""
    rows, cols = np.nonzero(roi.boundary_flags)
    pts = np.empty((rows.size, 2))
    pts[:, 0] = origin[0] + roi.n * cols * r
    pts[:, 1] = origin[1] + roi.n * rows * r
    return pts


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, 2)


class ExclusionSet:
    """Points proven unreachable; membership is a tolerance ball."""

    def __init__(self, tolerance: float):
        self.tolerance = float(tolerance)
        self._points: list[tuple[float, float]] = []

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self):
        return iter(self._points)

    def add(self, point) -> bool:
        p = (float(point[0]), float(point[1]))
        if self.contains(p):
            return False
        self._points.append(p)
        return True

    def contains(self, point) -> bool:
        if not self._points:
            return False
        q = np.asarray(self._points)
        return bool((np.hypot(q[:, 0] - point[0], q[:, 1] - point[1]) <= self.tolerance).any())

    def mask(self, points: np.ndarray) -> np.ndarray:
        """True where a point lies inside some exclusion ball."""
        if not self._points or len(points) == 0:
            return np.zeros(len(points), dtype=bool)
        tree = cKDTree(np.asarray(self._points))
        d, _ = tree.query(points, k=1)
        return d <= self.tolerance


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a[:, None, 0] - b[None, :, 0]) ** 2 + (a[:, None, 1] - b[None, :, 1]) ** 2


def neighbor_counts(points: np.ndarray, radius: float) -> np.ndarray:
    """|N(l, R)| for every point, the point itself included."""
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    if len(points) <= DENSE_LIMIT:
        return (_sq_dists(points, points) <= radius * radius).sum(axis=1)
    tree = cKDTree(points)
    return np.asarray(tree.query_ball_point(points, radius, return_length=True), dtype=int)


def feasible_boundaries(raw, R: float = DEFAULT_R, k: int = DEFAULT_K,
                        Q: ExclusionSet | None = None) -> np.ndarray:
    if R <= 0 or k < 1:
        raise ValueError("feasibility needs R > 0 and k >= 1")
    pts = _as_points(raw)
    if len(pts) == 0:
        return pts
    keep = neighbor_counts(pts, R) >= k
    if Q is not None:
        keep &= ~Q.mask(pts)
    return pts[keep]


def estimate_bandwidth(points: np.ndarray, floor: float, quantile: float = BANDWIDTH_QUANTILE) -> float:
    """Median distance to the ceil(quantile*N)-th nearest neighbour, floored."""
    m = len(points)
    if m < 2:
        return floor
    kth = min(m - 1, max(1, math.ceil(quantile * m)))
    if m <= DENSE_LIMIT:
        d2 = np.partition(_sq_dists(points, points), kth, axis=1)[:, kth]
        return max(float(np.median(np.sqrt(d2))), floor)
    tree = cKDTree(points)
    d, _ = tree.query(points, k=kth + 1)
    return max(float(np.median(d[:, kth])), floor)


def _shift_xy(sx: np.ndarray, sy: np.ndarray, pts1: np.ndarray, bw2: float,
              chunk: int = SHIFT_CHUNK) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One flat-kernel step for seeds (sx, sy) over ``pts1`` = columns (x, y, 1).

    Returns (new_x, new_y, support); seeds with no support stay put."""
    m = len(pts1)
    rows = max(1, chunk // max(1, m))
    if len(sx) > rows:
        parts = [_shift_xy(sx[a:a + rows], sy[a:a + rows], pts1, bw2, chunk) for a in range(0, len(sx), rows)]
        return tuple(np.concatenate(p) for p in zip(*parts))
    dx = sx[:, None] - pts1[:, 0]
    dy = sy[:, None] - pts1[:, 1]
    w = (dx * dx + dy * dy <= bw2).astype(np.float64)
    sums = w @ pts1  # (sum x, sum y, count) per seed in one product
    cnt = sums[:, 2]
    if cnt.all():
        return sums[:, 0] / cnt, sums[:, 1] / cnt, cnt.astype(np.int64)
    safe = np.where(cnt > 0, cnt, 1.0)
    nx = np.where(cnt > 0, sums[:, 0] / safe, sx)
    ny = np.where(cnt > 0, sums[:, 1] / safe, sy)
    return nx, ny, cnt.astype(np.int64)


def meanshift(points, bandwidth: float | None = None, bandwidth_floor: float = 0.4,
              tol: float = SHIFT_TOL, max_iter: int = MAX_SHIFT_ITER) -> np.ndarray:
    """Flat-kernel mean shift seeded at every input point.

    Converged modes closer than bandwidth/2 are merged, keeping the mode with
    the larger support (ties: lexicographically smaller).  Returned centres
    are in lexicographic (x, y) order.
    """
    pts = _as_points(points)
    if len(pts) == 0:
        raise ValueError("meanshift needs at least one point")
    if bandwidth is None:
        bandwidth = estimate_bandwidth(pts, bandwidth_floor)
    pts1 = np.column_stack([pts, np.ones(len(pts))])
    bw2 = bandwidth * bandwidth
    sx, sy = pts[:, 0].copy(), pts[:, 1].copy()
    support = np.ones(len(pts), dtype=np.int64)
    active = np.arange(len(pts))
    for _ in range(max_iter):
        if active.size == 0:
            break
        ax, ay = sx[active], sy[active]
        if active.size > DEDUPE_MIN:
            # coincident seeds follow identical trajectories: shift each
            # distinct position once (complex value = exact (x, y) key)
            _, first, inverse = np.unique(ax + 1j * ay, return_index=True, return_inverse=True)
            inverse = inverse.ravel()
            nx, ny, sup = _shift_xy(ax[first], ay[first], pts1, bw2)
            nx, ny, sup = nx[inverse], ny[inverse], sup[inverse]
        else:
            nx, ny, sup = _shift_xy(ax, ay, pts1, bw2)
        moved = np.hypot(nx - ax, ny - ay)
        sx[active] = nx
        sy[active] = ny
        support[active] = sup
        active = active[moved >= tol]
    seeds = np.stack([sx, sy], axis=1)
    order = np.lexsort((seeds[:, 1], seeds[:, 0], -support))
    half = bandwidth / 2
    centers: list[tuple[float, float]] = []
    for x, y in seeds[order].tolist():
        if all(math.hypot(x - kx, y - ky) >= half for kx, ky in centers):
            centers.append((x, y))
    out = np.array(centers)
    return out[np.lexsort((out[:, 1], out[:, 0]))]


def proxy_map(centroids, feasible) -> np.ndarray:
    """Nearest member of ``feasible`` for each centroid, deduplicated in centroid order."""
    c = _as_points(centroids)
    b = _as_points(feasible)
    if len(b) == 0:
        raise ValueError("proxy_map needs a non-empty feasible set")
    # lexicographic order so argmin ties resolve to the smallest (x, y)
    lex = np.lexsort((b[:, 1], b[:, 0]))
    b_sorted = b[lex]
    chosen: list[int] = []
    for u in c:
        d = np.hypot(b_sorted[:, 0] - u[0], b_sorted[:, 1] - u[1])
        j = int(np.argmin(d))
        if j not in chosen:
            chosen.append(j)
    return b_sorted[chosen]


@dataclass
class BoundarySet:
    """Episode-local pipeline state: L', L_b, L_c, L and the exclusion set Q."""

    n: int = 4
    r: float = 0.1
    R: float = DEFAULT_R
    k: int = DEFAULT_K
    bandwidth: float | None = None
    raw: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    feasible: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    centroids: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    representatives: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    excluded: ExclusionSet | None = None

    def __post_init__(self):
        if self.excluded is None:
            self.excluded = ExclusionSet(self.n * self.r / 2)

    def update(self, raw, k: int | None = None) -> np.ndarray:
        """Run the pipeline on fresh raw boundary points; returns L.

        ``k`` overrides the density threshold for this call only."""
        self.raw = _as_points(raw)
        self.feasible = feasible_boundaries(self.raw, self.R, self.k if k is None else k, self.excluded)
        if len(self.feasible) == 0:
            self.centroids = np.zeros((0, 2))
            self.representatives = np.zeros((0, 2))
        else:
            self.centroids = meanshift(self.feasible, self.bandwidth, bandwidth_floor=self.n * self.r)
            self.representatives = proxy_map(self.centroids, self.feasible)
        return self.representatives

    def mark_unreachable(self, point) -> "BoundarySet":
        self.excluded.add(point)
        if len(self.representatives):
            self.representatives = self.representatives[~self.excluded.mask(self.representatives)]
        return self


def mark_unreachable(bset: BoundarySet, point) -> BoundarySet:
    return bset.mark_unreachable(point)
