"""Global A* planning over the belief grid."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .belief import OccupancyBelief
from .worldsim import FREE, OCCUPIED, path_length

DEFAULT_INFLATION = 2
SQRT2 = math.sqrt(2.0)

# (drow, dcol, unit cost)
_MOVES = [(-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
          (-1, -1, SQRT2), (-1, 1, SQRT2), (1, -1, SQRT2), (1, 1, SQRT2)]


class InvalidStartError(ValueError):
    pass


@dataclass(frozen=True)
class PlannedPath:
    waypoints: list[tuple[float, float]]
    length: float
    expanded_nodes: int
    cells: list[tuple[int, int]]


def _disk(radius: int) -> np.ndarray:
    yy, xx = np.mgrid[-radius:radius + 1, -radius:radius + 1]
    return (yy * yy + xx * xx) <= radius * radius


def inflated_obstacles(belief: OccupancyBelief, inflation: int = DEFAULT_INFLATION) -> np.ndarray:
    occ = belief.cells == OCCUPIED
    if inflation <= 0:
        return occ
    return ndimage.binary_dilation(occ, structure=_disk(inflation))


def traversable(belief: OccupancyBelief, inflation: int = DEFAULT_INFLATION,
                start_cell: tuple[int, int] | None = None) -> np.ndarray:
    """FREE and clear of inflated obstacles.

    The FREE cells within the inflation radius of ``start_cell`` are always
    released: the robot is physically there, and noise specks near a wall
    can otherwise leave it on an island of one cell.
    """
    free = belief.cells == FREE
    infl = inflated_obstacles(belief, inflation)
    ok = free & ~infl
    if start_cell is not None and free[start_cell] and inflation > 0:
        r, c = start_cell
        r0, c0 = max(0, r - inflation), max(0, c - inflation)
        win = free[r0:r + inflation + 1, c0:c + inflation + 1]
        ok[r0:r + inflation + 1, c0:c + inflation + 1] |= win
    return ok


def _check_start(belief: OccupancyBelief, start) -> tuple[int, int]:
    cell = belief.cell_of(*start)
    if not belief.in_bounds(*cell) or belief.cells[cell] != FREE:
        raise InvalidStartError(f"start {tuple(start)} is not in a FREE belief cell")
    return cell


def relax_goal(ok: np.ndarray, belief: OccupancyBelief, goal, radius_m: float) -> tuple[int, int] | None:
    """Nearest traversable cell (by centre distance) within ``radius_m`` of ``goal``."""
    gr, gc = belief.cell_of(*goal)
    if belief.in_bounds(gr, gc) and ok[gr, gc]:
        return gr, gc
    res = belief.resolution
    span = int(math.ceil(radius_m / res)) + 1
    r0, r1 = max(0, gr - span), min(belief.height, gr + span + 1)
    c0, c1 = max(0, gc - span), min(belief.width, gc + span + 1)
    if r0 >= r1 or c0 >= c1:
        return None
    sub = ok[r0:r1, c0:c1]
    rr, cc = np.nonzero(sub)
    if rr.size == 0:
        return None
    rr, cc = rr + r0, cc + c0
    cx = belief.origin[0] + (cc + 0.5) * res
    cy = belief.origin[1] + (rr + 0.5) * res
    d = np.hypot(cx - goal[0], cy - goal[1])
    inside = d <= radius_m + 1e-12
    if not inside.any():
        return None
    d, rr, cc = d[inside], rr[inside], cc[inside]
    best = np.lexsort((cc, rr, d))[0]
    return int(rr[best]), int(cc[best])


def octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dr, dc) + (SQRT2 - 1.0) * min(dr, dc)


def astar_cells(ok: np.ndarray, start: tuple[int, int], goal: tuple[int, int]):
    """8-connected A* without corner cutting; returns (cells, expanded) or (None, expanded)."""
    h, w = ok.shape
    s = start[0] * w + start[1]
    g_idx = goal[0] * w + goal[1]
    gr, gc = goal
    g_cost = {s: 0.0}
    parent = {s: -1}
    h0 = octile(start, goal)
    heap = [(h0, h0, s)]
    closed = set()
    expanded = 0
    while heap:
        f, hh, u = heapq.heappop(heap)
        if u in closed:
            continue
        closed.add(u)
        expanded += 1
        if u == g_idx:
            cells = []
            while u != -1:
                cells.append(divmod(u, w))
                u = parent[u]
            return cells[::-1], expanded
        ur, uc = divmod(u, w)
        gu = g_cost[u]
        for dr, dc, cost in _MOVES:
            vr, vc = ur + dr, uc + dc
            if not (0 <= vr < h and 0 <= vc < w) or not ok[vr, vc]:
                continue
            if dr and dc and not (ok[ur + dr, uc] and ok[ur, uc + dc]):
                continue
            v = vr * w + vc
            if v in closed:
                continue
            ng = gu + cost
            if ng < g_cost.get(v, math.inf):
                g_cost[v] = ng
                parent[v] = u
                dr_, dc_ = abs(vr - gr), abs(vc - gc)
                hv = max(dr_, dc_) + (SQRT2 - 1.0) * min(dr_, dc_)
                heapq.heappush(heap, (ng + hv, hv, v))
    return None, expanded


def plan(belief: OccupancyBelief, start, goal, inflation: int = DEFAULT_INFLATION,
         relax_radius: float | None = None) -> PlannedPath | None:
    """Shortest 8-connected path from ``start`` to ``goal`` or None if unreachable.

    UNKNOWN cells are never entered.  ``goal`` is relaxed to the nearest
    traversable cell within ``relax_radius`` metres (default: 4 cells).
    """
    s_cell = _check_start(belief, start)
    ok = traversable(belief, inflation, s_cell)
    ok[s_cell] = True
    if relax_radius is None:
        relax_radius = 4 * belief.resolution
    g_cell = relax_goal(ok, belief, goal, relax_radius)
    if g_cell is None:
        return None
    # A* would exhaust the whole component when the goal is disconnected;
    # no-corner-cut 8-connectivity has the same components as 4-connectivity
    labels, _ = ndimage.label(ok)
    if labels[s_cell] != labels[g_cell]:
        return None
    cells, expanded = astar_cells(ok, s_cell, g_cell)
    if cells is None:
        return None
    pts = [belief.cell_center(r, c) for r, c in cells]
    return PlannedPath(pts, path_length(pts), expanded, cells)


def check_reachable(belief: OccupancyBelief, start, goal, inflation: int = DEFAULT_INFLATION,
                    relax_radius: float | None = None) -> bool:
    return plan(belief, start, goal, inflation, relax_radius) is not None


def grid_graph(ok: np.ndarray, resolution: float = 1.0):
    """Sparse adjacency of the traversable cells, same move rules as A*."""
    h, w = ok.shape
    idx = np.arange(h * w).reshape(h, w)
    rows, cols, data = [], [], []
    for dr, dc, cost in _MOVES:
        src = ok.copy()
        # valid (r, c) such that (r+dr, c+dc) inside and traversable
        r_lo, r_hi = max(0, -dr), h - max(0, dr)
        c_lo, c_hi = max(0, -dc), w - max(0, dc)
        m = np.zeros_like(ok)
        m[r_lo:r_hi, c_lo:c_hi] = (src[r_lo:r_hi, c_lo:c_hi]
                                   & ok[r_lo + dr:r_hi + dr, c_lo + dc:c_hi + dc])
        if dr and dc:
            m[r_lo:r_hi, c_lo:c_hi] &= ok[r_lo + dr:r_hi + dr, c_lo:c_hi] & ok[r_lo:r_hi, c_lo + dc:c_hi + dc]
        rr, cc = np.nonzero(m)
        rows.append(idx[rr, cc])
        cols.append(idx[rr + dr, cc + dc])
        data.append(np.full(rr.size, cost * resolution))
    g = coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(h * w, h * w))
    return g.tocsr()


def distance_field(belief: OccupancyBelief, start, inflation: int = DEFAULT_INFLATION) -> np.ndarray:
    """Shortest path length (m) from ``start`` to every cell; inf where unreachable."""
    s_cell = _check_start(belief, start)
    ok = traversable(belief, inflation, s_cell)
    ok[s_cell] = True
    graph = grid_graph(ok, belief.resolution)
    d = dijkstra(graph, directed=True, indices=s_cell[0] * belief.width + s_cell[1])
    return d.reshape(belief.height, belief.width)


def path_lengths_to(belief: OccupancyBelief, start, goals, inflation: int = DEFAULT_INFLATION,
                    relax_radius: float | None = None) -> np.ndarray:
    """Planner path length to each goal (after goal relaxation); inf if unreachable."""
    s_cell = _check_start(belief, start)
    ok = traversable(belief, inflation, s_cell)
    ok[s_cell] = True
    if relax_radius is None:
        relax_radius = 4 * belief.resolution
    graph = grid_graph(ok, belief.resolution)
    d = dijkstra(graph, directed=True, indices=s_cell[0] * belief.width + s_cell[1]).reshape(ok.shape)
    out = np.full(len(goals), np.inf)
    for i, goal in enumerate(goals):
        cell = relax_goal(ok, belief, goal, relax_radius)
        if cell is not None:
            out[i] = d[cell]
    return out
