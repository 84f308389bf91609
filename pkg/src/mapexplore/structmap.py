"""Structured map: ROI classification, visited map and pose mask.

The belief grid is cut into n x n blocks (ROIs).  Each ROI is classified as
obstacle (1), navigable (0) or unexplored (-1) from its occupied / free /
unknown counts, and ROIs containing free and unknown but no occupied cells
are flagged as boundary regions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .belief import UNKNOWN, OccupancyBelief
from .worldsim import FREE, OCCUPIED

DEFAULT_N = 4
DEFAULT_ALPHA = 0.18
DEFAULT_BETA = 1.0
DEFAULT_LAMBDA = 3
DEFAULT_F = 32
DEFAULT_G = 64


class StructMapError(ValueError):
    pass


@dataclass(frozen=True)
class RoiGrid:
    values: np.ndarray  # (F, G) int8 in {-1, 0, 1}
    boundary_flags: np.ndarray  # (F, G) bool
    counts: np.ndarray  # (3, F, G) occupied / free / unknown
    n: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _block_counts(belief_cells: np.ndarray, n: int) -> np.ndarray:
    h, w = belief_cells.shape
    rows, cols = math.ceil(h / n), math.ceil(w / n)
    padded = np.full((rows * n, cols * n), UNKNOWN, dtype=np.int8)
    padded[:h, :w] = belief_cells
    blocks = padded.reshape(rows, n, cols, n)
    c_o = np.count_nonzero(blocks == OCCUPIED, axis=(1, 3))
    c_f = np.count_nonzero(blocks == FREE, axis=(1, 3))
    c_u = n * n - c_o - c_f
    return np.stack([c_o, c_f, c_u])


def classify_counts(c_o, c_f, c_u, n: int, alpha: float, beta: float):
    """Vectorised ROI rule; returns (values, boundary_flags)."""
    c_o, c_f, c_u = (np.asarray(c) for c in (c_o, c_f, c_u))
    values = np.where(c_o >= alpha * n * n, 1, np.where(c_f >= beta * c_u, 0, -1)).astype(np.int8)
    flags = (c_o == 0) & (c_f > 0) & (c_u > 0)
    return values, flags


def partition(belief: OccupancyBelief, n: int = DEFAULT_N, alpha: float = DEFAULT_ALPHA,
              beta: float = DEFAULT_BETA) -> RoiGrid:
    """Classify every n x n block of the belief.  Right/bottom fringe is padded UNKNOWN."""
    if n <= 0 or alpha < 0 or beta < 0:
        raise StructMapError("partition needs n > 0 and alpha, beta >= 0")
    counts = _block_counts(belief.cells, n)
    values, flags = classify_counts(counts[0], counts[1], counts[2], n, alpha, beta)
    return RoiGrid(values, flags, counts, n)


def update_visited(visited: np.ndarray, roi: RoiGrid) -> np.ndarray:
    if visited.shape != roi.shape:
        raise StructMapError(f"visited {visited.shape} vs roi {roi.shape}")
    return (visited.astype(bool) | (roi.values != -1)).astype(np.uint8)


def pose_mask(robot_roi: tuple[int, int], lam: int = DEFAULT_LAMBDA, F: int = DEFAULT_F,
              G: int = DEFAULT_G) -> np.ndarray:
    i, j = robot_roi
    if not (0 <= i < F and 0 <= j < G):
        raise StructMapError(f"robot ROI {robot_roi} outside {F}x{G} grid")
    mask = np.zeros((F, G), dtype=np.uint8)
    mask[max(0, i - lam):i + lam + 1, max(0, j - lam):j + lam + 1] = 1
    return mask


def robot_roi_index(x: float, y: float, origin: tuple[float, float], n: int, r: float) -> tuple[int, int]:
    """(row, col) of the ROI holding world point (x, y)."""
    return int(math.floor((y - origin[1]) / (n * r))), int(math.floor((x - origin[0]) / (n * r)))


def assemble(roi: RoiGrid | np.ndarray, visited: np.ndarray, mask: np.ndarray) -> np.ndarray:
    values = roi.values if isinstance(roi, RoiGrid) else np.asarray(roi)
    if not (values.shape == visited.shape == mask.shape):
        raise StructMapError(f"channel shapes differ: {values.shape}, {visited.shape}, {mask.shape}")
    return np.stack([values, visited, mask]).astype(np.float32)


def fit_to(channels: np.ndarray, F: int, G: int) -> np.ndarray:
    """Pad (with -1 / 0 / 0) or crop a structured map to F x G for the network."""
    out = np.zeros((3, F, G), dtype=np.float32)
    out[0] = -1.0
    f, g = min(F, channels.shape[1]), min(G, channels.shape[2])
    out[:, :f, :g] = channels[:, :f, :g]
    return out


def dump_structured(channels: np.ndarray) -> str:
    """Three F x G integer grids separated by blank lines."""
    blocks = []
    for ch in channels:
        blocks.append("\n".join(" ".join(f"{int(v):d}" for v in row) for row in ch))
    return "\n\n".join(blocks) + "\n"


def load_structured(text: str) -> np.ndarray:
    blocks = [b for b in text.strip().split("\n\n") if b.strip()]
    if len(blocks) != 3:
        raise StructMapError(f"expected 3 channel blocks, got {len(blocks)}")
    arrs = [np.array([[int(v) for v in ln.split()] for ln in b.splitlines()]) for b in blocks]
    return np.stack(arrs).astype(np.float32)
