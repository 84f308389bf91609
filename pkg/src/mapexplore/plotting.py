"""PNG figures for benchmark and ablation outputs (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .worldsim import WorldMap  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def completeness_curves(records, path: str | Path) -> Path:
    """``records``: iterable of (TierRun, timeline, path); one panel per world."""
    by_world: dict[str, list] = {}
    for run, timeline, _ in records:
        by_world.setdefault(run.world, []).append((run, timeline))
    n = max(1, len(by_world))
    fig, axes = plt.subplots(1, n, figsize=(4.5 * n, 3.4), squeeze=False)
    for ax, (world, items) in zip(axes[0], by_world.items()):
        for run, tl in items:
            t = [s[0] for s in tl]
            c = [s[2] for s in tl]
            ax.plot(t, c, lw=0.9, alpha=0.7, label=f"{run.strategy} {run.seed}")
        ax.axhline(0.75, color="0.6", ls=":", lw=0.8)
        ax.axhline(0.93, color="0.3", ls="--", lw=0.8)
        ax.set_title(world)
        ax.set_xlabel("simulated time (s)")
        ax.set_ylabel("completeness")
        ax.set_ylim(0, 1.02)
    return _save(fig, path)


def trajectory(world: WorldMap, points: Sequence[tuple[float, float]], path: str | Path, title: str = "") -> Path:
    w_m, h_m = world.extent
    ox, oy = world.origin
    fig, ax = plt.subplots(figsize=(8, 8 * h_m / w_m + 0.6))
    ax.imshow(world.cells, cmap="gray_r", origin="upper", extent=(ox, ox + w_m, oy + h_m, oy),
              interpolation="nearest")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts):
        ax.plot(pts[:, 0], pts[:, 1], "-", color="tab:blue", lw=1.2)
        ax.plot(pts[0, 0], pts[0, 1], "o", color="tab:green", ms=6)
        ax.plot(pts[-1, 0], pts[-1, 1], "s", color="tab:red", ms=6)
    ax.set_title(title)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    return _save(fig, path)


def timing_plot(rows: Sequence[dict], path: str | Path) -> Path:
    x = [r["completeness"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot(x, [r["structured_s"] * 1e3 for r in rows], "o-", label="structured map")
    ax.plot(x, [r["direct_s"] * 1e3 for r in rows], "s-", label="direct (wavefront)")
    ax.plot(x, [r["direct_vectorised_s"] * 1e3 for r in rows], "^-", alpha=0.6, label="direct (vectorised)")
    ax.set_xlabel("completeness")
    ax.set_ylabel("extraction time (ms)")
    ax.set_yscale("log")
    ax.legend()
    return _save(fig, path)


def aou_plot(rows: Sequence[dict], path: str | Path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.4))
    labels = ["AOU on", "AOU off"]
    for ax, key, ylabel in ((axes[0], "invalid_rate", "invalid-decision rate"),
                            (axes[1], "steps_to_93", "steps to 93%")):
        data = [[r[key] for r in rows if r["aou"] == v] for v in (1, 0)]
        ax.boxplot(data)
        ax.set_xticks([1, 2], labels)
        ax.set_ylabel(ylabel)
    return _save(fig, path)


def roi_plot(summary: Sequence[dict], path: str | Path) -> Path:
    n = [s["n"] for s in summary]
    fig, ax1 = plt.subplots(figsize=(5, 3.4))
    ax1.plot(n, [s["mean_completeness"] for s in summary], "o-", color="tab:blue")
    ax1.set_xlabel("ROI size n (cells)")
    ax1.set_ylabel("mean final completeness", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(n, [s["mean_steps"] for s in summary], "s--", color="tab:orange")
    ax2.set_ylabel("mean decision steps", color="tab:orange")
    ax1.set_xticks(n)
    return _save(fig, path)


def reward_curve(curve: Sequence[dict], path: str | Path, window: int = 20) -> Path:
    r = np.array([c["reward"] for c in curve], dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    ax.plot(r, lw=0.6, alpha=0.5, label="episode")
    if len(r) >= window:
        ma = np.convolve(r, np.ones(window) / window, mode="valid")
        ax.plot(np.arange(window - 1, len(r)), ma, lw=1.5, label=f"{window}-episode mean")
    ax.set_xlabel("episode")
    ax.set_ylabel("total reward")
    ax.legend()
    return _save(fig, path)
