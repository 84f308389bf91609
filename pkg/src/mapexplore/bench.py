"""Benchmark harness: completion-tier metrics, ablations and CSV output.

Time is simulated (travel distance / speed plus a fixed cost per decision),
so every number here is hardware independent except the structured-map
timing ablation, which measures wall-clock on purpose.
"""
from __future__ import annotations

import collections
import csv
import io
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from . import structmap
from .belief import UNKNOWN, OccupancyBelief
from .config import ConfigError, ExploreConfig, RunConfig
from .frontier import BoundarySet, boundary_points, feasible_boundaries, meanshift, proxy_map
from .policy import (
    MapAwareStrategy,
    NearestFrontierStrategy,
    RandomStrategy,
    Strategy,
    load_checkpoint,
)
from .rl import EpisodeRecord, run_episode
from .worlds import load_named, resolve_world
from .worldsim import FREE, WorldMap

log = logging.getLogger(__name__)

MOSTLY = 0.75
ESSENTIALLY = 0.93
STRATEGY_NAMES = ("nearest-frontier", "map-aware", "random")


# ---------------------------------------------------------------------------
# strategies and worlds
# ---------------------------------------------------------------------------

def make_strategy(name: str, checkpoint: str | Path | None = None) -> Strategy:
    if name == "nearest-frontier":
        return NearestFrontierStrategy()
    if name == "random":
        return RandomStrategy()
    if name == "map-aware":
        if not checkpoint:
            raise ConfigError("strategy 'map-aware' needs a checkpoint")
        net, _ = load_checkpoint(checkpoint)
        return MapAwareStrategy(net, stochastic=False)
    raise ConfigError(f"unknown strategy {name!r}; expected one of {', '.join(STRATEGY_NAMES)}")


def _checkpoint_path(cfg: RunConfig) -> Path | None:
    if not cfg.checkpoint:
        return None
    p = Path(cfg.checkpoint)
    return p if p.is_absolute() else cfg.base_dir / p


def validate(cfg: RunConfig, strategies: Sequence[str] | None = None) -> list[tuple[str, WorldMap]]:
    """Load every world and check every strategy before anything runs."""
    if not cfg.worlds:
        raise ConfigError("config names no worlds")
    worlds = []
    for name in cfg.worlds:
        path = resolve_world(name, cfg.base_dir)
        worlds.append((Path(name).stem, load_named(str(path))))
    for s in strategies if strategies is not None else cfg.strategies:
        make_strategy(s, _checkpoint_path(cfg))
    return worlds


# ---------------------------------------------------------------------------
# tier metrics
# ---------------------------------------------------------------------------

def tier_crossing(timeline: Sequence[tuple[float, float, float]], level: float):
    """(time, distance) at which completeness first reaches ``level``.

    Linear interpolation between the two samples around the crossing;
    (None, None) if the level is never reached.
    """
    prev = None
    for t, d, c in timeline:
        if c >= level:
            if prev is None or prev[2] >= level:
                return float(t), float(d)
            t0, d0, c0 = prev
            frac = (level - c0) / (c - c0)
            return t0 + frac * (t - t0), d0 + frac * (d - d0)
        prev = (t, d, c)
    return None, None


@dataclass
class TierRun:
    world: str
    strategy: str
    seed: int
    steps: int
    terminal: str
    invalid_decisions: int
    final_completeness: float
    t75: float | None
    d75: float | None
    t93: float | None
    d93: float | None
    t_stop: float
    d_stop: float
    failure: bool
    wall_s: float = 0.0

    @classmethod
    def from_record(cls, rec: EpisodeRecord, strategy: str, wall_s: float = 0.0) -> "TierRun":
        t75, d75 = tier_crossing(rec.timeline, MOSTLY)
        t93, d93 = tier_crossing(rec.timeline, ESSENTIALLY)
        return cls(rec.world, strategy, rec.seed, len(rec.steps), rec.terminal.value, rec.invalid_decisions,
                   rec.final_completeness, t75, d75, t93, d93, rec.elapsed, rec.distance, t93 is None, wall_s)


RUN_FIELDS = [f.name for f in fields(TierRun)]
AGG_FIELDS = ["world", "strategy", "runs", "failures", "failure_rate", "mean_steps", "mean_final_completeness",
              "mean_t75", "mean_d75", "mean_t93", "mean_d93", "mean_t_stop", "mean_d_stop"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


@dataclass
class TierReport:
    runs: list[TierRun]

    def aggregate(self) -> list[dict]:
        groups: dict[tuple[str, str], list[TierRun]] = collections.OrderedDict()
        for r in self.runs:
            groups.setdefault((r.world, r.strategy), []).append(r)
        rows = []
        for (world, strategy), rs in groups.items():
            fails = sum(r.failure for r in rs)
            rows.append({
                "world": world, "strategy": strategy, "runs": len(rs), "failures": fails,
                "failure_rate": fails / len(rs),
                "mean_steps": _mean(r.steps for r in rs),
                "mean_final_completeness": _mean(r.final_completeness for r in rs),
                "mean_t75": _mean(r.t75 for r in rs), "mean_d75": _mean(r.d75 for r in rs),
                "mean_t93": _mean(r.t93 for r in rs), "mean_d93": _mean(r.d93 for r in rs),
                "mean_t_stop": _mean(r.t_stop for r in rs), "mean_d_stop": _mean(r.d_stop for r in rs),
            })
        return rows

    def runs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RUN_FIELDS)
        for r in self.runs:
            w.writerow([_fmt(getattr(r, k)) for k in RUN_FIELDS])
        return buf.getvalue()

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(AGG_FIELDS)
        for row in self.aggregate():
            w.writerow([_fmt(row[k]) for k in AGG_FIELDS])
        return buf.getvalue()

    @classmethod
    def from_runs_csv(cls, text: str) -> "TierReport":
        types = {f.name: f.type for f in fields(TierRun)}
        runs = []
        for row in csv.DictReader(io.StringIO(text)):
            kw = {}
            for k, v in row.items():
                ann = str(types[k])
                if ann == "str":
                    kw[k] = v
                elif ann == "int":
                    kw[k] = int(v)
                elif ann == "bool":
                    kw[k] = bool(int(v))
                else:
                    kw[k] = float(v) if v != "" else None
            runs.append(TierRun(**kw))
        return cls(runs)


def parse_aggregate_csv(text: str) -> list[dict]:
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        out = {}
        for k, v in row.items():
            if k in ("world", "strategy"):
                out[k] = v
            elif k in ("runs", "failures"):
                out[k] = int(v)
            else:
                out[k] = float(v) if v != "" else None
        rows.append(out)
    return rows


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def _bench_task(args):
    world_name, world, strategy_name, checkpoint, explore, seed = args
    strategy = make_strategy(strategy_name, checkpoint)
    t0 = time.perf_counter()
    rec = run_episode(world, strategy, explore, seed, world_name=world_name)
    wall = time.perf_counter() - t0
    return TierRun.from_record(rec, strategy_name, wall), rec


def _run_tasks(tasks: list, workers: int):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(_bench_task, tasks)
    else:
        for t in tasks:
            yield _bench_task(t)


def write_trajectory(rec: EpisodeRecord, stem: Path) -> None:
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".steps.csv").write_text(rec.to_csv())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for x, y in rec.path:
        w.writerow([repr(float(x)), repr(float(y))])
    stem.with_suffix(".path.csv").write_text(buf.getvalue())
    if rec.final_belief is not None:
        stem.with_suffix(".map.txt").write_text(rec.final_belief.to_text())


def run_benchmark(cfg: RunConfig, out_dir: str | Path | None = None, plots: bool = True,
                  workers: int = 1) -> TierReport:
    """Run every (world, strategy, seed) combination and write the tier CSVs.

    Outputs in ``out_dir``: ``tiers_runs.csv``, ``tiers_aggregate.csv``,
    ``trajectories/<world>_<strategy>_<seed>.{steps.csv,path.csv,map.txt}``
    and, with ``plots``, PNG figures.
    """
    worlds = validate(cfg)
    ckpt = _checkpoint_path(cfg)
    tasks = [(wname, world, s, ckpt, cfg.explore, seed)
             for wname, world in worlds for s in cfg.strategies for seed in cfg.run_seeds()]
    out = Path(out_dir) if out_dir is not None else None
    runs, records = [], []
    for run, rec in _run_tasks(tasks, workers):
        log.info("%s/%s seed %d: %d steps, completeness %.4f (%s)", run.world, run.strategy, run.seed,
                 run.steps, run.final_completeness, run.terminal)
        runs.append(run)
        if out is not None:
            write_trajectory(rec, out / "trajectories" / f"{run.world}_{run.strategy}_{run.seed}")
            records.append((run, rec.timeline, rec.path))
    report = TierReport(runs)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "tiers_runs.csv").write_text(report.runs_csv())
        (out / "tiers_aggregate.csv").write_text(report.aggregate_csv())
        if plots:
            from . import plotting

            plotting.completeness_curves(records, out / "completeness.png")
            for wname, world in worlds:
                first = next(((r, p) for r, _, p in records if r.world == wname), None)
                if first is not None:
                    plotting.trajectory(world, first[1], out / f"trajectory_{wname}.png",
                                        title=f"{wname} / {first[0].strategy} / seed {first[0].seed}")
    return report


# ---------------------------------------------------------------------------
# ablation: structured map vs direct cell-level frontier extraction
# ---------------------------------------------------------------------------

def structured_extraction(belief: OccupancyBelief, cfg: ExploreConfig) -> np.ndarray:
    """Partition, boundary flags and the boundary pipeline; returns L."""
    roi = structmap.partition(belief, cfg.n, cfg.alpha, cfg.beta)
    pts = boundary_points(roi, belief.origin, belief.resolution)
    return BoundarySet(cfg.n, belief.resolution, cfg.R, cfg.k, cfg.bandwidth).update(pts)


def frontier_cells_wavefront(belief: OccupancyBelief, start_cell: tuple[int, int]) -> np.ndarray:
    """Cell-level frontier detection by a breadth-first wavefront.

    Visits every FREE cell 4-connected to ``start_cell`` and keeps those
    with an UNKNOWN 4-neighbour.  Cost grows with the explored area, as in
    classic wavefront frontier detection.  Returns (row, col) pairs in
    visiting order.
    """
    cells = belief.cells
    h, w = cells.shape
    r0, c0 = start_cell
    if not (0 <= r0 < h and 0 <= c0 < w) or cells[r0, c0] != FREE:
        return np.zeros((0, 2), dtype=np.int64)
    grid = cells.tolist()
    seen = [[False] * w for _ in range(h)]
    seen[r0][c0] = True
    queue = collections.deque([(r0, c0)])
    out = []
    while queue:
        r, c = queue.popleft()
        frontier = False
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= rr < h and 0 <= cc < w:
                v = grid[rr][cc]
                if v == UNKNOWN:
                    frontier = True
                elif v == FREE and not seen[rr][cc]:
                    seen[rr][cc] = True
                    queue.append((rr, cc))
        if frontier:
            out.append((r, c))
    return np.asarray(out, dtype=np.int64).reshape(-1, 2)


def frontier_cells_mask(belief: OccupancyBelief) -> np.ndarray:
    """Vectorised cell-level frontier test over the whole grid (no reachability)."""
    cells = belief.cells
    unk = cells == UNKNOWN
    near = np.zeros_like(unk)
    near[1:, :] |= unk[:-1, :]
    near[:-1, :] |= unk[1:, :]
    near[:, 1:] |= unk[:, :-1]
    near[:, :-1] |= unk[:, 1:]
    return np.argwhere((cells == FREE) & near)


def cluster_cells(belief: OccupancyBelief, cells_rc: np.ndarray, cfg: ExploreConfig) -> np.ndarray:
    """The structured pipeline's clustering (density screen, mean shift,
    proxy selection) applied to raw frontier cell centres."""
    if len(cells_rc) == 0:
        return np.zeros((0, 2))
    pts = np.empty((len(cells_rc), 2))
    pts[:, 0] = belief.origin[0] + (cells_rc[:, 1] + 0.5) * belief.resolution
    pts[:, 1] = belief.origin[1] + (cells_rc[:, 0] + 0.5) * belief.resolution
    feas = feasible_boundaries(pts, cfg.R, cfg.k)
    if len(feas) == 0:
        return np.zeros((0, 2))
    centers = meanshift(feas, cfg.bandwidth, bandwidth_floor=cfg.n * belief.resolution)
    return proxy_map(centers, feas)


def direct_extraction(belief: OccupancyBelief, pose_xy: tuple[float, float], cfg: ExploreConfig) -> np.ndarray:
    """Wavefront frontier detection from the robot cell, then the same clustering."""
    return cluster_cells(belief, frontier_cells_wavefront(belief, belief.cell_of(*pose_xy)), cfg)


def direct_extraction_vectorised(belief: OccupancyBelief, cfg: ExploreConfig) -> np.ndarray:
    return cluster_cells(belief, frontier_cells_mask(belief), cfg)


def _best_time(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


@dataclass
class Snapshot:
    belief: OccupancyBelief
    pose: tuple[float, float]
    completeness: float
    explored_cells: int


def exploration_trace(world: WorldMap, cfg: ExploreConfig, seed: int = 0) -> list[Snapshot]:
    """Belief after every scan of a nearest-frontier run to its natural stop."""
    snaps: list[Snapshot] = []

    def grab(ep):
        b = ep.belief.copy()
        snaps.append(Snapshot(b, (ep.pose.x, ep.pose.y), ep.record.timeline[-1][2],
                              int(b.free_count + b.occupied_count)))

    run_cfg = replace(cfg, complete_threshold=1.01, episode_length=max(cfg.episode_length, 100))
    run_episode(world, NearestFrontierStrategy(), run_cfg, seed, on_scan=grab)
    return snaps


def pick_snapshots(snaps: Sequence[Snapshot], count: int, lo: float = 0.10) -> list[Snapshot]:
    """``count`` snapshots whose completeness best matches an even grid from
    ``lo`` to the final value (distinct where the trace allows)."""
    comps = np.array([s.completeness for s in snaps])
    targets = np.linspace(lo, comps[-1], count)
    chosen = []
    for t in targets:
        i = int(np.searchsorted(comps, t - 1e-12))
        chosen.append(min(i, len(snaps) - 1))
    return [snaps[i] for i in chosen]


TIMING_FIELDS = ["snapshot", "completeness", "explored_cells", "structured_s", "direct_s",
                 "direct_vectorised_s", "ratio", "structured_points", "direct_points"]


def ablate_structmap_timing(world: WorldMap, cfg: ExploreConfig, snapshots: int = 20, seed: int = 0,
                            repeats: int = 10, min_sample_s: float = 0.01) -> list[dict]:
    """Structured pipeline vs direct frontier extraction along one trace.

    Each time is the best of many wall-clock measurements: ``repeats``
    round-robin sweeps over all snapshots (so a transient slowdown of the
    host cannot bias one part of the trace), and within a sweep a method is
    re-run until ``min_sample_s`` has elapsed, so cheap calls get more
    samples.
    """
    snaps = pick_snapshots(exploration_trace(world, cfg, seed), snapshots)
    methods = {
        "structured_s": lambda s: structured_extraction(s.belief, cfg),
        "direct_s": lambda s: direct_extraction(s.belief, s.pose, cfg),
        "direct_vectorised_s": lambda s: direct_extraction_vectorised(s.belief, cfg),
    }
    best = {k: [math.inf] * len(snaps) for k in methods}
    for _ in range(repeats):
        for i, s in enumerate(snaps):
            for key, fn in methods.items():
                spent = 0.0
                while spent < min_sample_s:
                    t = _best_time(lambda: fn(s), 1)
                    best[key][i] = min(best[key][i], t)
                    spent += t
    rows = []
    for i, s in enumerate(snaps):
        t_s, t_d = best["structured_s"][i], best["direct_s"][i]
        rows.append({
            "snapshot": i, "completeness": s.completeness, "explored_cells": s.explored_cells,
            "structured_s": t_s, "direct_s": t_d, "direct_vectorised_s": best["direct_vectorised_s"][i],
            "ratio": t_s / t_d if t_d > 0 else math.inf,
            "structured_points": len(methods["structured_s"](s)),
            "direct_points": len(methods["direct_s"](s)),
        })
    return rows


def timing_summary(rows: Sequence[dict], lo: float = 0.10, hi: float = 0.95) -> dict:
    """Speedup and trend statistics of a timing ablation.

    ``late_ratio`` is the median ratio over snapshots at >= ``hi`` completeness,
    ``structured_spread`` is max/min structured time over snapshots inside
    [lo, hi], and the direct trend is summarised by the Spearman rank
    correlation between explored cells and direct time (strict monotonicity
    is reported too, but wall-clock jitter makes it fragile).
    """
    ratios = [r["ratio"] for r in rows]
    late = [r["ratio"] for r in rows if r["completeness"] >= hi] or ratios[-1:]
    band = [r["structured_s"] for r in rows if lo <= r["completeness"] <= hi] or [r["structured_s"] for r in rows]
    explored = [r["explored_cells"] for r in rows]
    dt = [r["direct_s"] for r in rows]
    order = np.argsort(explored, kind="stable")
    dt_sorted = [dt[i] for i in order]
    # rank correlation is undefined for constant input
    varied = len(set(explored)) > 1 and len(set(dt)) > 1
    rho = float(stats.spearmanr(explored, dt).statistic) if varied else math.nan
    return {
        "median_ratio": statistics.median(ratios),
        "late_ratio": statistics.median(late),
        "final_completeness": rows[-1]["completeness"],
        "structured_spread": max(band) / min(band),
        "direct_spearman": rho,
        "direct_strictly_monotone": all(b >= a for a, b in zip(dt_sorted, dt_sorted[1:])),
        "direct_growth": dt_sorted[-1] / dt_sorted[0],
    }


TIMING_SPEEDUP = 0.2
TIMING_SPREAD = 2.0
TIMING_RHO = 0.9


def timing_checks(summary: dict) -> dict[str, bool]:
    return {
        "speedup": summary["median_ratio"] <= TIMING_SPEEDUP and summary["late_ratio"] <= TIMING_SPEEDUP,
        "structured_flat": summary["structured_spread"] < TIMING_SPREAD,
        "direct_grows": summary["direct_spearman"] >= TIMING_RHO and summary["direct_growth"] > 1.0,
    }


# ---------------------------------------------------------------------------
# ablation: action optimisation unit on/off
# ---------------------------------------------------------------------------

AOU_FIELDS = ["world", "seed", "aou", "steps", "decisions", "invalid_decisions", "invalid_rate", "steps_to_93",
              "reached_93", "final_completeness", "terminal"]


def ablate_aou(worlds: Sequence[tuple[str, WorldMap]], cfg: ExploreConfig, seeds: Sequence[int],
               strategy: str = "random", checkpoint: str | Path | None = None) -> list[dict]:
    """Paired runs (same seed, same start) with the unit enabled and disabled.

    Runs that never reach 93% count ``episode_length`` steps towards the
    steps-to-93% mean.
    """
    rows = []
    for wname, world in worlds:
        for seed in seeds:
            for aou in (True, False):
                rec = run_episode(world, make_strategy(strategy, checkpoint), replace(cfg, use_aou=aou), seed,
                                  world_name=wname)
                s93 = rec.steps_to(ESSENTIALLY)
                decisions = len(rec.steps)
                rows.append({
                    "world": wname, "seed": seed, "aou": int(aou), "steps": decisions, "decisions": decisions,
                    "invalid_decisions": rec.invalid_decisions,
                    "invalid_rate": rec.invalid_decisions / decisions if decisions else 0.0,
                    "steps_to_93": s93 if s93 is not None else cfg.episode_length,
                    "reached_93": int(s93 is not None),
                    "final_completeness": rec.final_completeness, "terminal": rec.terminal.value,
                })
    return rows


def aou_summary(rows: Sequence[dict]) -> dict:
    out = {}
    for aou in (1, 0):
        rs = [r for r in rows if r["aou"] == aou]
        dec = sum(r["decisions"] for r in rs)
        key = "enabled" if aou else "disabled"
        out[f"{key}_invalid_rate"] = sum(r["invalid_decisions"] for r in rs) / dec if dec else 0.0
        out[f"{key}_mean_steps_to_93"] = float(np.mean([r["steps_to_93"] for r in rs])) if rs else math.nan
        out[f"{key}_reached_93"] = sum(r["reached_93"] for r in rs)
        out["pairs"] = len(rs)
    return out


# ---------------------------------------------------------------------------
# ablation: ROI size
# ---------------------------------------------------------------------------

ROI_FIELDS = ["world", "seed", "n", "steps", "time_s", "distance_m", "final_completeness", "terminal"]


def ablate_roi(worlds: Sequence[tuple[str, WorldMap]], cfg: ExploreConfig, seeds: Sequence[int],
               n_values: Sequence[int] = (2, 4, 8)) -> list[dict]:
    """Nearest-frontier runs for each ROI size."""
    rows = []
    for n in n_values:
        if n < 1:
            raise ConfigError("ROI size n must be >= 1")
        run_cfg = replace(cfg, n=n)
        for wname, world in worlds:
            for seed in seeds:
                rec = run_episode(world, NearestFrontierStrategy(), run_cfg, seed, world_name=wname)
                rows.append({"world": wname, "seed": seed, "n": n, "steps": len(rec.steps), "time_s": rec.elapsed,
                             "distance_m": rec.distance, "final_completeness": rec.final_completeness,
                             "terminal": rec.terminal.value})
    return rows


def roi_summary(rows: Sequence[dict]) -> list[dict]:
    out = []
    for n in sorted({r["n"] for r in rows}):
        rs = [r for r in rows if r["n"] == n]
        out.append({"n": n, "runs": len(rs), "mean_steps": float(np.mean([r["steps"] for r in rs])),
                    "mean_time_s": float(np.mean([r["time_s"] for r in rs])),
                    "mean_completeness": float(np.mean([r["final_completeness"] for r in rs])),
                    "min_completeness": float(np.min([r["final_completeness"] for r in rs]))})
    return out


def non_increasing(values: Sequence[float]) -> bool:
    return all(b <= a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# csv helpers
# ---------------------------------------------------------------------------

def rows_to_csv(rows: Sequence[dict], header: Sequence[str] | None = None) -> str:
    header = list(header) if header is not None else (list(rows[0]) if rows else [])
    buf = io.StringIO()
    w = csv.DictWriter(buf, header, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def csv_to_rows(text: str) -> list[dict]:
    """Inverse of rows_to_csv: numbers come back as int or float."""
    def conv(v: str):
        if v == "":
            return None
        try:
            return int(v)
        except ValueError:
            pass
        try:
            return float(v)
        except ValueError:
            return v

    return [{k: conv(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]


def summary_csv(summary: dict | Sequence[dict]) -> str:
    rows = [summary] if isinstance(summary, dict) else list(summary)
    return rows_to_csv(rows)


__all__ = [
    "TierRun", "TierReport", "tier_crossing", "run_benchmark", "make_strategy", "validate",
    "ablate_structmap_timing", "ablate_aou", "ablate_roi", "timing_summary", "aou_summary", "roi_summary",
    "structured_extraction", "direct_extraction", "cluster_cells", "timing_checks",
    "frontier_cells_wavefront", "frontier_cells_mask",
    "rows_to_csv", "csv_to_rows",
]
