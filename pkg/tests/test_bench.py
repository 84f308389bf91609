import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_belief
from mapexplore import bench
from mapexplore.bench import (
    TierReport,
    TierRun,
    ablate_roi,
    cluster_cells,
    csv_to_rows,
    direct_extraction,
    direct_extraction_vectorised,
    frontier_cells_mask,
    frontier_cells_wavefront,
    make_strategy,
    non_increasing,
    parse_aggregate_csv,
    rows_to_csv,
    structured_extraction,
    tier_crossing,
    timing_checks,
    timing_summary,
    validate,
)
from mapexplore.belief import OccupancyBelief
from mapexplore.config import ConfigError, ExploreConfig, RunConfig, parse_config
from mapexplore.policy import NearestFrontierStrategy
from mapexplore.rl import run_episode
from mapexplore.structmap import partition
from mapexplore.worlds import load_named
from mapexplore.worldsim import FREE, WorldMap


def test_tier_crossing_interpolates():
    t, d = tier_crossing([(0.0, 0.0, 0.1), (99.0, 9.9, 0.74), (101.0, 10.1, 0.76)], 0.75)
    assert math.isclose(t, 100.0) and math.isclose(d, 10.0)


def test_tier_crossing_edge_cases():
    assert tier_crossing([(0.0, 0.0, 0.8)], 0.75) == (0.0, 0.0)
    assert tier_crossing([(0.0, 0.0, 0.1), (5.0, 1.0, 0.90)], 0.93) == (None, None)
    assert tier_crossing([], 0.5) == (None, None)
    assert tier_crossing([(0.0, 0.0, 0.2), (3.0, 1.0, 0.5)], 0.5) == (3.0, 1.0)


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 1)), min_size=1, max_size=30),
       st.floats(0.01, 1.0))
def test_tier_crossing_brute_force(increments, level):
    t = d = 0.0
    c = 0.0
    timeline = []
    for dt, dc in increments:
        t += dt
        d += dt / 2
        c = min(1.0, c + dc * 0.2)
        timeline.append((t, d, c))
    got_t, got_d = tier_crossing(timeline, level)
    first = next((i for i, s in enumerate(timeline) if s[2] >= level), None)
    if first is None:
        assert got_t is None and got_d is None
        return
    lo_t = timeline[first - 1][0] if first else timeline[0][0]
    assert lo_t - 1e-9 <= got_t <= timeline[first][0] + 1e-9
    assert math.isclose(got_d, got_t / 2, abs_tol=1e-9)


def test_failure_flag_when_93_not_reached():
    world = load_named("tworoom")
    rec = run_episode(world, NearestFrontierStrategy(), ExploreConfig(episode_length=1), rng_seed=0)
    rec.timeline = [(0.0, 0.0, 0.5), (10.0, 2.0, 0.90)]
    run = TierRun.from_record(rec, "nearest-frontier")
    assert run.failure and run.t93 is None and run.t75 is not None


def test_already_complete_run_has_zero_tiers():
    cells = np.zeros((30, 30), dtype=np.uint8)
    cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = 1
    world = WorldMap(cells, 0.1, (0.0, 0.0), (1.55, 1.55))
    cfg = ExploreConfig(fov_deg=360.0, random_start=False, noise_sigma=0.0)
    run = TierRun.from_record(run_episode(world, NearestFrontierStrategy(), cfg, 0), "nearest-frontier")
    assert run.steps == 0 and not run.failure
    assert (run.t75, run.d75, run.t93, run.d93) == (0.0, 0.0, 0.0, 0.0)


def _report():
    runs = [TierRun("a", "nearest-frontier", 0, 5, "COMPLETE", 0, 0.995, 10.5, 2.25, 20.0, 4.0, 30.0, 6.0, False, 1.5),
            TierRun("a", "nearest-frontier", 1, 7, "STEP_LIMIT", 1, 0.9, 12.0, 3.0, None, None, 40.0, 8.0, True),
            TierRun("b", "random", 0, 3, "FAILURE", 5, 0.1 + 0.2, None, None, None, None, 1.0, 0.1, True)]
    return TierReport(runs)


def test_runs_csv_round_trip():
    rep = _report()
    back = TierReport.from_runs_csv(rep.runs_csv())
    assert back.runs == rep.runs


def test_aggregate_csv_round_trip():
    rep = _report()
    agg = parse_aggregate_csv(rep.aggregate_csv())
    assert agg == rep.aggregate()
    a = agg[0]
    assert a["runs"] == 2 and a["failures"] == 1 and a["failure_rate"] == 0.5
    assert a["mean_t93"] == 20.0 and a["mean_t75"] == 11.25
    assert agg[1]["mean_t75"] is None


def test_generic_csv_round_trip():
    rows = [{"a": 1, "b": 0.1 + 0.2, "c": "x", "d": None}, {"a": 2, "b": 1e-300, "c": "y", "d": 3.5}]
    assert csv_to_rows(rows_to_csv(rows)) == rows


def test_boundary_rois_contain_cell_frontiers():
    rng = np.random.default_rng(0)
    for _ in range(30):
        b = random_belief(rng, 64, 64, rng.uniform(0.1, 0.6), rng.uniform(0.0, 0.1))
        roi = partition(b, 4)
        fr = np.zeros(b.cells.shape, dtype=bool)
        cells = frontier_cells_mask(b)
        fr[cells[:, 0], cells[:, 1]] = True
        for i, j in np.argwhere(roi.boundary_flags):
            assert fr[4 * i:4 * i + 4, 4 * j:4 * j + 4].any()


def test_wavefront_is_reachable_subset_of_mask():
    rng = np.random.default_rng(1)
    for _ in range(20):
        b = random_belief(rng, 40, 40, 0.3, 0.1)
        start = tuple(np.argwhere(b.cells == FREE)[0])
        wf = {tuple(c) for c in frontier_cells_wavefront(b, start)}
        mk = {tuple(c) for c in frontier_cells_mask(b)}
        assert wf <= mk
    open_b = OccupancyBelief(20, 20, cells=np.zeros((20, 20), dtype=np.int8))
    open_b.cells[:, 10:] = -1
    assert {tuple(c) for c in frontier_cells_wavefront(open_b, (0, 0))} == \
        {tuple(c) for c in frontier_cells_mask(open_b)}


def test_all_unknown_belief_gives_no_frontiers():
    b = OccupancyBelief(64, 64)
    cfg = ExploreConfig()
    assert len(structured_extraction(b, cfg)) == 0
    assert len(direct_extraction(b, (3.0, 3.0), cfg)) == 0
    assert len(direct_extraction_vectorised(b, cfg)) == 0
    assert len(cluster_cells(b, np.zeros((0, 2), dtype=int), cfg)) == 0


def test_structured_and_direct_find_frontiers_on_a_half_map():
    b = OccupancyBelief(64, 64)
    b.cells[:, :30] = FREE  # straddles the ROI column starting at cell 28
    b._recount()
    cfg = ExploreConfig()
    s = structured_extraction(b, cfg)
    d = direct_extraction(b, (0.5, 0.5), cfg)
    assert len(s) > 0 and len(d) > 0
    assert np.allclose(s[:, 0], 2.8)
    assert np.allclose(d[:, 0], 2.95)


def test_roi_ablation_n4_matches_benchmark():
    world = load_named("tworoom")
    cfg = ExploreConfig(episode_length=4)
    rows = ablate_roi([("tworoom", world)], cfg, [3], [4])
    rec = run_episode(world, NearestFrontierStrategy(), cfg, 3, world_name="tworoom")
    r = rows[0]
    assert r["steps"] == len(rec.steps) and r["time_s"] == rec.elapsed
    assert r["distance_m"] == rec.distance and r["final_completeness"] == rec.final_completeness


def test_roi_larger_than_map_does_not_crash():
    world = load_named("tworoom")
    rows = ablate_roi([("tworoom", world)], ExploreConfig(episode_length=2), [0], [200])
    assert rows[0]["n"] == 200 and 0.0 <= rows[0]["final_completeness"] <= 1.0
    with pytest.raises(ConfigError):
        ablate_roi([("tworoom", world)], ExploreConfig(), [0], [0])


def test_validate_errors(tmp_path):
    with pytest.raises(ConfigError):
        validate(RunConfig())
    with pytest.raises(FileNotFoundError):
        validate(RunConfig(worlds=["nowhere.txt"], base_dir=tmp_path))
    with pytest.raises(ConfigError):
        validate(RunConfig(worlds=["tworoom"], strategies=["teleport"]))
    with pytest.raises(ConfigError):
        validate(RunConfig(worlds=["tworoom"], strategies=["map-aware"]))
    assert [n for n, _ in validate(RunConfig(worlds=["tworoom"]))] == ["tworoom"]
    with pytest.raises(ConfigError):
        make_strategy("teleport")


def _timing_rows(structured, direct, comps, explored):
    return [{"completeness": c, "explored_cells": e, "structured_s": s, "direct_s": d, "ratio": s / d}
            for s, d, c, e in zip(structured, direct, comps, explored)]


def test_timing_summary_on_synthetic_rows():
    comps = np.linspace(0.1, 0.99, 10)
    explored = np.arange(10) * 100 + 50
    rows = _timing_rows([1.0] * 10, [10.0 + i for i in range(10)], comps, explored)
    s = timing_summary(rows)
    assert math.isclose(s["median_ratio"], (1 / 14 + 1 / 15) / 2)
    assert math.isclose(s["late_ratio"], 1 / 19)
    assert s["structured_spread"] == 1.0
    assert math.isclose(s["direct_spearman"], 1.0)
    assert s["direct_strictly_monotone"] and math.isclose(s["direct_growth"], 1.9)
    assert all(timing_checks(s).values())
    bad = timing_summary(_timing_rows([1.0, 5.0] * 5, [2.0] * 10, comps, explored))
    checks = timing_checks(bad)
    assert not checks["speedup"] and not checks["structured_flat"] and not checks["direct_grows"]


def test_non_increasing():
    assert non_increasing([3, 2, 2, 1]) and not non_increasing([1, 2])


def test_config_parsing():
    cfg = parse_config("# comment\nworld = corridor, multiroom\nlambda = 2\nn = 8\ngamma = 0.9\n"
                       "runs = 3\nseed = 7\nplateau = off\nbandwidth = auto\n")
    assert cfg.worlds == ["corridor", "multiroom"] and cfg.explore.lam == 2 and cfg.explore.n == 8
    assert cfg.ppo.gamma == 0.9 and cfg.run_seeds() == [7, 8, 9] and cfg.plateau is False
    assert cfg.explore.bandwidth is None
    for bad in ("nonsense = 1\n", "n = four\n", "gamma = 0\n", "runs = 0\n", "just words\n", "workers = 0\n"):
        with pytest.raises(ConfigError):
            parse_config(bad)


def test_bench_writes_outputs(tmp_path):
    cfg = RunConfig(worlds=["tworoom"], runs=2, explore=ExploreConfig(episode_length=3))
    report = bench.run_benchmark(cfg, tmp_path, plots=True)
    assert len(report.runs) == 2
    for name in ("tiers_runs.csv", "tiers_aggregate.csv", "completeness.png", "trajectory_tworoom.png"):
        assert (tmp_path / name).is_file()
    assert (tmp_path / "trajectories" / "tworoom_nearest-frontier_0.steps.csv").is_file()
    again = bench.run_benchmark(cfg, tmp_path / "again", plots=False)
    assert (tmp_path / "tiers_runs.csv").read_text().count("\n") == 3
    assert [r.final_completeness for r in again.runs] == [r.final_completeness for r in report.runs]


def test_workers_do_not_change_results(tmp_path):
    cfg = RunConfig(worlds=["tworoom"], runs=3, explore=ExploreConfig(episode_length=3))
    bench.run_benchmark(cfg, tmp_path / "one", plots=False, workers=1)
    bench.run_benchmark(cfg, tmp_path / "two", plots=False, workers=2)
    for seed in range(3):
        name = f"tworoom_nearest-frontier_{seed}.steps.csv"
        assert (tmp_path / "one" / "trajectories" / name).read_bytes() == \
            (tmp_path / "two" / "trajectories" / name).read_bytes()
