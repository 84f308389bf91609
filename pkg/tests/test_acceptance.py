"""End-to-end acceptance checks; each test prints one PASS/FAIL line in the
terminal summary.  They run the shipped configs in ``configs/``."""
import math
import time
from pathlib import Path

import numpy as np
import torch

from conftest import random_belief
from mapexplore import bench
from mapexplore.config import ExploreConfig, PpoConfig, load_config
from mapexplore.frontier import BoundarySet, boundary_points
from mapexplore.nav import distance_field, plan
from mapexplore.policy import NearestFrontierStrategy, PolicyNetwork
from mapexplore.rl import gae, run_episode, train
from mapexplore.structmap import partition
from mapexplore.worlds import load_named
from mapexplore.worldsim import FREE

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_criterion_1_structured_speedup(report_criterion):
    cfg = load_config(CONFIGS / "ablate_structmap.cfg")
    (name, world), = bench.validate(cfg, strategies=[])
    assert world.cells.shape == (128, 256)
    t0 = time.perf_counter()
    rows = bench.ablate_structmap_timing(world, cfg.explore, cfg.snapshots, cfg.seed)
    elapsed = time.perf_counter() - t0
    s = bench.timing_summary(rows)
    checks = bench.timing_checks(s)
    ok = all(checks.values()) and s["final_completeness"] >= 0.95 and elapsed < 60
    report_criterion(1, ok, (
        f"{name}: median ratio {s['median_ratio']:.3f}, ratio at >=95% {s['late_ratio']:.3f} (<= 0.2); "
        f"structured spread 10-95% {s['structured_spread']:.2f}x (< 2); direct trend Spearman "
        f"{s['direct_spearman']:.2f} (>= 0.9), growth {s['direct_growth']:.2f}x; {elapsed:.0f} s"))
    assert s["final_completeness"] >= 0.95
    assert elapsed < 60
    assert checks["speedup"], s
    assert checks["structured_flat"], s
    assert checks["direct_grows"], s


def test_criterion_2_aou_direction(report_criterion):
    cfg = load_config(CONFIGS / "ablate_aou.cfg")
    worlds = bench.validate(cfg, strategies=[cfg.aou_strategy])
    rows = bench.ablate_aou(worlds, cfg.explore, cfg.run_seeds(), cfg.aou_strategy)
    s = bench.aou_summary(rows)
    ok = (len(worlds) >= 2 and s["pairs"] >= 10 and s["enabled_invalid_rate"] == 0.0
          and s["disabled_invalid_rate"] > 0.0
          and s["enabled_mean_steps_to_93"] <= s["disabled_mean_steps_to_93"])
    report_criterion(2, ok, (
        f"{s['pairs']} pairs on {len(worlds)} worlds: invalid rate on {s['enabled_invalid_rate']:.3f} / "
        f"off {s['disabled_invalid_rate']:.3f}; steps to 93% on {s['enabled_mean_steps_to_93']:.1f} / "
        f"off {s['disabled_mean_steps_to_93']:.1f}"))
    assert ok, s


def test_criterion_3_roi_trend(report_criterion):
    cfg = load_config(CONFIGS / "ablate_roi.cfg")
    worlds = bench.validate(cfg, strategies=[])
    rows = bench.ablate_roi(worlds, cfg.explore, cfg.run_seeds(), cfg.n_values)
    summary = bench.roi_summary(rows)
    comp = [s["mean_completeness"] for s in summary]
    steps = [s["mean_steps"] for s in summary]
    ok = (all(s["runs"] >= 10 for s in summary) and bench.non_increasing(comp)
          and bench.non_increasing(steps))
    detail = ", ".join(f"n={s['n']}: completeness {s['mean_completeness']:.4f}, steps {s['mean_steps']:.1f}"
                       for s in summary)
    report_criterion(3, ok, detail)
    assert ok, summary


def test_criterion_4_nearest_frontier_completeness(report_criterion):
    cfg = load_config(CONFIGS / "bench.cfg")
    report = bench.run_benchmark(cfg, None)
    failures = sum(r.failure for r in report.runs)
    slowest = max(r.wall_s for r in report.runs)
    worst = min(r.final_completeness for r in report.runs)
    per_world = {w: sum(r.world == w for r in report.runs) for w in cfg.worlds}
    ok = failures == 0 and slowest < 30 and all(v >= 10 for v in per_world.values()) and len(per_world) == 3
    report_criterion(4, ok, (f"{len(report.runs)} runs on {', '.join(per_world)}: {failures} failures, "
                             f"lowest final completeness {worst:.4f}, slowest run {slowest:.1f} s"))
    assert ok


def test_criterion_5_training_smoke(report_criterion):
    cfg = load_config(CONFIGS / "train_tworoom.cfg")
    worlds = bench.validate(cfg, strategies=[])
    t0 = time.perf_counter()
    res = train(worlds, cfg.ppo, cfg.explore, cfg.total_episodes, cfg.seed, cfg.max_updates, cfg.plateau)
    elapsed = time.perf_counter() - t0
    r = [c["reward"] for c in res.curve]
    first, last = float(np.mean(r[:20])), float(np.mean(r[-20:]))
    ok = res.updates == 200 and last > first and elapsed < 15 * 60
    report_criterion(5, ok, (f"{res.updates} updates, {len(r)} episodes: first-20 mean reward {first:.4f}, "
                             f"last-20 {last:.4f}; {elapsed:.0f} s"))
    assert ok


def test_criterion_6_oracle_equivalences(report_criterion):
    rng = np.random.default_rng(2024)
    astar_ok = 0
    for _ in range(200):
        b = random_belief(rng, 64, 64, rng.uniform(0, 0.3), rng.uniform(0.05, 0.3))
        free = np.argwhere(b.cells == FREE)
        s, g = free[rng.integers(len(free), size=2)]
        d = distance_field(b, b.cell_center(*s), 0)[tuple(g)]
        p = plan(b, b.cell_center(*s), b.cell_center(*g), 0, relax_radius=0.0)
        # lengths are a + b*sqrt(2) cells; only the summation order differs
        astar_ok += (p is None and math.isinf(d)) or (p is not None and abs(p.length - d) <= 1e-9)
    degenerate_ok = 0
    for _ in range(50):
        b = random_belief(rng, 128, 256, rng.uniform(0.2, 0.8), rng.uniform(0.0, 0.1))
        raw = boundary_points(partition(b, 4), b.origin, b.resolution)
        L = BoundarySet(n=4, r=0.1, k=1, bandwidth=1e-6).update(raw)
        degenerate_ok += {tuple(p) for p in L.tolist()} == {tuple(p) for p in raw.tolist()} \
            and len(L) == len(raw)
    recount_ok = 0
    for _ in range(50):
        h, w = (int(v) for v in rng.integers(1, 80, size=2))
        n = int(rng.integers(1, 9))
        b = random_belief(rng, h, w, rng.uniform(0, 1), rng.uniform(0, 0.3))
        roi = partition(b, n)
        ok_cell = True
        for i in range(roi.values.shape[0]):
            for j in range(roi.values.shape[1]):
                block = np.full((n, n), -1, dtype=np.int8)
                sub = b.cells[i * n:(i + 1) * n, j * n:(j + 1) * n]
                block[:sub.shape[0], :sub.shape[1]] = sub
                co, cf, cu = (int((block == v).sum()) for v in (1, 0, -1))
                ok_cell &= tuple(int(x) for x in roi.counts[:, i, j]) == (co, cf, cu)
        recount_ok += ok_cell
    ok = astar_ok == 200 and degenerate_ok == 50 and recount_ok == 50
    report_criterion(6, ok, (f"A* = Dijkstra {astar_ok}/200; degenerate pipeline {degenerate_ok}/50; "
                             f"partition recount {recount_ok}/50"))
    assert ok


def test_criterion_7_numerical_checks(report_criterion):
    from test_policy import _segment
    from mapexplore.rl import ppo_loss

    torch.manual_seed(0)
    net = PolicyNetwork(8, 8, hidden=6).double()
    rng = np.random.default_rng(7)
    segs = [_segment(rng, 3), _segment(rng, 3)]
    cfg = PpoConfig(clip_epsilon=10.0)
    loss, _ = ppo_loss(net, segs, cfg)
    params = list(net.parameters())
    grads = torch.autograd.grad(loss, params)
    worst = 0.0
    h = 1e-6
    for p, g in zip(params, grads):
        flat = p.data.view(-1)
        for idx in rng.choice(flat.numel(), size=min(4, flat.numel()), replace=False):
            orig = flat[idx].item()
            with torch.no_grad():
                flat[idx] = orig + h
                lp = ppo_loss(net, segs, cfg)[0].item()
                flat[idx] = orig - h
                lm = ppo_loss(net, segs, cfg)[0].item()
                flat[idx] = orig
            fd, an = (lp - lm) / (2 * h), g.view(-1)[idx].item()
            if abs(fd) + abs(an) > 1e-7:
                worst = max(worst, abs(fd - an) / max(abs(fd), abs(an)))

    rec = run_episode(load_named("tworoom"), bench.make_strategy("random"), ExploreConfig(episode_length=15), 11)
    prev, reward_err = rec.path[0], 0.0
    for s in rec.steps:
        expected = 0.02 * s.delta_coverage - math.hypot(s.x - prev[0], s.y - prev[1])
        reward_err = max(reward_err, abs(s.reward - expected))
        prev = (s.x, s.y)
    total_err = abs(rec.total_reward - sum(s.reward for s in rec.steps))
    coverage_ok = sum(s.delta_coverage for s in rec.steps) == rec.visited_bits[1] - rec.visited_bits[0]

    gae_err = 0.0
    for _ in range(100):
        r, v = rng.normal(size=3), rng.normal(size=3)
        gamma = rng.uniform(0.5, 1.0)
        _, ret = gae(r, v, [False, False, True], 0.0, gamma, 1.0)
        mc = [r[0] + gamma * r[1] + gamma ** 2 * r[2], r[1] + gamma * r[2], r[2]]
        gae_err = max(gae_err, float(np.max(np.abs(ret - mc))))
    ok = worst < 1e-3 and reward_err <= 1e-9 and total_err <= 1e-9 and coverage_ok and gae_err <= 1e-12
    report_criterion(7, ok, (f"gradient rel. error {worst:.2e}; reward identity error {reward_err:.1e}; "
                             f"GAE vs Monte Carlo {gae_err:.1e}"))
    assert ok


def test_criterion_8_determinism(report_criterion):
    checks = []
    for name, strategy in (("corridor", "nearest-frontier"), ("tworoom", "random"), ("multiroom", "nearest-frontier")):
        world = load_named(name)
        a = run_episode(world, bench.make_strategy(strategy), ExploreConfig(episode_length=20), 3, world_name=name)
        b = run_episode(world, bench.make_strategy(strategy), ExploreConfig(episode_length=20), 3, world_name=name)
        checks.append(a.to_csv().encode() == b.to_csv().encode())
    torch.manual_seed(5)
    net = PolicyNetwork()
    from mapexplore.policy import MapAwareStrategy

    a = run_episode(load_named("tworoom"), MapAwareStrategy(net, stochastic=True), ExploreConfig(episode_length=8), 4)
    b = run_episode(load_named("tworoom"), MapAwareStrategy(net, stochastic=True), ExploreConfig(episode_length=8), 4)
    checks.append(a.to_csv() == b.to_csv())
    ok = all(checks)
    report_criterion(8, ok, f"{sum(checks)}/{len(checks)} episode CSV pairs bitwise identical")
    assert ok
