"""Episode loop, coverage/smoothness reward and recurrent PPO training."""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from . import structmap
from .belief import UNKNOWN, OccupancyBelief, completeness, explorable_mask, integrate_scan
from .config import ExploreConfig, PpoConfig
from .frontier import BoundarySet, boundary_points
from .nav import path_lengths_to, plan, traversable
from .policy import (
    DecisionContext,
    MapAwareStrategy,
    NoValidAction,
    PolicyNetwork,
    Provenance,
    Strategy,
    Waypoint,
    aou_project,
    gaussian_entropy,
    save_checkpoint,
    squashed_log_prob,
)
from .worldsim import OCCUPIED, CollisionError, RobotPose, SensorModel, WorldMap, raycast, traverse

log = logging.getLogger(__name__)


class Terminal(str, enum.Enum):
    COMPLETE = "COMPLETE"
    NO_FRONTIERS = "NO_FRONTIERS"
    STEP_LIMIT = "STEP_LIMIT"
    FAILURE = "FAILURE"


def compute_reward(delta_coverage: float, waypoint_t, waypoint_prev, mu: float = 0.02) -> float:
    """Coverage gain minus the jump between consecutive waypoints."""
    if delta_coverage < 0:
        raise ValueError("delta_coverage must be >= 0")
    jump = math.hypot(waypoint_t[0] - waypoint_prev[0], waypoint_t[1] - waypoint_prev[1])
    return mu * delta_coverage - jump


@dataclass
class StepRecord:
    step: int
    x: float
    y: float
    provenance: str
    valid: bool
    reward: float
    delta_coverage: int
    completeness: float
    distance_m: float  # cumulative
    time_s: float  # cumulative


@dataclass
class Transition:
    observation: np.ndarray
    prev_action: np.ndarray
    prev_completeness: float
    pre_tanh: np.ndarray
    log_prob: float
    value: float
    reward: float
    done: bool


@dataclass
class EpisodeRecord:
    world: str
    seed: int
    steps: list[StepRecord] = field(default_factory=list)
    # (time_s, distance_m, completeness) after every scan
    timeline: list[tuple[float, float, float]] = field(default_factory=list)
    terminal: Terminal = Terminal.STEP_LIMIT
    transitions: list[Transition] = field(default_factory=list)
    bootstrap_value: float = 0.0
    visited_bits: tuple[int, int] = (0, 0)
    invalid_decisions: int = 0
    final_belief: OccupancyBelief | None = None
    path: list[tuple[float, float]] = field(default_factory=list)

    @property
    def total_reward(self) -> float:
        return float(sum(s.reward for s in self.steps))

    @property
    def final_completeness(self) -> float:
        return self.timeline[-1][2] if self.timeline else 0.0

    @property
    def distance(self) -> float:
        return self.timeline[-1][1] if self.timeline else 0.0

    @property
    def elapsed(self) -> float:
        return self.timeline[-1][0] if self.timeline else 0.0

    def steps_to(self, level: float) -> int | None:
        for s in self.steps:
            if s.completeness >= level:
                return s.step + 1
        if self.timeline and self.timeline[0][2] >= level:
            return 0
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "x", "y", "provenance", "valid", "reward", "delta_coverage",
                    "completeness", "distance_m", "time_s"])
        for s in self.steps:
            w.writerow([s.step, repr(s.x), repr(s.y), s.provenance, int(s.valid), repr(s.reward),
                        s.delta_coverage, repr(s.completeness), repr(s.distance_m), repr(s.time_s)])
        w.writerow(["terminal", self.terminal.value, "", "", "", "", "", "", "", ""])
        return buf.getvalue()


def sensor_model(cfg: ExploreConfig) -> SensorModel:
    return SensorModel(math.radians(cfg.fov_deg), cfg.max_range, cfg.beam_count, cfg.noise_sigma)


def choose_start(world: WorldMap, seed: int, clearance: int = 3) -> tuple[float, float]:
    """Seeded random FREE cell centre at least ``clearance`` cells from obstacles."""
    belief = OccupancyBelief(world.height_cells, world.width_cells, world.resolution, world.origin,
                             world.cells.astype(np.int8))
    ok = traversable(belief, clearance)
    if world.start is not None:
        # stay in the component of the declared start
        from scipy import ndimage

        labels, _ = ndimage.label(ok)
        r, c = world.cell_of(*world.start)
        if labels[r, c]:
            ok = labels == labels[r, c]
    rows, cols = np.nonzero(ok)
    if rows.size == 0:
        raise ValueError("world has no cell with the requested clearance")
    i = int(np.random.default_rng([seed, 7919]).integers(rows.size))
    return world.cell_center(int(rows[i]), int(cols[i]))


def _scan_poses(path: Sequence[tuple[float, float]], start_heading: float, spacing: float):
    """Poses along ``path`` every ``spacing`` metres plus the final waypoint.

    Yields (pose, cumulative_distance)."""
    heading = start_heading
    acc = 0.0
    since = 0.0
    for a, b in zip(path, path[1:]):
        seg = math.hypot(b[0] - a[0], b[1] - a[1])
        if seg > 0:
            heading = math.atan2(b[1] - a[1], b[0] - a[0])
        acc += seg
        since += seg
        if since >= spacing - 1e-9 and b != path[-1]:
            since = 0.0
            yield RobotPose(b[0], b[1], heading), acc
    yield RobotPose(path[-1][0], path[-1][1], heading), acc


def _look_point(belief: OccupancyBelief, target, radius: float) -> tuple[float, float]:
    """Mean of the UNKNOWN cell centres within ``radius`` of ``target``.

    Boundary points are ROI corners, so the target alone says little about
    which way the unexplored side lies."""
    r, c = belief.cell_of(*target)
    span = int(math.ceil(radius / belief.resolution))
    r0, r1 = max(0, r - span), min(belief.height, r + span + 1)
    c0, c1 = max(0, c - span), min(belief.width, c + span + 1)
    if r0 >= r1 or c0 >= c1:
        return target
    rr, cc = np.nonzero(belief.cells[r0:r1, c0:c1] == UNKNOWN)
    if rr.size == 0:
        return target
    xs = belief.origin[0] + (cc + c0 + 0.5) * belief.resolution
    ys = belief.origin[1] + (rr + r0 + 0.5) * belief.resolution
    near = np.hypot(xs - target[0], ys - target[1]) <= radius
    if not near.any():
        return target
    return float(xs[near].mean()), float(ys[near].mean())


class Episode:
    """Mutable state of one exploration run."""

    def __init__(self, world: WorldMap, cfg: ExploreConfig, seed: int, start=None, world_name: str = "",
                 on_scan=None):
        self.world = world
        self.on_scan = on_scan
        self.cfg = cfg
        self.seed = seed
        if start is None:
            start = choose_start(world, seed, cfg.inflation + 1) if cfg.random_start or world.start is None \
                else world.start
        r, c = world.cell_of(*start)
        start = world.cell_center(r, c)
        rng = np.random.default_rng([seed, 1])
        self.pose = RobotPose(start[0], start[1], float(rng.uniform(-math.pi, math.pi)))
        self.sensor = sensor_model(cfg)
        self.belief = OccupancyBelief.for_world(world)
        self.mask = explorable_mask(world, start)
        self.boundary = BoundarySet(cfg.n, world.resolution, cfg.R, cfg.k, cfg.bandwidth)
        self.scan_count = 0
        # cells the robot has physically occupied are known to be free
        self.protected = np.zeros(world.cells.shape, dtype=bool)
        self.protected[r, c] = True
        self.distance = 0.0
        self.time = 0.0
        self.record = EpisodeRecord(world_name, seed)
        self.record.path.append((self.pose.x, self.pose.y))
        self.scan(self.pose)
        self.roi = structmap.partition(self.belief, cfg.n, cfg.alpha, cfg.beta)
        self.visited = structmap.update_visited(np.zeros(self.roi.shape, dtype=np.uint8), self.roi)
        self.initial_bits = int(self.visited.sum())

    def scan(self, pose: RobotPose) -> float:
        s = raycast(self.world, pose, self.sensor, rng_seed=(self.seed * 1_000_003 + self.scan_count) % 2**32)
        self.scan_count += 1
        integrate_scan(self.belief, s, self.protected)
        comp = completeness(self.belief, self.world, mask=self.mask)
        self.record.timeline.append((self.time, self.distance, comp))
        if self.on_scan is not None:
            self.on_scan(self)
        return comp

    @property
    def completeness(self) -> float:
        return self.record.timeline[-1][2]

    def observation(self) -> np.ndarray:
        cfg = self.cfg
        F, G = self.roi.shape
        i, j = structmap.robot_roi_index(self.pose.x, self.pose.y, self.belief.origin, cfg.n,
                                         self.belief.resolution)
        mask = structmap.pose_mask((min(i, F - 1), min(j, G - 1)), cfg.lam, F, G)
        return structmap.fit_to(structmap.assemble(self.roi, self.visited, mask), cfg.F, cfg.G)

    def refresh_boundaries(self) -> np.ndarray:
        """Run the boundary pipeline on the current ROI grid; returns L.

        If the density screen leaves nothing, isolated boundary points
        (k=1) are used instead: a small, half-seen room yields only one or
        two boundary ROIs.
        """
        pts = boundary_points(self.roi, self.belief.origin, self.belief.resolution)
        reps = self.boundary.update(pts)
        if len(reps) == 0 and self.cfg.k > 1:
            reps = self.boundary.update(pts, k=1)
        return reps

    def prune_unreachable(self) -> np.ndarray:
        """Exclude every feasible boundary point the planner cannot reach; recompute L."""
        feas = self.boundary.feasible
        if len(feas):
            lengths = path_lengths_to(self.belief, (self.pose.x, self.pose.y), feas, self.cfg.inflation)
            for p in feas[~np.isfinite(lengths)]:
                self.boundary.excluded.add(p)
        return self.refresh_boundaries()

    def execute(self, path, target: tuple[float, float]) -> None:
        """Drive along a planned path, scanning every ``scan_spacing`` metres.

        The final scan faces the unknown cells around ``target`` (or the
        target itself when none are left).
        """
        pts = path.waypoints
        _, _, dist = traverse(self.world, self.pose, pts, self.cfg.speed)
        for r, c in path.cells:
            self.protected[r, c] = True
        t0, d0 = self.time, self.distance
        poses = list(_scan_poses([(self.pose.x, self.pose.y), *pts], self.pose.heading, self.cfg.scan_spacing))
        last, acc_last = poses[-1]
        look = _look_point(self.belief, target, self.cfg.R)
        dx, dy = look[0] - last.x, look[1] - last.y
        if math.hypot(dx, dy) > 1e-9:
            poses[-1] = (RobotPose(last.x, last.y, math.atan2(dy, dx)), acc_last)
        for pose, acc in poses:
            self.distance = d0 + acc
            self.time = t0 + acc / self.cfg.speed
            self.pose = pose
            self.scan(pose)
            self.record.path.append((pose.x, pose.y))
        self.distance = d0 + dist
        self.time = t0 + dist / self.cfg.speed

    def update_structure(self) -> int:
        """Re-partition the belief; returns the number of newly visited ROIs."""
        self.roi = structmap.partition(self.belief, self.cfg.n, self.cfg.alpha, self.cfg.beta)
        new_visited = structmap.update_visited(self.visited, self.roi)
        gained = int(new_visited.sum() - self.visited.sum())
        self.visited = new_visited
        return gained


def run_episode(world: WorldMap, strategy: Strategy, cfg: ExploreConfig | None = None, rng_seed: int = 0,
                start=None, world_name: str = "", on_scan=None) -> EpisodeRecord:
    """One exploration episode; deterministic given (world, strategy parameters, seed).

    ``on_scan(episode)`` is called after every integrated scan.
    """
    cfg = cfg or ExploreConfig()
    ep = Episode(world, cfg, rng_seed, start, world_name, on_scan)
    rec = ep.record
    rng = np.random.default_rng([rng_seed, 2])
    strategy.reset()
    prev_wp = (ep.pose.x, ep.pose.y)
    prev_action = np.zeros(2)
    prev_comp = ep.completeness
    consecutive_failures = 0
    rec.terminal = Terminal.STEP_LIMIT
    is_network = isinstance(strategy, MapAwareStrategy)

    for step in range(cfg.episode_length):
        if ep.completeness >= cfg.complete_threshold:
            rec.terminal = Terminal.COMPLETE
            break
        reps = ep.refresh_boundaries()
        if len(reps) == 0:
            rec.terminal = Terminal.NO_FRONTIERS
            break
        ctx = DecisionContext(ep.belief, ep.pose, ep.observation(), reps, ep.boundary, prev_action,
                              prev_comp, rng, cfg.inflation)
        ep.time += cfg.decision_cost
        try:
            decision, wp = _choose(strategy, ctx, ep, cfg)
        except NoValidAction:
            # drop every unreachable boundary point, then ask once more
            reps = ep.prune_unreachable()
            ctx.representatives = reps
            try:
                if len(reps) == 0:
                    raise NoValidAction("no boundary representatives left")
                decision, wp = _choose(strategy, ctx, ep, cfg)
            except NoValidAction:
                ep.time -= cfg.decision_cost
                rec.terminal = Terminal.NO_FRONTIERS
                break

        strategy.commit(decision)
        path = plan(ep.belief, (ep.pose.x, ep.pose.y), wp.xy, cfg.inflation)
        valid = path is not None
        if valid:
            seen_before = ep.belief.unknown_count
            try:
                ep.execute(path, wp.xy)
            except CollisionError as exc:
                # the belief claimed free space that is not there: record the contact
                ep.belief.cells[exc.cell] = OCCUPIED
                ep.belief._recount()
                valid = False
        if valid:
            consecutive_failures = 0
            if ep.belief.unknown_count == seen_before:
                # nothing new from this target: treat it as a dead end
                ep.boundary.mark_unreachable(wp.xy)
        else:
            ep.boundary.mark_unreachable(wp.xy)
            rec.invalid_decisions += 1
            consecutive_failures += 1
            rec.timeline.append((ep.time, ep.distance, ep.completeness))
        gained = ep.update_structure()
        reward = compute_reward(gained, wp.xy, prev_wp, cfg.mu)
        comp = ep.completeness
        rec.steps.append(StepRecord(step, wp.x, wp.y, wp.provenance.value, valid, reward, gained, comp,
                                    ep.distance, ep.time))
        if is_network and decision.pre_tanh is not None:
            rec.transitions.append(Transition(ctx.observation, np.asarray(prev_action, dtype=np.float32),
                                              prev_comp, decision.pre_tanh, decision.log_prob,
                                              decision.value, reward, False))
        prev_wp = wp.xy
        if decision.action is not None:
            prev_action = np.asarray(decision.action, dtype=float)
        prev_comp = comp
        if consecutive_failures >= cfg.max_retries:
            rec.terminal = Terminal.FAILURE
            break
    else:
        if ep.completeness >= cfg.complete_threshold:
            rec.terminal = Terminal.COMPLETE

    if rec.transitions:
        if rec.terminal == Terminal.STEP_LIMIT:
            ctx = DecisionContext(ep.belief, ep.pose, ep.observation(), np.zeros((0, 2)), ep.boundary,
                                  prev_action, prev_comp, rng, cfg.inflation)
            rec.bootstrap_value = strategy.value_of(ctx)
        rec.transitions[-1].done = rec.terminal != Terminal.STEP_LIMIT
    rec.visited_bits = (ep.initial_bits, int(ep.visited.sum()))
    rec.final_belief = ep.belief
    return rec


def _choose(strategy: Strategy, ctx: DecisionContext, ep: Episode, cfg: ExploreConfig):
    decision = strategy.decide(ctx)
    if decision.waypoint is not None:
        return decision, decision.waypoint
    if cfg.use_aou:
        wp = aou_project(decision.raw, ctx.representatives, ep.belief, ep.pose, inflation=cfg.inflation,
                         boundary=ep.boundary)
        return decision, wp
    return decision, Waypoint(decision.raw[0], decision.raw[1], Provenance.NETWORK_RAW)


# ---------------------------------------------------------------------------
# PPO
# ---------------------------------------------------------------------------

def gae(rewards, values, dones, last_value: float, gamma: float, lam: float):
    """Generalised advantage estimates and value targets for one trajectory."""
    T = len(rewards)
    adv = np.zeros(T)
    next_value = last_value
    running = 0.0
    for t in reversed(range(T)):
        nonterminal = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        running = delta + gamma * lam * nonterminal * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + np.asarray(values, dtype=float)


@dataclass
class Segment:
    """One episode's transitions with advantages, replayed through the LSTM."""

    observations: np.ndarray
    prev_actions: np.ndarray
    prev_completeness: np.ndarray
    pre_tanh: np.ndarray
    old_log_prob: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray


def make_segment(rec: EpisodeRecord, cfg: PpoConfig) -> Segment:
    tr = rec.transitions
    adv, ret = gae([t.reward for t in tr], [t.value for t in tr], [t.done for t in tr],
                   rec.bootstrap_value, cfg.gamma, cfg.gae_lambda)
    return Segment(
        np.stack([t.observation for t in tr]).astype(np.float32),
        np.stack([t.prev_action for t in tr]).astype(np.float32),
        np.array([t.prev_completeness for t in tr], dtype=np.float32),
        np.stack([t.pre_tanh for t in tr]),
        np.array([t.log_prob for t in tr]),
        adv,
        ret,
    )


def replay(net: PolicyNetwork, seg: Segment):
    """Re-run the recurrent policy over a stored segment from a zero state."""
    dt = net.log_std.dtype
    obs = torch.as_tensor(seg.observations, dtype=dt)
    extra = torch.cat([torch.as_tensor(seg.prev_actions, dtype=dt),
                       torch.as_tensor(seg.prev_completeness, dtype=dt).reshape(-1, 1)], dim=-1)
    feats = net.encode(obs)
    state = net.initial_state()
    means, log_stds, values = [], [], []
    for t in range(obs.shape[0]):
        m, ls, v, state = net.step(feats[t:t + 1], extra[t:t + 1], state)
        means.append(m)
        log_stds.append(ls)
        values.append(v)
    return torch.cat(means), torch.cat(log_stds), torch.cat(values)


def ppo_loss(net: PolicyNetwork, segments: Sequence[Segment], cfg: PpoConfig, normalize: bool = True):
    dt = net.log_std.dtype
    logps, vals, ents = [], [], []
    for seg in segments:
        mean, log_std, value = replay(net, seg)
        logps.append(squashed_log_prob(torch.as_tensor(seg.pre_tanh, dtype=dt), mean, log_std))
        vals.append(value)
        ents.append(gaussian_entropy(log_std))
    logp = torch.cat(logps)
    value = torch.cat(vals)
    entropy = torch.cat(ents)
    old = torch.as_tensor(np.concatenate([s.old_log_prob for s in segments]), dtype=dt)
    adv = torch.as_tensor(np.concatenate([s.advantages for s in segments]), dtype=dt)
    ret = torch.as_tensor(np.concatenate([s.returns for s in segments]), dtype=dt)
    if normalize and adv.numel() > 1 and adv.std() > 1e-8:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    ratio = torch.exp(logp - old)
    eps = cfg.clip_epsilon
    surrogate = torch.min(ratio * adv, torch.clamp(ratio, 1 - eps, 1 + eps) * adv)
    actor_loss = -surrogate.mean()
    critic_loss = 0.5 * ((value - ret) ** 2).mean()
    ent = entropy.mean()
    total = actor_loss + cfg.value_coeff * critic_loss - cfg.entropy_coeff * ent
    with torch.no_grad():
        stats = {
            "actor_loss": actor_loss.item(),
            "critic_loss": critic_loss.item(),
            "entropy": ent.item(),
            "approx_kl": (old - logp).mean().item(),
            "clip_fraction": ((ratio - 1).abs() > eps).float().mean().item(),
        }
    return total, stats


def ppo_update(net: PolicyNetwork, segments: Sequence[Segment], cfg: PpoConfig,
               optimizer: torch.optim.Optimizer | None = None):
    """Clipped-surrogate PPO epochs over full episode segments."""
    if not segments:
        raise ValueError("ppo_update needs a non-empty batch")
    if optimizer is None:
        optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    stats = {}
    for _ in range(cfg.epochs_per_batch):
        loss, stats = ppo_loss(net, segments, cfg)
        if not torch.isfinite(loss):
            _raise_non_finite(net, segments, cfg)
        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(net.parameters(), cfg.max_grad_norm)
        optimizer.step()
        stats["loss"] = loss.item()
    return net, stats


def _raise_non_finite(net, segments, cfg):
    for i, seg in enumerate(segments):
        for t in range(len(seg.advantages)):
            one = Segment(seg.observations[:t + 1], seg.prev_actions[:t + 1], seg.prev_completeness[:t + 1],
                          seg.pre_tanh[:t + 1], seg.old_log_prob[:t + 1], seg.advantages[:t + 1],
                          seg.returns[:t + 1])
            loss, _ = ppo_loss(net, [one], cfg, normalize=False)
            if not torch.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite PPO loss at segment {i} step {t}: pre_tanh={seg.pre_tanh[t]}, "
                    f"old_log_prob={seg.old_log_prob[t]}, advantage={seg.advantages[t]}, "
                    f"return={seg.returns[t]}, obs range=({seg.observations[t].min()}, "
                    f"{seg.observations[t].max()})")
    raise FloatingPointError("non-finite PPO loss (batch statistics)")


# ---------------------------------------------------------------------------
# training harness
# ---------------------------------------------------------------------------

CURVE_HEADER = ["episode", "steps", "reward", "completeness", "distance_m", "time_s", "terminal"]


def plateaued(rewards: Sequence[float], window: int = 50, rel_tol: float = 0.01) -> bool:
    """True at a window boundary when the last window's mean moved < rel_tol
    relative to the previous window's mean."""
    n = len(rewards)
    if n < 2 * window or n % window:
        return False
    last = float(np.mean(rewards[n - window:]))
    prev = float(np.mean(rewards[n - 2 * window:n - window]))
    return abs(last - prev) <= rel_tol * max(abs(prev), 1e-12)


@dataclass
class TrainResult:
    net: PolicyNetwork
    curve: list[dict]
    updates: int
    stats: list[dict]

    def curve_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, CURVE_HEADER, lineterminator="\n")
        w.writeheader()
        for row in self.curve:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def train(worlds: Sequence[tuple[str, WorldMap]], ppo: PpoConfig | None = None,
          explore: ExploreConfig | None = None, total_episodes: int = 1000, rng_seed: int = 0,
          max_updates: int = 0, plateau: bool = True, out_dir: str | Path | None = None,
          checkpoint_every: int = 20) -> TrainResult:
    """Alternate stochastic rollouts and PPO updates.

    Stops after ``total_episodes`` episodes, ``max_updates`` updates (if > 0)
    or when the reward curve plateaus.
    """
    if not worlds:
        raise ValueError("train needs at least one world")
    ppo = ppo or PpoConfig()
    explore = explore or ExploreConfig()
    torch.manual_seed(rng_seed)
    net = PolicyNetwork(explore.F, explore.G)
    opt = torch.optim.Adam(net.parameters(), lr=ppo.learning_rate)
    strategy = MapAwareStrategy(net, stochastic=True)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(net, out / "checkpoint_0000.mxck")
    curve, stats_log, rewards = [], [], []
    batch: list[Segment] = []
    batch_len = 0
    updates = 0
    episode = 0
    while episode < total_episodes:
        name, world = worlds[episode % len(worlds)]
        rec = run_episode(world, strategy, explore, rng_seed=rng_seed * 1_000_003 + episode, world_name=name)
        curve.append({"episode": episode, "steps": len(rec.steps), "reward": rec.total_reward,
                      "completeness": rec.final_completeness, "distance_m": rec.distance,
                      "time_s": rec.elapsed, "terminal": rec.terminal.value})
        rewards.append(rec.total_reward)
        episode += 1
        if rec.transitions:
            batch.append(make_segment(rec, ppo))
            batch_len += len(rec.transitions)
        if batch_len >= ppo.batch_size:
            _, st = ppo_update(net, batch, ppo, opt)
            updates += 1
            st["update"] = updates
            stats_log.append(st)
            batch, batch_len = [], 0
            if out is not None and updates % checkpoint_every == 0:
                save_checkpoint(net, out / f"checkpoint_{updates:04d}.mxck")
            if max_updates and updates >= max_updates:
                break
        if plateau and plateaued(rewards):
            log.info("reward plateau after %d episodes", episode)
            break
    result = TrainResult(net, curve, updates, stats_log)
    if out is not None:
        save_checkpoint(net, out / "checkpoint_final.mxck")
        (out / "reward_curve.csv").write_text(result.curve_csv())
    return result
