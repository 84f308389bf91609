"""Decision layer: recurrent map-aware actor-critic, action optimisation
(projection onto boundary representatives), nearest-frontier baseline and
the checkpoint format."""
from __future__ import annotations

import enum
import io
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .belief import OccupancyBelief
from .frontier import BoundarySet
from .nav import DEFAULT_INFLATION, path_lengths_to
from .worldsim import FREE, RobotPose

LOG_STD_MIN, LOG_STD_MAX = -5.0, 1.0
HIDDEN = 32


class Provenance(str, enum.Enum):
    NETWORK_RAW = "NETWORK_RAW"
    AOU_PROJECTED = "AOU_PROJECTED"
    BASELINE = "BASELINE"


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    provenance: Provenance

    @property
    def xy(self) -> tuple[float, float]:
        return self.x, self.y


class NoValidAction(Exception):
    """No admissible target exists; drives natural termination."""


@dataclass
class DecisionState:
    observation: np.ndarray  # (3, F, G)
    prev_action: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.float32))
    prev_completeness: float = 0.0
    recurrent_state: tuple[torch.Tensor, torch.Tensor] | None = None


class PolicyNetwork(nn.Module):
    """Conv encoder -> 32-unit LSTM -> squashed Gaussian actor + value critic.

    The previous action and completeness are concatenated to the encoded
    map before the recurrent core.  Actor and critic share the trunk.
    """

    def __init__(self, F: int = 32, G: int = 64, hidden: int = HIDDEN):
        super().__init__()
        self.F, self.G, self.hidden = F, G, hidden
        self.encoder = nn.Sequential(
            nn.Conv2d(3, 8, 3, stride=2, padding=1), nn.ReLU(),
            nn.Conv2d(8, 16, 3, stride=2, padding=1), nn.ReLU(),
            nn.Flatten(),
        )
        flat = 16 * math.ceil(math.ceil(F / 2) / 2) * math.ceil(math.ceil(G / 2) / 2)
        self.project = nn.Sequential(nn.Linear(flat, hidden), nn.ReLU())
        self.core = nn.LSTMCell(hidden + 3, hidden)
        self.actor_mean = nn.Linear(hidden, 2)
        self.log_std = nn.Parameter(torch.full((2,), -0.5))
        self.critic = nn.Linear(hidden, 1)
        nn.init.orthogonal_(self.actor_mean.weight, gain=0.01)
        nn.init.zeros_(self.actor_mean.bias)
        nn.init.orthogonal_(self.critic.weight, gain=1.0)
        nn.init.zeros_(self.critic.bias)

    def initial_state(self, batch: int = 1):
        dt = self.log_std.dtype
        z = torch.zeros(batch, self.hidden, dtype=dt)
        return z, z.clone()

    def encode(self, obs: torch.Tensor) -> torch.Tensor:
        return self.project(self.encoder(obs))

    def step(self, feat: torch.Tensor, extra: torch.Tensor, state):
        """One recurrent step from pre-computed map features."""
        h, c = self.core(torch.cat([feat, extra], dim=-1), state)
        mean = self.actor_mean(h)
        log_std = self.log_std.clamp(LOG_STD_MIN, LOG_STD_MAX).expand_as(mean)
        value = self.critic(h).squeeze(-1)
        return mean, log_std, value, (h, c)

    def forward(self, obs, prev_action, prev_completeness, state):
        extra = torch.cat([prev_action, prev_completeness.reshape(-1, 1)], dim=-1)
        return self.step(self.encode(obs), extra, state)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def squashed_log_prob(pre_tanh: torch.Tensor, mean: torch.Tensor, log_std: torch.Tensor) -> torch.Tensor:
    """log pi(tanh(u)) for u ~ N(mean, std), summed over action dims."""
    var = torch.exp(2 * log_std)
    logp_u = -((pre_tanh - mean) ** 2) / (2 * var) - log_std - 0.5 * math.log(2 * math.pi)
    # log |d tanh / du| in a numerically stable form
    correction = 2 * (math.log(2) - pre_tanh - nn.functional.softplus(-2 * pre_tanh))
    return (logp_u - correction).sum(-1)


def gaussian_entropy(log_std: torch.Tensor) -> torch.Tensor:
    return (log_std + 0.5 * math.log(2 * math.pi * math.e)).sum(-1)


@dataclass
class NetworkOutput:
    action: np.ndarray
    value: float
    state: tuple[torch.Tensor, torch.Tensor]
    pre_tanh: np.ndarray
    log_prob: float


def _check_finite(net: PolicyNetwork):
    for name, p in net.named_parameters():
        if not torch.isfinite(p).all():
            raise FloatingPointError(f"non-finite parameter block {name}")


def network_forward(net: PolicyNetwork, state: DecisionState, stochastic: bool = False,
                    rng_seed: int | np.random.Generator = 0) -> NetworkOutput:
    obs = np.asarray(state.observation)
    if obs.shape != (3, net.F, net.G):
        raise ValueError(f"observation shape {obs.shape} != (3, {net.F}, {net.G})")
    _check_finite(net)
    dt = net.log_std.dtype
    rec = state.recurrent_state if state.recurrent_state is not None else net.initial_state()
    with torch.no_grad():
        mean, log_std, value, new_state = net(
            torch.as_tensor(obs, dtype=dt).unsqueeze(0),
            torch.as_tensor(np.asarray(state.prev_action), dtype=dt).reshape(1, 2),
            torch.tensor([state.prev_completeness], dtype=dt),
            rec,
        )
        if stochastic:
            rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
            eps = torch.as_tensor(rng.standard_normal(2), dtype=dt).reshape(1, 2)
            u = mean + torch.exp(log_std) * eps
        else:
            u = mean
        logp = squashed_log_prob(u, mean, log_std)
    return NetworkOutput(
        action=torch.tanh(u)[0].numpy().astype(np.float64),
        value=float(value[0]),
        state=new_state,
        pre_tanh=u[0].numpy().astype(np.float64),
        log_prob=float(logp[0]),
    )


def action_to_coords(action, origin: tuple[float, float], extent: tuple[float, float]) -> tuple[float, float]:
    """Affine map of [-1, 1]^2 onto the map rectangle (origin, width_m x height_m)."""
    a = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
    nx, ny = (a + 1.0) / 2.0
    return origin[0] + nx * extent[0], origin[1] + ny * extent[1]


def _lex_nearest_order(point, candidates: np.ndarray) -> np.ndarray:
    d = np.hypot(candidates[:, 0] - point[0], candidates[:, 1] - point[1])
    return np.lexsort((candidates[:, 1], candidates[:, 0], d))


def aou_project(raw, representatives, belief: OccupancyBelief, pose=None,
                reach_lengths: np.ndarray | None = None, inflation: int = DEFAULT_INFLATION,
                boundary: BoundarySet | None = None) -> Waypoint:
    """Keep ``raw`` if it is a FREE, reachable cell, else snap to the nearest
    reachable representative.

    ``pose`` enables the reachability screen.  A representative that is
    unreachable now may become reachable once more space is mapped, so the
    exclusion set of ``boundary`` is only updated when none is reachable.
    Without ``pose`` the raw point only needs to be FREE and the projection
    is the plain Euclidean nearest representative.
    """
    raw = (float(raw[0]), float(raw[1]))
    reps = np.asarray(representatives, dtype=float).reshape(-1, 2)
    if belief.value_at(*raw) == FREE:
        if pose is None:
            return Waypoint(*raw, Provenance.NETWORK_RAW)
        if np.isfinite(path_lengths_to(belief, _xy(pose), [raw], inflation)[0]):
            return Waypoint(*raw, Provenance.NETWORK_RAW)
    if len(reps) == 0:
        raise NoValidAction("raw target is not admissible and no boundary representatives exist")
    order = _lex_nearest_order(raw, reps)
    if pose is None:
        best = reps[order[0]]
        return Waypoint(float(best[0]), float(best[1]), Provenance.AOU_PROJECTED)
    if reach_lengths is None:
        reach_lengths = path_lengths_to(belief, _xy(pose), reps, inflation)
    for i in order:
        if np.isfinite(reach_lengths[i]):
            return Waypoint(float(reps[i, 0]), float(reps[i, 1]), Provenance.AOU_PROJECTED)
    if boundary is not None:
        for p in reps:
            boundary.excluded.add(p)
    raise NoValidAction("every boundary representative is unreachable")


def _xy(pose) -> tuple[float, float]:
    if isinstance(pose, RobotPose):
        return pose.x, pose.y
    return float(pose[0]), float(pose[1])


def nearest_frontier_baseline(pose, representatives, belief: OccupancyBelief,
                              boundary: BoundarySet | None = None,
                              inflation: int = DEFAULT_INFLATION) -> Waypoint:
    """Representative with the shortest planned path from ``pose``.

    If none is reachable, all of them go to the exclusion set and
    NoValidAction is raised.
    """
    reps = np.asarray(representatives, dtype=float).reshape(-1, 2)
    if len(reps) == 0:
        raise NoValidAction("no boundary representatives")
    lengths = path_lengths_to(belief, _xy(pose), reps, inflation)
    finite = np.isfinite(lengths)
    if not finite.any():
        if boundary is not None:
            for p in reps:
                boundary.excluded.add(p)
        raise NoValidAction("every boundary representative is unreachable")
    idx = np.flatnonzero(finite)
    best = idx[np.lexsort((reps[idx, 1], reps[idx, 0], lengths[idx]))[0]]
    return Waypoint(float(reps[best, 0]), float(reps[best, 1]), Provenance.BASELINE)


# ---------------------------------------------------------------------------
# checkpoint format
#
#   magic    4s   b"MXCK"
#   version  u8   1
#   endian   c    b"<" (all following integers and floats little-endian)
#   meta     u32 length + UTF-8 JSON (network constructor arguments)
#   nblocks  u32
#   block*:  u16 name length, name UTF-8, u8 dtype (1=float32, 2=float64),
#            u8 ndim, ndim x u32 shape, raw data in C order
# ---------------------------------------------------------------------------

MAGIC = b"MXCK"
VERSION = 1
_DTYPES = {1: np.float32, 2: np.float64}
_CODES = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}


def save_checkpoint(net: PolicyNetwork, path: str | Path, extra: dict | None = None) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<Bc", VERSION, b"<"))
    meta = json.dumps({"F": net.F, "G": net.G, "hidden": net.hidden, **(extra or {})}).encode()
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)
    blocks = net.state_dict()
    buf.write(struct.pack("<I", len(blocks)))
    for name, tensor in blocks.items():
        arr = tensor.detach().cpu().numpy()
        arr = arr.astype(arr.dtype.newbyteorder("<"), copy=False)
        raw_name = name.encode()
        buf.write(struct.pack("<H", len(raw_name)))
        buf.write(raw_name)
        buf.write(struct.pack("<BB", _CODES[np.dtype(arr.dtype.name)], arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(np.ascontiguousarray(arr).tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> tuple[PolicyNetwork, dict]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    version, endian = struct.unpack_from("<Bc", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    if endian != b"<":
        raise ValueError(f"{path}: unsupported endianness tag {endian!r}")
    off = 6
    (meta_len,) = struct.unpack_from("<I", data, off)
    off += 4
    meta = json.loads(data[off:off + meta_len])
    off += meta_len
    (nblocks,) = struct.unpack_from("<I", data, off)
    off += 4
    blocks = {}
    for _ in range(nblocks):
        (nlen,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off:off + nlen].decode()
        off += nlen
        code, ndim = struct.unpack_from("<BB", data, off)
        off += 2
        shape = struct.unpack_from(f"<{ndim}I", data, off)
        off += 4 * ndim
        dtype = np.dtype(_DTYPES[code]).newbyteorder("<")
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(data, dtype=dtype, count=count, offset=off).reshape(shape)
        off += count * dtype.itemsize
        blocks[name] = torch.from_numpy(arr.astype(dtype.newbyteorder("="), copy=True))
    net = PolicyNetwork(meta["F"], meta["G"], meta["hidden"])
    if any(b.dtype == torch.float64 for b in blocks.values()):
        net = net.double()
    net.load_state_dict(blocks)
    return net, meta


# ---------------------------------------------------------------------------
# strategies: one decision interface for the episode loop
# ---------------------------------------------------------------------------

@dataclass
class DecisionContext:
    belief: OccupancyBelief
    pose: RobotPose
    observation: np.ndarray
    representatives: np.ndarray
    boundary: BoundarySet
    prev_action: np.ndarray
    prev_completeness: float
    rng: np.random.Generator
    inflation: int = DEFAULT_INFLATION


@dataclass
class Decision:
    raw: tuple[float, float] | None = None
    waypoint: Waypoint | None = None
    action: np.ndarray | None = None
    pre_tanh: np.ndarray | None = None
    log_prob: float = 0.0
    value: float = 0.0
    recurrent_before: tuple | None = None


class Strategy:
    name = "strategy"
    #: raw targets are post-processed by the action optimisation unit
    raw_output = True

    def reset(self) -> None:
        pass

    def decide(self, ctx: DecisionContext) -> Decision:
        raise NotImplementedError

    def commit(self, decision: Decision) -> None:
        """Called once the decision has been executed (or consumed)."""


class MapAwareStrategy(Strategy):
    name = "map-aware"

    def __init__(self, net: PolicyNetwork, stochastic: bool = False):
        self.net = net
        self.stochastic = stochastic
        self.state = None
        self._pending = None

    def reset(self):
        self.state = self.net.initial_state()

    def decide(self, ctx: DecisionContext) -> Decision:
        before = self.state
        out = network_forward(self.net, DecisionState(ctx.observation, ctx.prev_action,
                                                      ctx.prev_completeness, before),
                              stochastic=self.stochastic, rng_seed=ctx.rng)
        self._pending = out.state
        raw = action_to_coords(out.action, ctx.belief.origin, ctx.belief.extent)
        return Decision(raw=raw, action=out.action, pre_tanh=out.pre_tanh, log_prob=out.log_prob,
                        value=out.value, recurrent_before=before)

    def commit(self, decision: Decision):
        self.state = self._pending

    def value_of(self, ctx: DecisionContext) -> float:
        out = network_forward(self.net, DecisionState(ctx.observation, ctx.prev_action,
                                                      ctx.prev_completeness, self.state))
        return out.value


class RandomStrategy(Strategy):
    """Uniform actions over the map; the scripted policy used by ablations."""

    name = "random"

    def decide(self, ctx: DecisionContext) -> Decision:
        a = ctx.rng.uniform(-1.0, 1.0, size=2)
        return Decision(raw=action_to_coords(a, ctx.belief.origin, ctx.belief.extent), action=a)


class ConstantStrategy(Strategy):
    name = "constant"

    def __init__(self, action=(1.0, 1.0)):
        self.a = np.asarray(action, dtype=float)

    def decide(self, ctx: DecisionContext) -> Decision:
        return Decision(raw=action_to_coords(self.a, ctx.belief.origin, ctx.belief.extent), action=self.a)


class NearestFrontierStrategy(Strategy):
    name = "nearest-frontier"
    raw_output = False

    def decide(self, ctx: DecisionContext) -> Decision:
        wp = nearest_frontier_baseline(ctx.pose, ctx.representatives, ctx.belief, ctx.boundary,
                                       ctx.inflation)
        return Decision(waypoint=wp)
