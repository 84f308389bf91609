import math
import struct

import numpy as np
import pytest
import torch

from conftest import belief_from_rows
from mapexplore.config import PpoConfig
from mapexplore.frontier import BoundarySet
from mapexplore.policy import (
    MAGIC,
    DecisionState,
    NoValidAction,
    PolicyNetwork,
    Provenance,
    action_to_coords,
    aou_project,
    load_checkpoint,
    nearest_frontier_baseline,
    network_forward,
    save_checkpoint,
    squashed_log_prob,
)
from mapexplore.rl import Segment, ppo_loss


def _obs(rng, F=32, G=64):
    return rng.integers(-1, 2, size=(3, F, G)).astype(np.float32)


def test_network_output_shape_range_and_determinism():
    torch.manual_seed(0)
    net = PolicyNetwork()
    obs = _obs(np.random.default_rng(0))
    a = network_forward(net, DecisionState(obs))
    b = network_forward(net, DecisionState(obs))
    assert a.action.shape == (2,) and np.all(np.abs(a.action) <= 1)
    assert np.array_equal(a.action, b.action) and a.value == b.value
    s1 = network_forward(net, DecisionState(obs), stochastic=True, rng_seed=3)
    s2 = network_forward(net, DecisionState(obs), stochastic=True, rng_seed=3)
    assert np.array_equal(s1.action, s2.action)


def test_zero_input_gives_finite_outputs():
    net = PolicyNetwork()
    out = network_forward(net, DecisionState(np.zeros((3, 32, 64), dtype=np.float32)))
    assert np.isfinite(out.action).all() and math.isfinite(out.value) and math.isfinite(out.log_prob)


def test_bad_observation_shape():
    with pytest.raises(ValueError):
        network_forward(PolicyNetwork(), DecisionState(np.zeros((3, 8, 8))))


def test_non_finite_weights_rejected():
    net = PolicyNetwork()
    with torch.no_grad():
        net.critic.bias.fill_(float("nan"))
    with pytest.raises(FloatingPointError):
        network_forward(net, DecisionState(np.zeros((3, 32, 64), dtype=np.float32)))


@pytest.mark.parametrize("action,expected", [
    ((-1, -1), (0.0, 0.0)),
    ((1, 1), (25.6, 12.8)),
    ((0, 0), (12.8, 6.4)),
    ((1, -1), (25.6, 0.0)),
    ((3, -7), (25.6, 0.0)),
])
def test_action_to_coords_examples(action, expected):
    x, y = action_to_coords(action, (0.0, 0.0), (25.6, 12.8))
    assert math.isclose(x, expected[0], abs_tol=1e-12) and math.isclose(y, expected[1], abs_tol=1e-12)


def test_action_to_coords_with_origin():
    assert action_to_coords((0, 0), (-5.0, 2.0), (10.0, 4.0)) == (0.0, 4.0)


ROOM = ["#########",
        "#.......#",
        "#.......#",
        "#??????.#",
        "#########"]


def test_aou_keeps_free_raw_target():
    b = belief_from_rows(ROOM)
    wp = aou_project((0.35, 0.15), [(0.55, 0.35)], b)
    assert wp.provenance == Provenance.NETWORK_RAW and wp.xy == (0.35, 0.15)


def test_aou_projects_to_nearest_representative():
    b = belief_from_rows(ROOM)
    reps = [(0.15, 0.25), (0.65, 0.25)]
    wp = aou_project((0.25, 0.35), reps, b)
    assert wp.provenance == Provenance.AOU_PROJECTED and wp.xy == (0.15, 0.25)
    # projecting the projection is idempotent
    assert aou_project(wp.xy, reps, b).xy == wp.xy


def test_aou_without_representatives():
    with pytest.raises(NoValidAction):
        aou_project((0.35, 0.35), [], belief_from_rows(ROOM))


def test_aou_reachability_screen():
    b = belief_from_rows(["#########", "#...#...#", "#########"])
    reps = [(0.65, 0.15), (0.25, 0.15)]
    wp = aou_project((0.55, 0.15), reps, b, pose=(0.15, 0.15), inflation=0)
    assert wp.xy == (0.25, 0.15)
    bs = BoundarySet()
    with pytest.raises(NoValidAction):
        aou_project((0.55, 0.15), [(0.65, 0.15)], b, pose=(0.15, 0.15), inflation=0, boundary=bs)
    assert len(bs.excluded) == 1


def test_nearest_frontier_examples():
    b = belief_from_rows(["#########", "#.......#", "#########"])
    reps = [(0.75, 0.15), (0.35, 0.15)]
    wp = nearest_frontier_baseline((0.15, 0.15), reps, b, inflation=0)
    assert wp.provenance == Provenance.BASELINE and wp.xy == (0.35, 0.15)
    with pytest.raises(NoValidAction):
        nearest_frontier_baseline((0.15, 0.15), [], b)


def test_nearest_frontier_all_unreachable_fills_exclusion_set():
    b = belief_from_rows(["##############", "#...#........#", "##############"])
    bs = BoundarySet()
    with pytest.raises(NoValidAction):
        nearest_frontier_baseline((0.15, 0.15), [(0.55, 0.15), (1.15, 0.15)], b, bs, inflation=0)
    assert len(bs.excluded) == 2


# ---------------------------------------------------------------- PPO maths

def _segment(rng, T, F=8, G=8):
    return Segment(
        rng.integers(-1, 2, size=(T, 3, F, G)).astype(np.float32),
        rng.uniform(-1, 1, size=(T, 2)).astype(np.float32),
        rng.uniform(0, 1, size=T).astype(np.float32),
        rng.normal(size=(T, 2)),
        rng.normal(-2, 0.5, size=T),
        rng.normal(size=T),
        rng.normal(size=T),
    )


def test_ppo_loss_gradient_matches_finite_differences():
    torch.manual_seed(0)
    net = PolicyNetwork(8, 8, hidden=6).double()
    rng = np.random.default_rng(0)
    segs = [_segment(rng, 4), _segment(rng, 3)]
    cfg = PpoConfig(clip_epsilon=10.0)  # keep the surrogate smooth around the probe points
    loss, _ = ppo_loss(net, segs, cfg)
    params = list(net.parameters())
    grads = torch.autograd.grad(loss, params)
    h = 1e-6
    checked = 0
    for p, g in zip(params, grads):
        flat = p.data.view(-1)
        for idx in rng.choice(flat.numel(), size=min(3, flat.numel()), replace=False):
            orig = flat[idx].item()
            with torch.no_grad():
                flat[idx] = orig + h
                lp = ppo_loss(net, segs, cfg)[0].item()
                flat[idx] = orig - h
                lm = ppo_loss(net, segs, cfg)[0].item()
                flat[idx] = orig
            fd = (lp - lm) / (2 * h)
            an = g.view(-1)[idx].item()
            if abs(fd) + abs(an) > 1e-7:
                assert abs(fd - an) / max(abs(fd), abs(an)) < 1e-3
                checked += 1
    assert checked > 10


def test_clipped_ratio_has_zero_actor_gradient():
    torch.manual_seed(1)
    net = PolicyNetwork(8, 8, hidden=6).double()
    rng = np.random.default_rng(1)
    seg = _segment(rng, 1)
    cfg = PpoConfig(clip_epsilon=0.2, value_coeff=0.0, entropy_coeff=0.0)
    from mapexplore.rl import replay

    with torch.no_grad():
        mean, log_std, _ = replay(net, seg)
        logp = squashed_log_prob(torch.as_tensor(seg.pre_tanh), mean, log_std).item()
    seg.old_log_prob = np.array([logp - math.log(1 + 2 * cfg.clip_epsilon)])
    seg.advantages = np.array([1.0])
    loss, stats = ppo_loss(net, [seg], cfg, normalize=False)
    assert stats["clip_fraction"] == 1.0
    grads = torch.autograd.grad(loss, list(net.parameters()), allow_unused=True)
    assert all(g is None or torch.count_nonzero(g) == 0 for g in grads)
    # inside the trust region the gradient is non-zero
    seg.old_log_prob = np.array([logp])
    loss, _ = ppo_loss(net, [seg], cfg, normalize=False)
    grads = torch.autograd.grad(loss, list(net.parameters()), allow_unused=True)
    assert any(g is not None and torch.count_nonzero(g) > 0 for g in grads)


def test_squashed_log_prob_matches_change_of_variables():
    rng = np.random.default_rng(2)
    for _ in range(20):
        u = rng.normal(size=2) * 2
        m = rng.normal(size=2)
        ls = rng.uniform(-2, 0.5, size=2)
        s = np.exp(ls)
        oracle = np.sum(-0.5 * ((u - m) / s) ** 2 - np.log(s) - 0.5 * np.log(2 * np.pi)
                        - np.log(1 - np.tanh(u) ** 2))
        got = squashed_log_prob(torch.tensor(u), torch.tensor(m), torch.tensor(ls)).item()
        assert abs(got - oracle) < 1e-9


# ---------------------------------------------------------------- checkpoints

def test_checkpoint_round_trip(tmp_path):
    torch.manual_seed(3)
    net = PolicyNetwork()
    save_checkpoint(net, tmp_path / "a.mxck", {"note": "x"})
    net2, meta = load_checkpoint(tmp_path / "a.mxck")
    assert meta["F"] == 32 and meta["G"] == 64 and meta["note"] == "x"
    for (k, a), (_, b) in zip(net.state_dict().items(), net2.state_dict().items()):
        assert torch.equal(a, b), k
    obs = np.random.default_rng(0).integers(-1, 2, size=(3, 32, 64)).astype(np.float32)
    assert np.array_equal(network_forward(net, DecisionState(obs)).action,
                          network_forward(net2, DecisionState(obs)).action)


def test_checkpoint_float64_round_trip(tmp_path):
    net = PolicyNetwork(8, 8, hidden=4).double()
    save_checkpoint(net, tmp_path / "d.mxck")
    net2, _ = load_checkpoint(tmp_path / "d.mxck")
    assert net2.log_std.dtype == torch.float64
    assert torch.equal(net.log_std, net2.log_std)


def test_checkpoint_header_layout(tmp_path):
    save_checkpoint(PolicyNetwork(8, 8, hidden=4), tmp_path / "h.mxck")
    data = (tmp_path / "h.mxck").read_bytes()
    assert data[:4] == MAGIC and data[4] == 1 and data[5:6] == b"<"
    (meta_len,) = struct.unpack_from("<I", data, 6)
    assert data[10:10 + meta_len].startswith(b"{")


def test_checkpoint_bad_magic(tmp_path):
    (tmp_path / "bad.mxck").write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(ValueError, match="magic"):
        load_checkpoint(tmp_path / "bad.mxck")
    save_checkpoint(PolicyNetwork(8, 8, 4), tmp_path / "v.mxck")
    data = bytearray((tmp_path / "v.mxck").read_bytes())
    data[4] = 9
    (tmp_path / "v.mxck").write_bytes(bytes(data))
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(tmp_path / "v.mxck")
