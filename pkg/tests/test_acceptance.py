"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. The two learning checks train real (reduced-width)
networks on the CPU and are the slow part of the suite; set
DUNGEONRL_FAST=1 to skip just those during development.
"""

import os
import random
from dataclasses import replace

import numpy as np
import pytest

from dungeonrl.arena import NetworkPolicy, RandomPolicy, evaluate
from dungeonrl.config import TrainConfig
from dungeonrl.env import Action, apply_action, generate_room, legal_actions
from dungeonrl.nn import Adam, NetworkSpec, init_params
from dungeonrl.nn import autograd as ag
from dungeonrl.nn.autograd import Tensor
from dungeonrl.nn.network import one_hot_prev, step_batch
from dungeonrl.rewards import (
    DEFAULT_PHASES,
    phase_boundaries,
    phase_for_step,
    step_reward,
)
from dungeonrl.training import (
    Hyperparams,
    collect_rollout,
    compute_returns_and_advantages,
    make_env_factory,
    ppo_update,
    train,
)

from conftest import default_gen_params

SKIP_SLOW = os.environ.get("DUNGEONRL_FAST") == "1"


def _report(name, ok, detail=""):
    print(f"\n[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# 1. reward exactness


def test_acceptance_reward_exactness():
    checks = [
        (step_reward(legal=True, won=False), -0.01),
        (step_reward(legal=False, won=False), -0.11),
        (step_reward(legal=True, won=True, normalized_hp=1.0), 9.99),
    ]
    for hp in range(21):
        checks.append((step_reward(True, True, hp / 20), -0.01 + 10.0 * hp / 20))
    worst = max(abs(got - want) for got, want in checks)
    _report("reward exactness", worst < 1e-9, f"max |error| = {worst:.2e}")


# ---------------------------------------------------------------------------
# 2. curriculum conformance


def test_acceptance_curriculum_conformance():
    rows = [(p.agent_hp, p.enemy_hp, p.loot_fraction) for p in DEFAULT_PHASES]
    expected = [
        (20, 1, 0.20),
        ((5, 20), 10, 0.20),
        ((5, 20), (10, 20), 0.20),
        ((5, 20), (10, 20), (0.10, 0.20)),
        ((5, 20), (10, 20), (0.05, 0.20)),
    ]
    table_ok = rows == expected
    bounds = phase_boundaries(DEFAULT_PHASES, 100_000)
    fractions = [p.duration_fraction for p in DEFAULT_PHASES]
    cum = np.cumsum(fractions)
    bounds_ok = bounds == [round(c * 100_000) for c in cum]
    edge_ok = (phase_for_step(DEFAULT_PHASES, 24_999, 100_000) is DEFAULT_PHASES[1]
               and phase_for_step(DEFAULT_PHASES, 25_000, 100_000) is DEFAULT_PHASES[2])
    _report("curriculum conformance", table_ok and bounds_ok and edge_ok,
            f"table={table_ok} boundaries={bounds} edges={edge_ok}")


# ---------------------------------------------------------------------------
# 3. gradient check (float64 central differences)


GRAD_LAYER_TYPES = {
    "embedding": ["gmap.embed", "prop.embed"],
    "conv": ["gmap.conv1.w", "lmap5.conv2.w"],
    "dense": ["prop.fc.w", "trunk.fc.w", "head.w"],
    "lstm": ["lstm.wx", "lstm.wh", "lstm.b"],
    "softmax_xent": ["head.b"],  # gradient flows through the composite loss
}


def _gradcheck_one_seed(seed, coords_per_type=20):
    spec = NetworkSpec(width_scale=0.1)
    params = init_params(spec, seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1000)
    B = 2
    gm = rng.integers(0, 12, (B, 10, 10))
    l5 = rng.integers(0, 12, (B, 5, 5))
    l3 = rng.integers(0, 12, (B, 3, 3))
    props = rng.integers(0, 77, (B, 11))
    prev = one_hot_prev(rng.integers(-1, 17, B), 17, np.float64)
    targets = rng.integers(0, 17, B)

    def loss_fn():
        h = Tensor(np.zeros((B, spec.d_lstm)))
        c = Tensor(np.zeros((B, spec.d_lstm)))
        logits, h, c = step_batch(params, gm, l5, l3, props, prev, h, c)
        logits, h, c = step_batch(params, gm, l5, l3, props, prev, h, c)
        logp = ag.log_softmax(logits)
        return ag.mean_all(ag.gather_rows(logp, targets) * -1.0)

    params.zero_grads()
    loss = loss_fn()
    loss.backward()

    def central_diff(flat, i, h_step):
        orig = flat[i]
        flat[i] = orig + h_step
        up = loss_fn().item()
        flat[i] = orig - h_step
        down = loss_fn().item()
        flat[i] = orig
        return (up - down) / (2 * h_step)

    worst = 0.0
    for layer_type, names in GRAD_LAYER_TYPES.items():
        for name in names:
            tensor = params[name]
            flat = tensor.data.ravel()
            picks = rng.choice(flat.size, size=min(coords_per_type, flat.size),
                               replace=False)
            for i in picks:
                auto = tensor.grad.ravel()[i]
                # A central difference is only a valid oracle when no relu
                # kink lies inside the straddle; shrink h until the straddle
                # is clean (a true gradient bug disagrees at every h).
                err = None
                for h_step in (1e-6, 1e-7, 5e-8):
                    fd = central_diff(flat, i, h_step)
                    err = abs(auto - fd) / max(abs(auto), abs(fd), 1e-3)
                    if err < 1e-4:
                        break
                worst = max(worst, err)
    return worst


def test_acceptance_gradient_check():
    worst = max(_gradcheck_one_seed(seed) for seed in range(5))
    _report("gradient check", worst < 1e-4,
            f"worst relative error {worst:.2e} over 5 seeds x "
            f"{sum(len(v) for v in GRAD_LAYER_TYPES.values())} tensors x 20 coords")


# ---------------------------------------------------------------------------
# 4. parameter count


def test_acceptance_parameter_count():
    spec = NetworkSpec(width_scale=1.0)
    policy = init_params(spec, 0, head="policy")
    baseline = init_params(spec, 1, head="baseline")
    combined = policy.param_count() + baseline.param_count()
    lo, hi = 5.5e6 * 0.85, 5.5e6 * 1.15
    _report("parameter count", lo <= combined <= hi,
            f"policy={policy.param_count():,} baseline={baseline.param_count():,} "
            f"combined={combined:,} (target 5.5M +/- 15%)")


# ---------------------------------------------------------------------------
# 5. discounting oracle


def test_acceptance_discounting_oracle():
    from dungeonrl.training import RolloutBatch, Trajectory

    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(100):
        length = int(rng.integers(1, 80))
        rewards = rng.normal(size=length).tolist()
        gamma = float(rng.uniform(0.5, 1.0))
        traj = Trajectory()
        traj.rewards = rewards
        traj.values = [0.0] * length
        traj.actions = [0] * length
        batch = RolloutBatch([traj], 0.0, 0.0, 0)
        compute_returns_and_advantages(batch, gamma)
        brute = [sum(gamma ** k * rewards[t + k] for k in range(length - t))
                 for t in range(length)]
        worst = max(worst, max(abs(a - b) for a, b in zip(traj.returns, brute)))
    _report("discounting oracle", worst < 1e-6,
            f"max |returns - brute force| = {worst:.2e} over 100 sequences")


# ---------------------------------------------------------------------------
# 6. environment property suite (>= 10,000 randomized steps)


def test_acceptance_environment_properties():
    gp = default_gen_params(width=(4, 10), height=(4, 10),
                            obstacle_fraction=(0.0, 0.25),
                            loot_fraction=(0.0, 0.3), random_equipment=True)
    total_steps = 0
    violations = []
    seed = 0
    while total_steps < 10_000:
        seed += 1
        room = generate_room(gp, seed)
        replay_room = generate_room(gp, seed)
        rng = random.Random(seed)
        replay_rng = random.Random(seed)
        mover = 0
        for _ in range(40):
            actor_id = room.actors[mover].actor_id
            if not room.actor(actor_id).alive:
                break
            index = rng.randrange(17)
            replay_index = replay_rng.randrange(17)
            action = Action.from_index(index)
            legal = legal_actions(room, actor_id)
            outcome = apply_action(room, actor_id, action, rng)
            apply_action(replay_room, actor_id, Action.from_index(replay_index),
                         replay_rng)
            total_steps += 1
            if outcome.legal != (action in legal):
                violations.append(f"seed {seed}: legality mismatch")
            for a in room.actors:
                if not (0 <= a.stats.hp <= a.stats.max_hp <= 20):
                    violations.append(f"seed {seed}: hp bounds {a.stats.hp}")
            if room.serialize() != replay_room.serialize():
                violations.append(f"seed {seed}: replay divergence")
                break
            if not room.opponents_of(room.actors[mover].faction):
                break
            if outcome.turn_consumed:
                mover = 1 - mover
    _report("environment property suite", not violations,
            f"{total_steps} randomized steps, {len(violations)} violations" +
            (f" (first: {violations[0]})" if violations else ""))


# ---------------------------------------------------------------------------
# 7. desk-scale learning (slow)


DESK_SEED = 0
DESK_BATCHES = 450
DESK_HP = dict(lr_policy=3e-3, lr_baseline=3e-3, entropy_coeff=0.005,
               epochs_per_batch=4)


def _phase1_eval_params(cfg):
    gen = cfg.base_gen_params()
    agent, enemy = gen.actors
    return replace(gen, actors=(replace(agent, hp=20), replace(enemy, hp=1)),
                   loot_fraction=0.2)


@pytest.mark.slow
@pytest.mark.skipif(SKIP_SLOW, reason="DUNGEONRL_FAST=1")
def test_acceptance_desk_scale_learning():
    cfg = TrainConfig(width_scale=0.25, seed=DESK_SEED, class_preset="warrior")
    spec = NetworkSpec(width_scale=0.25)
    policy = init_params(spec, DESK_SEED, head="policy")
    baseline = init_params(spec, DESK_SEED + 1, head="baseline")
    factory = make_env_factory(cfg.base_gen_params())
    rng = np.random.default_rng(DESK_SEED + 100)
    hp = Hyperparams(**DESK_HP)
    opt_p = Adam(policy, hp.lr_policy)
    opt_b = Adam(baseline, hp.lr_baseline)
    for _ in range(DESK_BATCHES):
        batch = collect_rollout(factory, policy, baseline, DEFAULT_PHASES[0], rng)
        compute_returns_and_advantages(batch, hp.gamma)
        ppo_update(policy, baseline, batch, hp, opt_p, opt_b)

    gen_eval = _phase1_eval_params(cfg)
    trained = evaluate(NetworkPolicy(policy), RandomPolicy(), 500, gen_eval, seed=9)
    untrained = evaluate(NetworkPolicy(init_params(spec, DESK_SEED, head="policy")),
                         RandomPolicy(), 500, gen_eval, seed=9)
    _report(
        "desk-scale learning",
        trained.win_rate >= 0.8,
        f"trained win rate {trained.win_rate:.3f} "
        f"(CI {trained.win_rate_ci[0]:.3f}-{trained.win_rate_ci[1]:.3f}) "
        f"vs untrained baseline {untrained.win_rate:.3f} over 500 episodes",
    )


# ---------------------------------------------------------------------------
# 8. curriculum ablation (slow)


ABLATION_STEPS = 60_000
ABLATION_SEED = 1
ABLATION_WINDOW = 15


def _run_arm(tmp_path, name, enabled):
    cfg = TrainConfig(
        class_preset="warrior", seed=ABLATION_SEED, total_steps=ABLATION_STEPS,
        width_scale=0.25, out_dir=str(tmp_path / name),
        curriculum_enabled=enabled, checkpoint_every=0, log_every=0,
    )
    cfg.hyperparams = Hyperparams(**DESK_HP)
    result = train(cfg, log=lambda *_: None)
    import csv as csv_mod
    with open(result["metrics_path"], newline="") as fh:
        rows = list(csv_mod.DictReader(fh))
    reward = np.array([float(r["mean_reward"]) for r in rows])
    entropy = np.array([float(r["entropy"]) for r in rows])
    return reward, entropy


@pytest.mark.slow
@pytest.mark.skipif(SKIP_SLOW, reason="DUNGEONRL_FAST=1")
def test_acceptance_curriculum_ablation(tmp_path):
    reward_on, entropy_on = _run_arm(tmp_path, "curriculum_on", True)
    reward_off, entropy_off = _run_arm(tmp_path, "curriculum_off", False)
    w = ABLATION_WINDOW
    final_on = reward_on[-w:].mean()
    final_off = reward_off[-w:].mean()
    ent_start = entropy_on[:w].mean()
    ent_end = entropy_on[-w:].mean()
    reward_ok = final_on > final_off
    entropy_ok = ent_end < ent_start
    _report(
        "curriculum ablation",
        reward_ok and entropy_ok,
        f"final smoothed reward on={final_on:.3f} off={final_off:.3f}; "
        f"curriculum-run entropy start={ent_start:.3f} end={ent_end:.3f}",
    )


# ---------------------------------------------------------------------------
# 9. headless dungeon integration


class ScriptedClient:
    """Greedy protocol-level bot: ranged shot if listed, melee bump if
    adjacent, otherwise a legal move toward the nearest NPC (or toward
    a door when the room is already clear); heals when hurt. A pinch of
    seeded noise keeps it from orbiting obstacle pockets forever."""

    DIRS = ((0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1))

    def __init__(self, seed=0):
        self.rng = random.Random(seed)

    def _toward(self, player, target, legal_moves):
        best, best_dist = None, None
        for index in legal_moves:
            dx, dy = self.DIRS[index]
            dist = max(abs(target[0] - (player["x"] + dx)),
                       abs(target[1] - (player["y"] + dy)))
            if best_dist is None or dist < best_dist:
                best, best_dist = index, dist
        return best

    def choose(self, snapshot):
        legal = snapshot["legal_actions"]
        assert legal, "active run must offer at least one legal action"
        player = next(a for a in snapshot["actors"] if a["faction"] == "player")
        npcs = [a for a in snapshot["actors"] if a["faction"] == "npc"]
        if player["hp"] <= 8 and 8 in legal and \
                snapshot["player_inventory"]["potion"] == "heal":
            return 8
        ranged = [i for i in legal if i >= 9]
        if ranged:
            return ranged[0]
        legal_moves = [i for i in legal if i <= 7]
        if not legal_moves:
            return legal[0]
        if self.rng.random() < 0.15:
            return self.rng.choice(legal_moves)
        if npcs:
            target = min(npcs, key=lambda n: max(abs(n["x"] - player["x"]),
                                                 abs(n["y"] - player["y"])))
            move = self._toward(player, (target["x"], target["y"]), legal_moves)
            if move is not None:
                return move
        else:
            rows = snapshot["grid"]["rows"]
            doors = [(x, y) for y, row in enumerate(rows)
                     for x, ch in enumerate(row) if ch == "D"]
            if doors:
                door = min(doors, key=lambda d: max(abs(d[0] - player["x"]),
                                                    abs(d[1] - player["y"])))
                move = self._toward(player, door, legal_moves)
                if move is not None:
                    return move
        return self.rng.choice(legal_moves)


def _verify_snapshot_invariants(snapshot, errors):
    grid = snapshot["grid"]
    if len(grid["rows"]) != grid["height"]:
        errors.append("grid row count mismatch")
    occupied = set()
    for actor in snapshot["actors"]:
        if not (0 <= actor["hp"] <= actor["max_hp"] <= 20):
            errors.append(f"hp bounds violated for {actor['id']}")
        if not (0 <= actor["x"] < grid["width"] and 0 <= actor["y"] < grid["height"]):
            errors.append(f"actor {actor['id']} out of bounds")
        if (actor["x"], actor["y"]) in occupied:
            errors.append("two actors share a tile")
        occupied.add((actor["x"], actor["y"]))
        if grid["rows"][actor["y"]][actor["x"]] == "#":
            errors.append(f"actor {actor['id']} on impassable tile")


def test_acceptance_headless_dungeon_integration(tmp_path):
    import asyncio

    from aiohttp.test_utils import TestClient, TestServer

    from dungeonrl.nn import save_model
    from dungeonrl.server import GameServer

    spec = NetworkSpec(width_scale=0.1)
    for i, name in enumerate(("archer", "warrior", "ranger")):
        save_model(init_params(spec, i, head="policy"), spec,
                   tmp_path / f"{name}.model", meta={"class_preset": name})

    async def scenario():
        server = GameServer(tmp_path)
        client = TestClient(TestServer(server.build_app()))
        await client.start_server()
        errors = []
        turns = 0
        try:
            ws = await client.ws_connect("/ws")
            await ws.send_json({"type": "new_run", "seed": 77,
                                "difficulty": {"rooms_per_level": [1, 2]}})
            snapshot = await ws.receive_json()
            assert snapshot["type"] == "snapshot" and snapshot["level"] == 1
            bot = ScriptedClient()
            _verify_snapshot_invariants(snapshot, errors)
            while snapshot["status"] == "active" and turns < 3000:
                await ws.send_json({"type": "action",
                                    "index": bot.choose(snapshot)})
                reply = await ws.receive_json()
                if reply["type"] == "error":
                    errors.append(f"server rejected a listed legal action: {reply}")
                    break
                assert reply["type"] == "events"
                snapshot = await ws.receive_json()
                assert snapshot["type"] == "snapshot"
                _verify_snapshot_invariants(snapshot, errors)
                turns += 1
            await ws.close()
        finally:
            await client.close()
        return snapshot, errors, turns

    snapshot, errors, turns = asyncio.run(scenario())
    terminal = snapshot["status"] in ("won", "lost")
    _report(
        "headless dungeon integration",
        terminal and not errors,
        f"status={snapshot['status']} after {turns} player turns, "
        f"level reached {snapshot['level']}, violations={len(errors)}" +
        (f" (first: {errors[0]})" if errors else ""),
    )
