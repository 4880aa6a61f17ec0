"""Clipped-surrogate policy optimization over the recurrent network.

One rollout is exactly 10 episodes, each at most 100 agent decisions,
played against the uniformly-random opponent. After each rollout the
policy takes a few epochs of clipped-surrogate gradient steps and the
baseline regresses onto the discounted returns; both replay the stored
episodes through the LSTM from their zeroed episode-start state so
credit flows through time.
"""

from __future__ import annotations

import csv
import json
import pickle
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arena import RandomPolicy, play_turn
from .env import (
    MAX_HP,
    STEP_LIMIT,
    Action,
    EpisodeStatus,
    RoomGenParams,
    apply_action,
    generate_room,
)
from .nn import (
    Adam,
    LstmState,
    PolicyParams,
    baseline_forward,
    check_finite_grads,
    init_params,
    policy_forward,
    sample_action,
    save_model,
    load_model,
    NetworkSpec,
)
from .nn import autograd as ag
from .nn.autograd import Tensor
from .nn.network import one_hot_prev, step_batch
from .observe import NO_PREV_ACTION, encode_observation
from .rewards import CurriculumPhase, phase_boundaries, phase_for_step, sample_gen_params, step_reward

EPISODES_PER_BATCH = 10


class TrainingError(Exception):
    pass


@dataclass
class Hyperparams:
    """Defaults reproduce the published training configuration."""

    lr_policy: float = 1e-6
    lr_baseline: float = 1e-4
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    entropy_coeff: float = 0.01
    epochs_per_batch: int = 3
    max_grad_norm: float = 5.0


@dataclass
class Trajectory:
    """Per-step records of one episode, in order."""

    observations: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    behavior_probs: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    policy_states: list = field(default_factory=list)
    baseline_states: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    legals: list = field(default_factory=list)
    entropies: list = field(default_factory=list)
    won: bool = False
    returns: list = field(default_factory=list)
    advantages: list = field(default_factory=list)

    def __len__(self):
        return len(self.actions)

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))


@dataclass
class RolloutBatch:
    trajectories: list
    mean_reward: float
    mean_entropy: float
    win_count: int


@dataclass
class UpdateStats:
    policy_loss: float
    baseline_loss: float
    entropy: float
    mean_ratio: float
    clip_fraction: float


class EnvFactory:
    """Builds one fresh room per episode from the phase's sampled
    generation parameters. Picklable so rollout workers can carry it."""

    def __init__(self, base_gen: RoomGenParams):
        self.base_gen = base_gen

    def __call__(self, phase: CurriculumPhase, rng: np.random.Generator):
        gen = sample_gen_params(phase, rng, self.base_gen)
        return generate_room(gen, int(rng.integers(2 ** 63)))


def make_env_factory(base_gen: RoomGenParams) -> EnvFactory:
    return EnvFactory(base_gen)


def run_episode(env_factory, policy: PolicyParams, baseline: PolicyParams,
                phase: CurriculumPhase, rng: np.random.Generator,
                max_steps: int = STEP_LIMIT,
                opponent_uniform_over_all: bool = False) -> Trajectory:
    """Play one training episode: the agent (first actor) moves first,
    then the random opponent takes its full turn."""
    room = env_factory(phase, rng)
    agent_id = room.actors[0].actor_id
    opponent_id = room.actors[1].actor_id
    env_rng = random.Random(int(rng.integers(2 ** 63)))
    opponent = RandomPolicy() if not opponent_uniform_over_all \
        else _UnrestrictedRandomPolicy()

    traj = Trajectory()
    pol_state = LstmState.zeros(policy.spec)
    base_state = LstmState.zeros(baseline.spec)
    prev_action = NO_PREV_ACTION
    for step in range(max_steps):
        obs = encode_observation(room, agent_id, prev_action)
        probs, new_pol_state = policy_forward(policy, obs, pol_state)
        value, new_base_state = baseline_forward(baseline, obs, base_state)
        action_index = sample_action(probs, rng)
        outcome = apply_action(room, agent_id, Action.from_index(action_index), env_rng)

        agent = room.actor(agent_id)
        won = outcome.episode_status is EpisodeStatus.ACTOR_WON
        reward = step_reward(outcome.legal, won, agent.stats.hp / MAX_HP)
        done = won
        if not done and outcome.turn_consumed:
            play_turn(room, opponent_id, opponent, env_rng, rng)
            if not agent.alive:
                done = True  # loss adds nothing beyond the base penalty
        if step == max_steps - 1:
            done = True

        p = np.asarray(probs, dtype=np.float64)
        entropy = float(-(p * np.log(p)).sum())
        traj.observations.append(obs)
        traj.actions.append(action_index)
        traj.behavior_probs.append(float(probs[action_index]))
        traj.rewards.append(reward)
        traj.values.append(value)
        traj.policy_states.append(pol_state)
        traj.baseline_states.append(base_state)
        traj.dones.append(done)
        traj.legals.append(outcome.legal)
        traj.entropies.append(entropy)
        if won:
            traj.won = True
        pol_state, base_state = new_pol_state, new_base_state
        prev_action = action_index
        if done:
            break
    return traj


class _UnrestrictedRandomPolicy:
    """Opponent variant sampling over all 17 actions, legal or not."""

    def begin_episode(self):
        pass

    def select(self, room, actor_id, env_rng, sample_rng):
        return Action.from_index(env_rng.randrange(17))


def collect_rollout(env_factory, policy: PolicyParams, baseline: PolicyParams,
                    phase: CurriculumPhase, rng: np.random.Generator,
                    n_episodes: int = EPISODES_PER_BATCH,
                    max_steps: int = STEP_LIMIT,
                    opponent_uniform_over_all: bool = False,
                    workers: int = 1) -> RolloutBatch:
    if workers > 1:
        trajectories = _collect_parallel(env_factory, policy, baseline, phase,
                                         rng, n_episodes, max_steps,
                                         opponent_uniform_over_all, workers)
    else:
        trajectories = [
            run_episode(env_factory, policy, baseline, phase, rng, max_steps,
                        opponent_uniform_over_all)
            for _ in range(n_episodes)
        ]
    all_entropy = [e for t in trajectories for e in t.entropies]
    return RolloutBatch(
        trajectories=trajectories,
        mean_reward=float(np.mean([t.total_reward for t in trajectories])),
        mean_entropy=float(np.mean(all_entropy)),
        win_count=sum(t.won for t in trajectories),
    )


def _collect_parallel(env_factory, policy, baseline, phase, rng, n_episodes,
                      max_steps, opponent_uniform_over_all, workers):
    # Episode seeds are drawn up front so results match any worker count.
    from concurrent.futures import ProcessPoolExecutor

    seeds = [int(rng.integers(2 ** 63)) for _ in range(n_episodes)]
    jobs = [(env_factory, policy, baseline, phase, seed, max_steps,
             opponent_uniform_over_all) for seed in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_episode_job, jobs))


def _episode_job(job):
    env_factory, policy, baseline, phase, seed, max_steps, over_all = job
    return run_episode(env_factory, policy, baseline, phase,
                       np.random.default_rng(seed), max_steps, over_all)


def compute_returns_and_advantages(batch: RolloutBatch, gamma: float) -> RolloutBatch:
    """Discounted returns per episode; advantages are returns minus the
    recorded baseline values, normalized to zero mean / unit variance
    across the whole batch."""
    for traj in batch.trajectories:
        g = 0.0
        returns = [0.0] * len(traj)
        for t in range(len(traj) - 1, -1, -1):
            g = traj.rewards[t] + gamma * g
            returns[t] = g
        traj.returns = returns
        traj.advantages = [r - v for r, v in zip(returns, traj.values)]
    flat = np.array([a for t in batch.trajectories for a in t.advantages])
    std = flat.std()
    mean = flat.mean()
    for traj in batch.trajectories:
        if std < 1e-8:
            traj.advantages = [0.0] * len(traj)
        else:
            traj.advantages = [(a - mean) / std for a in traj.advantages]
    return batch


def _pad_batch(batch: RolloutBatch, n_actions: int, dtype):
    """Stack trajectories into (T, B, ...) arrays with a validity mask."""
    trajs = batch.trajectories
    B = len(trajs)
    T = max(len(t) for t in trajs)
    gm = np.zeros((T, B, 10, 10), dtype=np.int64)
    l5 = np.zeros((T, B, 5, 5), dtype=np.int64)
    l3 = np.zeros((T, B, 3, 3), dtype=np.int64)
    props = np.zeros((T, B, 11), dtype=np.int64)
    prev = np.full((T, B), NO_PREV_ACTION, dtype=np.int64)
    actions = np.zeros((T, B), dtype=np.int64)
    behavior_logp = np.zeros((T, B), dtype=dtype)
    advantages = np.zeros((T, B), dtype=dtype)
    returns = np.zeros((T, B), dtype=dtype)
    mask = np.zeros((T, B), dtype=dtype)
    for b, traj in enumerate(trajs):
        for t in range(len(traj)):
            obs = traj.observations[t]
            gm[t, b] = obs.global_map
            l5[t, b] = obs.local5
            l3[t, b] = obs.local3
            props[t, b] = obs.properties
            prev[t, b] = obs.prev_action
            actions[t, b] = traj.actions[t]
            behavior_logp[t, b] = np.log(traj.behavior_probs[t])
            advantages[t, b] = traj.advantages[t]
            returns[t, b] = traj.returns[t]
            mask[t, b] = 1.0
    return dict(gm=gm, l5=l5, l3=l3, props=props, prev=prev, actions=actions,
                behavior_logp=behavior_logp, advantages=advantages,
                returns=returns, mask=mask, T=T, B=B)


def ppo_update(policy: PolicyParams, baseline: PolicyParams, batch: RolloutBatch,
               hp: Hyperparams, opt_policy: Adam = None, opt_baseline: Adam = None,
               dump_dir=None) -> UpdateStats:
    """One full update: epochs_per_batch passes of the clipped surrogate
    on the policy and mse regression on the baseline, each replaying the
    episodes through the LSTM from zeroed state."""
    if not batch.trajectories or not batch.trajectories[0].returns:
        raise TrainingError("batch must be augmented with returns/advantages first")
    opt_policy = opt_policy or Adam(policy, hp.lr_policy)
    opt_baseline = opt_baseline or Adam(baseline, hp.lr_baseline)
    dtype = policy.dtype
    data = _pad_batch(batch, policy.spec.n_actions, dtype)
    T, B = data["T"], data["B"]
    flat_mask = data["mask"].reshape(-1)
    n_valid = float(flat_mask.sum())
    lo, hi = 1.0 - hp.clip_epsilon, 1.0 + hp.clip_epsilon

    stats = None
    for _ in range(hp.epochs_per_batch):
        # policy pass
        h = Tensor(np.zeros((B, policy.spec.d_lstm), dtype=dtype))
        c = Tensor(np.zeros((B, policy.spec.d_lstm), dtype=dtype))
        logp_steps, ent_steps = [], []
        for t in range(T):
            prev_onehot = one_hot_prev(data["prev"][t], policy.spec.n_actions, dtype)
            logits, h, c = step_batch(policy, data["gm"][t], data["l5"][t],
                                      data["l3"][t], data["props"][t],
                                      prev_onehot, h, c)
            logp_all = ag.log_softmax(logits)
            logp_steps.append(ag.gather_rows(logp_all, data["actions"][t]))
            probs_all = ag.exp(logp_all)
            ent_steps.append(ag.sum_axis(ag.mul(probs_all, logp_all), axis=1))
        logp_new = ag.concat(logp_steps, axis=0)           # (T*B,)
        entropy = -ag.concat(ent_steps, axis=0)
        ratio = ag.exp(logp_new - Tensor(data["behavior_logp"].reshape(-1)))
        adv = Tensor(data["advantages"].reshape(-1))
        surrogate = ag.minimum(ag.mul(ratio, adv), ag.mul(ag.clip(ratio, lo, hi), adv))
        objective = ag.mul(surrogate + entropy * hp.entropy_coeff, Tensor(flat_mask))
        policy_loss = ag.sum_all(objective) * (-1.0 / n_valid)
        if not np.isfinite(policy_loss.item()):
            _dump_batch(batch, dump_dir)
            raise TrainingError("NaN policy loss; batch dumped")
        policy.zero_grads()
        policy_loss.backward()
        check_finite_grads(policy)
        opt_policy.step(hp.max_grad_norm)

        ratio_np = ratio.data * flat_mask
        clipped = ((ratio.data < lo) | (ratio.data > hi)) & (flat_mask > 0)
        masked_entropy = float((entropy.data * flat_mask).sum() / n_valid)

        # baseline pass
        h = Tensor(np.zeros((B, baseline.spec.d_lstm), dtype=dtype))
        c = Tensor(np.zeros((B, baseline.spec.d_lstm), dtype=dtype))
        value_steps = []
        for t in range(T):
            prev_onehot = one_hot_prev(data["prev"][t], baseline.spec.n_actions, dtype)
            v, h, c = step_batch(baseline, data["gm"][t], data["l5"][t],
                                 data["l3"][t], data["props"][t],
                                 prev_onehot, h, c)
            value_steps.append(ag.reshape(v, (B,)))
        values = ag.concat(value_steps, axis=0)
        err = values - Tensor(data["returns"].reshape(-1))
        baseline_loss = ag.sum_all(ag.mul(ag.square(err), Tensor(flat_mask))) * (1.0 / n_valid)
        if not np.isfinite(baseline_loss.item()):
            _dump_batch(batch, dump_dir)
            raise TrainingError("NaN baseline loss; batch dumped")
        baseline.zero_grads()
        baseline_loss.backward()
        check_finite_grads(baseline)
        opt_baseline.step(hp.max_grad_norm)

        stats = UpdateStats(
            policy_loss=float(policy_loss.item()),
            baseline_loss=float(baseline_loss.item()),
            entropy=masked_entropy,
            mean_ratio=float(ratio_np.sum() / n_valid),
            clip_fraction=float(clipped.sum() / n_valid),
        )
    return stats


def _dump_batch(batch: RolloutBatch, dump_dir):
    path = Path(dump_dir or ".") / "nan_batch_dump.pkl"
    try:
        with open(path, "wb") as fh:
            pickle.dump(batch, fh)
    except OSError:
        pass


# ---------------------------------------------------------------------------
# full training loop


METRICS_HEADER = ["batch", "episodes", "phase", "mean_reward", "entropy",
                  "win_rate", "policy_loss", "baseline_loss"]


def train(config, resume: bool = False, log=print):
    """Run the full loop described by a TrainConfig (see config module):
    collect rollout -> returns/advantages -> update, advancing the
    curriculum by global step count, appending metrics per batch and
    checkpointing periodically and at phase boundaries."""
    from .config import TrainConfig  # local import to avoid a cycle

    assert isinstance(config, TrainConfig)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = NetworkSpec(width_scale=config.width_scale)
    schedule = config.schedule()
    base_gen = config.base_gen_params()
    env_factory = make_env_factory(base_gen)
    hp = config.hyperparams

    rng = np.random.default_rng(config.seed)
    policy = init_params(spec, config.seed, head="policy")
    baseline = init_params(spec, config.seed + 1, head="baseline")
    opt_policy = Adam(policy, hp.lr_policy)
    opt_baseline = Adam(baseline, hp.lr_baseline)
    global_step = 0
    batch_index = 0

    ckpt_dir = out_dir / "checkpoint"
    if resume:
        state = _load_checkpoint(ckpt_dir, policy, baseline, opt_policy, opt_baseline)
        global_step = state["global_step"]
        batch_index = state["batch_index"]
        rng.bit_generator.state = state["rng_state"]
        log(f"resumed at batch {batch_index}, step {global_step}")

    metrics_path = out_dir / "metrics.csv"
    new_file = not metrics_path.exists() or not resume
    metrics_fh = open(metrics_path, "w" if new_file else "a", newline="")
    writer = csv.writer(metrics_fh)
    if new_file:
        writer.writerow(METRICS_HEADER)

    bounds = phase_boundaries(schedule, config.total_steps)
    last_phase = None
    try:
        while global_step < config.total_steps:
            phase = phase_for_step(schedule, global_step, config.total_steps)
            phase_index = schedule.index(phase) + 1
            if last_phase is not None and phase is not last_phase:
                _save_checkpoint(ckpt_dir, spec, policy, baseline, opt_policy,
                                 opt_baseline, global_step, batch_index, rng)
            last_phase = phase
            batch = collect_rollout(env_factory, policy, baseline, phase, rng,
                                    n_episodes=config.episodes_per_batch,
                                    max_steps=config.max_episode_steps,
                                    opponent_uniform_over_all=config.opponent_uniform_over_all,
                                    workers=config.workers)
            compute_returns_and_advantages(batch, hp.gamma)
            stats = ppo_update(policy, baseline, batch, hp, opt_policy,
                               opt_baseline, dump_dir=out_dir)
            global_step += sum(len(t) for t in batch.trajectories)
            batch_index += 1
            writer.writerow([
                batch_index, batch_index * config.episodes_per_batch, phase_index,
                f"{batch.mean_reward:.6f}", f"{stats.entropy:.6f}",
                f"{batch.win_count / len(batch.trajectories):.4f}",
                f"{stats.policy_loss:.6f}", f"{stats.baseline_loss:.6f}",
            ])
            metrics_fh.flush()
            if config.checkpoint_every and batch_index % config.checkpoint_every == 0:
                _save_checkpoint(ckpt_dir, spec, policy, baseline, opt_policy,
                                 opt_baseline, global_step, batch_index, rng)
            if config.log_every and batch_index % config.log_every == 0:
                log(f"batch {batch_index} phase {phase_index} step {global_step}/"
                    f"{config.total_steps} reward {batch.mean_reward:.3f} "
                    f"entropy {stats.entropy:.3f} wins {batch.win_count}/"
                    f"{len(batch.trajectories)}")
    finally:
        metrics_fh.close()

    _save_checkpoint(ckpt_dir, spec, policy, baseline, opt_policy, opt_baseline,
                     global_step, batch_index, rng)
    meta = {"class_preset": config.class_preset, "seed": config.seed,
            "total_steps": config.total_steps}
    save_model(policy, spec, out_dir / "policy.model", meta=meta)
    save_model(baseline, spec, out_dir / "baseline.model", meta=meta)
    return {"policy": policy, "baseline": baseline, "batches": batch_index,
            "steps": global_step, "metrics_path": metrics_path,
            "policy_path": out_dir / "policy.model"}


def _save_checkpoint(ckpt_dir, spec, policy, baseline, opt_policy, opt_baseline,
                     global_step, batch_index, rng):
    ckpt_dir = Path(ckpt_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    save_model(policy, spec, ckpt_dir / "policy.model")
    save_model(baseline, spec, ckpt_dir / "baseline.model")
    np.savez(ckpt_dir / "optim_policy.npz", **opt_policy.state_arrays())
    np.savez(ckpt_dir / "optim_baseline.npz", **opt_baseline.state_arrays())
    with open(ckpt_dir / "trainer.json", "w") as fh:
        json.dump({"global_step": global_step, "batch_index": batch_index,
                   "rng_state": rng.bit_generator.state}, fh)


def _load_checkpoint(ckpt_dir, policy, baseline, opt_policy, opt_baseline):
    ckpt_dir = Path(ckpt_dir)
    if not (ckpt_dir / "trainer.json").exists():
        raise TrainingError(f"no checkpoint found under {ckpt_dir}")
    saved_policy, _, _ = load_model(ckpt_dir / "policy.model")
    saved_baseline, _, _ = load_model(ckpt_dir / "baseline.model")
    for dst, src in ((policy, saved_policy), (baseline, saved_baseline)):
        for name, tensor in dst.items():
            tensor.data = src[name].data
    with np.load(ckpt_dir / "optim_policy.npz") as arrays:
        opt_policy.load_state_arrays(dict(arrays))
    with np.load(ckpt_dir / "optim_baseline.npz") as arrays:
        opt_baseline.load_state_arrays(dict(arrays))
    with open(ckpt_dir / "trainer.json") as fh:
        return json.load(fh)
