"""Agent class presets, scripted policies, and head-to-head evaluation.

Three NPC classes ship with the game (only their fixed, unobserved
stats differ; each gets its own trained network):

    archer   ATK 0  DEX 4  DEF 3
    warrior  ATK 4  DEX 0  DEF 3
    ranger   ATK 3  DEX 3  DEF 3

The training opponent always has ATK 3, DEX 3, DEF 3 and moves
uniformly at random over its legal actions.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .env import (
    MAX_HP,
    Action,
    EpisodeStatus,
    Room,
    RoomGenParams,
    apply_action,
    generate_room,
    legal_actions,
    pass_turn,
)
from .nn import LstmState, PolicyParams, policy_forward, sample_action
from .observe import NO_PREV_ACTION, encode_observation
from .rewards import step_reward


@dataclass(frozen=True)
class AgentClass:
    name: str
    atk: int
    dex: int
    def_: int


CLASS_PRESETS = {
    "archer": AgentClass("archer", atk=0, dex=4, def_=3),
    "warrior": AgentClass("warrior", atk=4, dex=0, def_=3),
    "ranger": AgentClass("ranger", atk=3, dex=3, def_=3),
}

TRAINING_OPPONENT = AgentClass("opponent", atk=3, dex=3, def_=3)


def random_policy(room: Room, actor_id: int, rng: random.Random) -> Optional[Action]:
    """Uniform draw over the actor's legal actions; None when boxed in
    (the caller passes the turn)."""
    legal = sorted(legal_actions(room, actor_id), key=lambda a: a.index)
    if not legal:
        return None
    return legal[rng.randrange(len(legal))]


class RandomPolicy:
    """Stateless uniform-random player."""

    def begin_episode(self):
        pass

    def select(self, room: Room, actor_id: int, env_rng: random.Random,
               sample_rng: np.random.Generator) -> Optional[Action]:
        return random_policy(room, actor_id, env_rng)


class NetworkPolicy:
    """Plays by sampling a trained policy network, carrying LSTM state
    and the previous action across the episode."""

    def __init__(self, params: PolicyParams):
        self.params = params
        self.state = LstmState.zeros(params.spec)
        self.prev_action = NO_PREV_ACTION

    def begin_episode(self):
        self.state = LstmState.zeros(self.params.spec)
        self.prev_action = NO_PREV_ACTION

    def select(self, room: Room, actor_id: int, env_rng: random.Random,
               sample_rng: np.random.Generator) -> Optional[Action]:
        obs = encode_observation(room, actor_id, self.prev_action)
        probs, self.state = policy_forward(self.params, obs, self.state)
        index = sample_action(probs, sample_rng)
        self.prev_action = index
        return Action.from_index(index)


def play_turn(room: Room, actor_id: int, policy, env_rng: random.Random,
              sample_rng: np.random.Generator):
    """Run one actor's full turn (any potion sub-actions included).

    Returns the list of TurnOutcomes produced. Illegal choices consume
    the turn like any other; an empty legal set passes it.
    """
    outcomes = []
    while True:
        action = policy.select(room, actor_id, env_rng, sample_rng)
        if action is None:
            pass_turn(room, actor_id)
            return outcomes
        outcome = apply_action(room, actor_id, action, env_rng)
        outcomes.append(outcome)
        if outcome.turn_consumed:
            return outcomes


@dataclass
class EvalReport:
    episodes: int
    wins: int
    losses: int
    timeouts: int
    win_rate: float
    win_rate_ci: tuple
    mean_reward: float
    mean_length: float
    seed: int

    def summary(self) -> str:
        lo, hi = self.win_rate_ci
        return (
            f"episodes={self.episodes} wins={self.wins} losses={self.losses} "
            f"timeouts={self.timeouts}\n"
            f"win_rate={self.win_rate:.3f} (95% CI {lo:.3f}-{hi:.3f})\n"
            f"mean_reward={self.mean_reward:.3f} mean_length={self.mean_length:.1f}"
        )

    def to_csv(self) -> str:
        lo, hi = self.win_rate_ci
        header = "episodes,wins,losses,timeouts,win_rate,ci_low,ci_high,mean_reward,mean_length,seed"
        row = (f"{self.episodes},{self.wins},{self.losses},{self.timeouts},"
               f"{self.win_rate:.6f},{lo:.6f},{hi:.6f},"
               f"{self.mean_reward:.6f},{self.mean_length:.6f},{self.seed}")
        return header + "\n" + row + "\n"


def wilson_interval(successes: int, total: int, z: float = 1.96) -> tuple:
    if total == 0:
        return (0.0, 1.0)
    p = successes / total
    denom = 1 + z * z / total
    center = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def mean_action_profile(params: PolicyParams, gen_params: RoomGenParams,
                        n_states: int, seed: int) -> np.ndarray:
    """Average action distribution of a policy over a fixed probe set of
    fresh episode-start states (used to compare trained classes)."""
    profile = np.zeros(17, dtype=np.float64)
    for i in range(n_states):
        room = generate_room(gen_params, seed * 1_000_003 + i)
        obs = encode_observation(room, room.actors[0].actor_id, NO_PREV_ACTION)
        probs, _ = policy_forward(params, obs, LstmState.zeros(params.spec))
        profile += probs
    return profile / n_states


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def evaluate(policy_a, policy_b, n_episodes: int, gen_params: RoomGenParams,
             seed: int, max_steps: int = 100) -> EvalReport:
    """Play seeded episodes of A (first actor spec) against B,
    alternating who moves first to cancel turn-order bias."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    master = np.random.default_rng(seed)
    wins = losses = timeouts = 0
    total_reward = 0.0
    total_length = 0
    for ep in range(n_episodes):
        room_seed = int(master.integers(2 ** 63))
        env_rng = random.Random(int(master.integers(2 ** 63)))
        sample_rng = np.random.default_rng(int(master.integers(2 ** 63)))
        room = generate_room(gen_params, room_seed)
        a_id, b_id = room.actors[0].actor_id, room.actors[1].actor_id
        policy_a.begin_episode()
        policy_b.begin_episode()
        order = [(a_id, policy_a), (b_id, policy_b)]
        if ep % 2 == 1:
            order.reverse()
        result = None
        steps_a = 0
        ep_reward = 0.0
        while result is None and steps_a < max_steps:
            for actor_id, policy in order:
                if not room.actor(actor_id).alive:
                    continue
                outcomes = play_turn(room, actor_id, policy, env_rng, sample_rng)
                if actor_id == a_id:
                    steps_a += len(outcomes) if outcomes else 1
                    agent = room.actor(a_id)
                    for out in outcomes:
                        won = out.episode_status is EpisodeStatus.ACTOR_WON
                        ep_reward += step_reward(out.legal, won,
                                                 agent.stats.hp / MAX_HP)
                if not room.actor(b_id).alive:
                    result = "win"
                    break
                if not room.actor(a_id).alive:
                    result = "loss"
                    break
        if result == "win":
            wins += 1
        elif result == "loss":
            losses += 1
        else:
            timeouts += 1
        total_reward += ep_reward
        total_length += steps_a
    win_rate = wins / n_episodes
    return EvalReport(
        episodes=n_episodes, wins=wins, losses=losses, timeouts=timeouts,
        win_rate=win_rate, win_rate_ci=wilson_interval(wins, n_episodes),
        mean_reward=total_reward / n_episodes,
        mean_length=total_length / n_episodes,
        seed=seed,
    )
