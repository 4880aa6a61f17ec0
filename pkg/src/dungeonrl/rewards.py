"""Sparse reward and the five-phase training curriculum.

Every agent step costs -0.01; an impossible action costs a further
-0.1; the step that defeats the opponent earns +10 times the agent's
remaining hp normalized by the fixed maximum of 20. Losing or hitting
the step limit adds nothing beyond the accumulated step costs.

The curriculum ramps generation difficulty over five phases: first the
enemy dies to a single hit, then agent and enemy hp widen into ranges,
then loot gets scarce. Ranged fields are drawn uniformly per episode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .env import MAX_HP, RoomGenParams

STEP_PENALTY = -0.01
ILLEGAL_PENALTY = -0.1
WIN_BONUS = 10.0

IntOrRange = Union[int, tuple]
FloatOrRange = Union[float, tuple]


def step_reward(legal: bool, won: bool, normalized_hp: float = 0.0) -> float:
    """Reward for one agent step; normalized_hp is winner hp / 20 and is
    only consulted when won is True."""
    reward = STEP_PENALTY
    if not legal:
        reward += ILLEGAL_PENALTY
    if won:
        reward += WIN_BONUS * normalized_hp
    return reward


@dataclass(frozen=True)
class CurriculumPhase:
    """Room generation knobs for one slice of training."""

    agent_hp: IntOrRange
    enemy_hp: IntOrRange
    loot_fraction: FloatOrRange
    duration_fraction: float


DEFAULT_PHASES = (
    CurriculumPhase(agent_hp=20, enemy_hp=1, loot_fraction=0.20, duration_fraction=0.10),
    CurriculumPhase(agent_hp=(5, 20), enemy_hp=10, loot_fraction=0.20, duration_fraction=0.15),
    CurriculumPhase(agent_hp=(5, 20), enemy_hp=(10, 20), loot_fraction=0.20, duration_fraction=0.20),
    CurriculumPhase(agent_hp=(5, 20), enemy_hp=(10, 20), loot_fraction=(0.10, 0.20), duration_fraction=0.25),
    CurriculumPhase(agent_hp=(5, 20), enemy_hp=(10, 20), loot_fraction=(0.05, 0.20), duration_fraction=0.30),
)


class ScheduleError(ValueError):
    pass


def phase_boundaries(schedule, total_steps: int) -> list[int]:
    fractions = [p.duration_fraction for p in schedule]
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ScheduleError(f"duration fractions sum to {sum(fractions)}, expected 1")
    bounds, cum = [], 0.0
    for f in fractions:
        cum += f
        bounds.append(round(cum * total_steps))
    bounds[-1] = total_steps
    return bounds


def phase_for_step(schedule, global_step: int, total_steps: int) -> CurriculumPhase:
    """Piecewise-constant phase lookup by cumulative duration fraction."""
    if not (0 <= global_step < total_steps):
        raise ValueError(f"step {global_step} outside [0, {total_steps})")
    for phase, bound in zip(schedule, phase_boundaries(schedule, total_steps)):
        if global_step < bound:
            return phase
    return schedule[-1]


def _draw_int(rng: np.random.Generator, value: IntOrRange) -> int:
    if isinstance(value, tuple):
        lo, hi = value
        return int(rng.integers(lo, hi + 1))
    return value


def _draw_float(rng: np.random.Generator, value: FloatOrRange) -> float:
    if isinstance(value, tuple):
        lo, hi = value
        return lo + float(rng.random()) * (hi - lo)
    return value


def sample_gen_params(phase: CurriculumPhase, rng: np.random.Generator,
                      base: RoomGenParams) -> RoomGenParams:
    """Resolve one episode's generation parameters from the phase.

    base supplies everything the phase does not control (room shape,
    obstacles, actor classes); its first actor spec is the learning
    agent, the second the enemy. Ranged phase fields are drawn
    uniformly, fixed ones pass through.
    """
    if len(base.actors) != 2:
        raise ValueError("base gen params must have exactly two actor specs")
    agent, enemy = base.actors
    agent = replace(agent, hp=min(_draw_int(rng, phase.agent_hp), MAX_HP))
    enemy = replace(enemy, hp=min(_draw_int(rng, phase.enemy_hp), MAX_HP))
    return replace(base, actors=(agent, enemy),
                   loot_fraction=_draw_float(rng, phase.loot_fraction))
