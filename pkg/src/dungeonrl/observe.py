"""Integer observation encoding for the policy network.

An observation is four token grids/vectors, all small integers so the
network can embed them:

  * a 10x10 global map (rooms smaller than 10x10 sit in the top-left
    corner, the remainder encoded as impassable),
  * 5x5 and 3x3 local windows centered on the acting agent,
  * an 11-slot property vector whose slots use disjoint integer ranges
    (one shared 77-symbol vocabulary),
  * plus the previous action index (-1 at episode start).

Map cell codes:
  0 impassable / out of room / other same-faction agent
  1 empty
  2 the acting agent itself
  3 an opposing (player-faction) actor
  4-6 melee weapon tiers 1-3      7-9 ranged weapon tiers 1-3
  10 heal potion                  11 buff potion
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import (
    ActionKind,
    Actor,
    ItemCategory,
    POTION_HEAL,
    Room,
    legal_actions,
)

GLOBAL_SIZE = 10
MAP_VOCAB = 12

# Property-vector slot offsets; each slot's values never overlap another's.
PROP_AGENT_HP = 0        # 0..20
PROP_AGENT_POTION = 21   # +0 none, +1 heal, +2 buff -> 21..23
PROP_AGENT_MELEE = 24    # +0 none, +tier -> 24..27
PROP_AGENT_RANGED = 28   # 28..31
PROP_AGENT_BUFF = 32     # 32..33
PROP_RANGED_DIR = 34     # +0 none, +1+direction -> 34..42
PROP_PLAYER_HP = 43      # 43..63
PROP_PLAYER_POTION = 64  # 64..66
PROP_PLAYER_MELEE = 67   # 67..70
PROP_PLAYER_RANGED = 71  # 71..74
PROP_PLAYER_BUFF = 75    # 75..76
PROP_VOCAB = 77

NO_PREV_ACTION = -1


@dataclass
class ObservationBundle:
    """The four network input branches for one agent at one step."""

    global_map: np.ndarray  # (10, 10) int64
    local5: np.ndarray      # (5, 5)
    local3: np.ndarray      # (3, 3)
    properties: np.ndarray  # (11,)
    prev_action: int = NO_PREV_ACTION


def _cell_code(room: Room, x: int, y: int, agent: Actor) -> int:
    if not room.in_bounds(x, y) or (x, y) in room.blocked:
        return 0
    other = room.actor_at(x, y)
    if other is not None:
        if other.actor_id == agent.actor_id:
            return 2
        if other.faction is agent.faction:
            return 0  # teammates read as impassable
        return 3
    item = room.loot.get((x, y))
    if item is None:
        return 1
    if item.category is ItemCategory.MELEE:
        return 3 + item.tier_or_kind
    if item.category is ItemCategory.RANGED:
        return 6 + item.tier_or_kind
    return 10 if item.tier_or_kind == POTION_HEAL else 11


def encode_global_map(room: Room, agent_id: int) -> np.ndarray:
    """10x10 map in the fixed frame; cells beyond the room are 0."""
    agent = room.actor(agent_id)
    grid = np.zeros((GLOBAL_SIZE, GLOBAL_SIZE), dtype=np.int64)
    for y in range(room.height):
        for x in range(room.width):
            grid[y, x] = _cell_code(room, x, y, agent)
    return grid


def encode_local_map(room: Room, agent_id: int, k: int) -> np.ndarray:
    """k x k window (k in {3, 5}) centered on the agent; cells outside
    the room are 0 and the center is always 2."""
    if k not in (3, 5):
        raise ValueError(f"local map size must be 3 or 5, got {k}")
    agent = room.actor(agent_id)
    half = k // 2
    grid = np.zeros((k, k), dtype=np.int64)
    for wy in range(k):
        for wx in range(k):
            grid[wy, wx] = _cell_code(room, agent.x + wx - half, agent.y + wy - half, agent)
    return grid


def _potion_token(item) -> int:
    if item is None:
        return 0
    return 1 if item.tier_or_kind == POTION_HEAL else 2


def _tier_token(item) -> int:
    return 0 if item is None else item.tier_or_kind


def encode_properties(room: Room, agent_id: int) -> np.ndarray:
    """11-slot property vector over the shared 77-symbol vocabulary.

    Base stats (atk/def/dex) are deliberately not observable; they are
    fixed per agent class and shape behavior only through training.
    """
    agent = room.actor(agent_id)
    opponents = room.opponents_of(agent.faction)
    ranged_dir = 0
    for act in legal_actions(room, agent_id):
        if act.kind is ActionKind.RANGED:
            d = act.direction + 1
            if ranged_dir == 0 or d < ranged_dir:
                ranged_dir = d

    props = np.zeros(11, dtype=np.int64)
    props[0] = PROP_AGENT_HP + agent.stats.hp
    props[1] = PROP_AGENT_POTION + _potion_token(agent.inventory.potion)
    props[2] = PROP_AGENT_MELEE + _tier_token(agent.inventory.melee)
    props[3] = PROP_AGENT_RANGED + _tier_token(agent.inventory.ranged)
    props[4] = PROP_AGENT_BUFF + (1 if agent.stats.buffed else 0)
    props[5] = PROP_RANGED_DIR + ranged_dir
    if opponents:
        player = opponents[0]
        props[6] = PROP_PLAYER_HP + player.stats.hp
        props[7] = PROP_PLAYER_POTION + _potion_token(player.inventory.potion)
        props[8] = PROP_PLAYER_MELEE + _tier_token(player.inventory.melee)
        props[9] = PROP_PLAYER_RANGED + _tier_token(player.inventory.ranged)
        props[10] = PROP_PLAYER_BUFF + (1 if player.stats.buffed else 0)
    else:
        props[6] = PROP_PLAYER_HP
        props[7] = PROP_PLAYER_POTION
        props[8] = PROP_PLAYER_MELEE
        props[9] = PROP_PLAYER_RANGED
        props[10] = PROP_PLAYER_BUFF
    return props


def encode_observation(room: Room, agent_id: int,
                       prev_action: int = NO_PREV_ACTION) -> ObservationBundle:
    return ObservationBundle(
        global_map=encode_global_map(room, agent_id),
        local5=encode_local_map(room, agent_id, 5),
        local3=encode_local_map(room, agent_id, 3),
        properties=encode_properties(room, agent_id),
        prev_action=prev_action,
    )
