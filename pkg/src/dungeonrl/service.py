"""Playable dungeon assembled from trained NPCs.

A run is ten levels; each level is a short chain of rooms joined by
doors. Rooms are populated with NPCs whose class policies were trained
separately; every NPC keeps its own recurrent state and never leaves
the room it spawned in, while the player may walk through doors. A
level is cleared when every NPC in it is dead; clearing level ten wins
the run, and the player dying loses it.

Sessions are independent: they share the loaded (read-only) model
parameters and nothing else.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arena import CLASS_PRESETS
from .env import (
    MAX_HP,
    Action,
    Actor,
    ActorSpec,
    ActorStats,
    Faction,
    Inventory,
    Room,
    RoomGenParams,
    UnknownActorError,
    apply_action,
    buff_potion,
    generate_room,
    heal_potion,
    item_code,
    legal_actions,
    melee_weapon,
    ranged_weapon,
)
from .nn import LstmState, PolicyParams, load_model, policy_forward, sample_action
from .observe import NO_PREV_ACTION, encode_observation

FINAL_LEVEL = 10
PLAYER_ID = 0

RUN_ACTIVE = "active"
RUN_WON = "won"
RUN_LOST = "lost"


class ServiceError(Exception):
    def __init__(self, code: str, message: str, **extra):
        self.code = code
        self.extra = extra
        super().__init__(message)


class IllegalActionError(ServiceError):
    def __init__(self, legal):
        super().__init__("illegal_action",
                         "action is not legal for the player right now",
                         legal_actions=sorted(a.index for a in legal))


@dataclass(frozen=True)
class DifficultyConfig:
    """How hard levels get: NPC head count and equipment quality scale
    with depth, the trained policies themselves never change."""

    rooms_per_level: tuple = (1, 3)
    max_npcs_per_room: int = 3
    extra_npc_every: int = 4      # +1 NPC per room every N levels
    obstacle_fraction: tuple = (0.0, 0.12)
    loot_fraction: tuple = (0.10, 0.20)

    def npcs_for_level(self, level: int) -> int:
        return min(self.max_npcs_per_room, 1 + (level - 1) // self.extra_npc_every)

    def weapon_tier_cap(self, level: int) -> int:
        return min(3, 1 + (level - 1) // 3)

    def equip_chance(self, level: int) -> float:
        return min(0.9, 0.25 + 0.06 * level)

    @classmethod
    def from_dict(cls, data: dict) -> "DifficultyConfig":
        kwargs = {}
        for key in ("rooms_per_level", "obstacle_fraction", "loot_fraction"):
            if key in data:
                kwargs[key] = tuple(data[key])
        for key in ("max_npcs_per_room", "extra_npc_every"):
            if key in data:
                kwargs[key] = int(data[key])
        return cls(**kwargs)


class ModelStore:
    """Loads one policy per NPC class; shared read-only by sessions."""

    CLASSES = ("archer", "warrior", "ranger")

    def __init__(self, model_dir):
        model_dir = Path(model_dir)
        self.policies: dict[str, PolicyParams] = {}
        for name in self.CLASSES:
            path = model_dir / f"{name}.model"
            if not path.exists():
                raise ServiceError("missing_model",
                                   f"model directory {model_dir} is missing the "
                                   f"'{name}' class file {path.name}")
            params, _, _ = load_model(path)
            if params.head != "policy":
                raise ServiceError("bad_model",
                                   f"{path.name} is not a policy-head network")
            self.policies[name] = params


@dataclass
class NpcState:
    class_name: str
    lstm: LstmState
    prev_action: int = NO_PREV_ACTION


@dataclass
class Level:
    number: int
    rooms: list
    doors: list          # per room: {(x, y): (room_index, (tx, ty))}
    npc_room: dict       # npc id -> room index
    npc_states: dict     # npc id -> NpcState


class GameSession:
    """One run of the dungeon for one player; processes actions
    sequentially."""

    def __init__(self, models: ModelStore, difficulty: DifficultyConfig, seed: int):
        self.models = models
        self.difficulty = difficulty
        self.seed = seed
        self.status = RUN_ACTIVE
        self.level_number = 0
        self.sample_rng = np.random.default_rng(seed ^ 0x5EED)
        self._next_npc_id = 1
        self._player_stats = None   # survives across levels
        self._player_inventory = Inventory()
        self.level: Level = None
        self.player_room_index = 0
        self._advance_level()

    # -- level construction --

    def _level_rng(self, level_number: int) -> random.Random:
        return random.Random((self.seed * 1_000_003 + level_number) & 0xFFFFFFFFFFFF)

    def _advance_level(self) -> list:
        self.level_number += 1
        if self.level_number > FINAL_LEVEL:
            self.status = RUN_WON
            return [{"type": "run_end", "status": RUN_WON}]
        rng = self._level_rng(self.level_number)
        n_rooms = rng.randint(*self.difficulty.rooms_per_level)
        rooms, doors, npc_room, npc_states = [], [], {}, {}
        for index in range(n_rooms):
            room = self._build_room(rng, self.level_number)
            for actor in room.actors:
                actor.actor_id = self._next_npc_id
                npc_room[actor.actor_id] = index
                npc_states[actor.actor_id] = NpcState(
                    class_name=actor.class_name,
                    lstm=LstmState.zeros(self.models.policies[actor.class_name].spec),
                )
                self._next_npc_id += 1
            room.reindex_actors()
            rooms.append(room)
            doors.append({})
        for index in range(n_rooms - 1):
            exit_pos = self._door_tile(rooms[index], rng, east=True)
            entry_pos = self._door_tile(rooms[index + 1], rng, east=False)
            doors[index][exit_pos] = (index + 1, entry_pos)
            doors[index + 1][entry_pos] = (index, exit_pos)
        self.level = Level(number=self.level_number, rooms=rooms, doors=doors,
                           npc_room=npc_room, npc_states=npc_states)
        self.player_room_index = 0
        self._insert_player(rooms[0], rng)
        return [{"type": "level_start", "level": self.level_number,
                 "rooms": n_rooms}]

    def _build_room(self, rng: random.Random, level: int) -> Room:
        n_npcs = self.difficulty.npcs_for_level(level)
        specs = []
        for _ in range(n_npcs):
            name = ModelStore.CLASSES[rng.randrange(len(ModelStore.CLASSES))]
            preset = CLASS_PRESETS[name]
            specs.append(ActorSpec(Faction.NPC, atk=preset.atk, def_=preset.def_,
                                   dex=preset.dex, hp=MAX_HP, class_name=name))
        gp = RoomGenParams(
            actors=tuple(specs),
            width=(5, 10), height=(5, 10),
            obstacle_fraction=self.difficulty.obstacle_fraction,
            loot_fraction=self.difficulty.loot_fraction,
            random_equipment=False,
        )
        room = generate_room(gp, rng.getrandbits(48))
        tier_cap = self.difficulty.weapon_tier_cap(level)
        chance = self.difficulty.equip_chance(level)
        for actor in room.actors:
            if rng.random() < chance:
                actor.inventory.melee = melee_weapon(rng.randint(1, tier_cap))
            if rng.random() < chance:
                actor.inventory.ranged = ranged_weapon(rng.randint(1, tier_cap))
            if rng.random() < 0.3:
                actor.inventory.potion = heal_potion() if rng.random() < 0.5 else buff_potion()
        return room

    def _door_tile(self, room: Room, rng: random.Random, east: bool) -> tuple:
        x = room.width - 1 if east else 0
        candidates = [(x, y) for y in range(room.height) if room.passable(x, y)]
        if not candidates:  # fully blocked edge column: fall back to any tile
            candidates = [(cx, cy) for cy in range(room.height)
                          for cx in range(room.width) if room.passable(cx, cy)]
        pos = candidates[rng.randrange(len(candidates))]
        room.loot.pop(pos, None)
        return pos

    def _insert_player(self, room: Room, rng: random.Random):
        if self._player_stats is None:
            self._player_stats = ActorStats(hp=MAX_HP, max_hp=MAX_HP,
                                            atk=3, def_=3, dex=3)
        spot = self._free_tile(room, rng)
        room.add_actor(Actor(actor_id=PLAYER_ID, faction=Faction.PLAYER,
                             stats=self._player_stats,
                             inventory=self._player_inventory,
                             x=spot[0], y=spot[1], class_name="player"))

    def _free_tile(self, room: Room, rng: random.Random) -> tuple:
        candidates = [(x, y) for y in range(room.height) for x in range(room.width)
                      if room.passable(x, y) and room.actor_at(x, y) is None]
        return candidates[rng.randrange(len(candidates))]

    # -- accessors --

    @property
    def current_room(self) -> Room:
        return self.level.rooms[self.player_room_index]

    @property
    def player(self):
        return self.current_room.actor(PLAYER_ID)

    def _npcs_alive_in_level(self) -> int:
        return sum(
            1 for room in self.level.rooms for a in room.actors
            if a.faction is Faction.NPC and a.alive
        )

    def player_legal_actions(self) -> set:
        return legal_actions(self.current_room, PLAYER_ID)

    # -- the turn loop --

    def submit_action(self, index: int) -> list:
        """Apply one player action; if it ends the player's turn, every
        NPC in the player's current room then acts once. Returns the
        ordered event list."""
        if self.status != RUN_ACTIVE:
            raise ServiceError("run_over", f"run already {self.status}")
        try:
            action = Action.from_index(index)
        except ValueError as exc:
            raise ServiceError("bad_action", str(exc)) from exc
        legal = self.player_legal_actions()
        if action not in legal:
            raise IllegalActionError(legal)

        room = self.current_room
        rng = self._level_rng(self.level_number * 7919 + room.turn_count)
        outcome = apply_action(room, PLAYER_ID, action, rng)
        events = list(outcome.events)

        if any(ev["type"] == "move" for ev in outcome.events):
            events.extend(self._check_doors())
        if self._npcs_alive_in_level() == 0:
            events.append({"type": "level_cleared", "level": self.level_number})
            events.extend(self._advance_level())
            return events
        if not outcome.turn_consumed:
            return events  # potion: the player may act again first

        events.extend(self._npc_turns(rng))
        if not self.player.alive:
            self.status = RUN_LOST
            events.append({"type": "run_end", "status": RUN_LOST})
        return events

    def _check_doors(self) -> list:
        room = self.current_room
        player = room.actor(PLAYER_ID)
        link = self.level.doors[self.player_room_index].get(player.pos)
        if link is None:
            return []
        target_index, target_pos = link
        room.remove_actor(PLAYER_ID)
        self.player_room_index = target_index
        new_room = self.current_room
        if new_room.actor_at(*target_pos) is not None:
            target_pos = self._free_tile(new_room, self._level_rng(
                self.level_number * 31 + new_room.turn_count))
        player.x, player.y = target_pos
        new_room.add_actor(player)
        return [{"type": "room_transition", "room_index": target_index,
                 "to": list(target_pos)}]

    def _npc_turns(self, rng: random.Random) -> list:
        events = []
        room = self.current_room
        for npc in list(room.actors):  # spawn order
            if npc.faction is not Faction.NPC or not npc.alive:
                continue
            if not self.player.alive:
                break
            events.extend(self._one_npc_turn(room, npc, rng))
        return events

    def _one_npc_turn(self, room: Room, npc, rng: random.Random) -> list:
        state = self.level.npc_states[npc.actor_id]
        params = self.models.policies[state.class_name]
        events = []
        while True:
            obs = encode_observation(room, npc.actor_id, state.prev_action)
            probs, state.lstm = policy_forward(params, obs, state.lstm)
            index = sample_action(probs, self.sample_rng)
            state.prev_action = index
            outcome = apply_action(room, npc.actor_id, Action.from_index(index), rng)
            events.extend(outcome.events)
            if outcome.turn_consumed:
                return events

    def inspect(self, actor_id: int) -> dict:
        """Stats panel for an alive NPC in the player's room."""
        room = self.current_room
        try:
            actor = room.actor(actor_id)
        except UnknownActorError:
            raise ServiceError("unknown_actor",
                               f"no visible actor {actor_id} in this room") from None
        if not actor.alive:
            raise ServiceError("unknown_actor", f"actor {actor_id} is dead")
        inv = actor.inventory
        return {
            "id": actor.actor_id,
            "class": actor.class_name,
            "hp": actor.stats.hp,
            "max_hp": actor.stats.max_hp,
            "atk": actor.stats.atk,
            "def": actor.stats.def_,
            "dex": actor.stats.dex,
            "buff_turns": actor.stats.buff_turns_left,
            "equipment": {
                "melee": item_code(inv.melee) if inv.melee else None,
                "ranged": item_code(inv.ranged) if inv.ranged else None,
                "potion": item_code(inv.potion) if inv.potion else None,
            },
        }

    def resign(self) -> list:
        if self.status == RUN_ACTIVE:
            self.status = RUN_LOST
        return [{"type": "run_end", "status": self.status}]

    # -- snapshots --

    def snapshot(self) -> dict:
        """Everything a client needs to render the current view."""
        room = self.current_room
        doors = self.level.doors[self.player_room_index]
        rows = []
        for y in range(room.height):
            row = []
            for x in range(room.width):
                if (x, y) in doors:
                    row.append("D")
                elif (x, y) in room.blocked:
                    row.append("#")
                elif (x, y) in room.loot:
                    row.append(Room._ITEM_CHARS[room.loot[(x, y)]])
                else:
                    row.append(".")
            rows.append("".join(row))
        actors = []
        for a in room.actors:
            if not a.alive:
                continue
            actors.append({
                "id": a.actor_id,
                "faction": a.faction.value,
                "class": a.class_name,
                "x": a.x, "y": a.y,
                "hp": a.stats.hp, "max_hp": a.stats.max_hp,
                "buffed": a.stats.buffed,
            })
        inv = self._player_inventory
        legal = sorted(a.index for a in self.player_legal_actions()) \
            if self.status == RUN_ACTIVE and room.has_actor(PLAYER_ID) else []
        return {
            "level": min(self.level_number, FINAL_LEVEL),
            "room_index": self.player_room_index,
            "rooms_in_level": len(self.level.rooms),
            "status": self.status,
            "turn": room.turn_count,
            "grid": {"width": room.width, "height": room.height, "rows": rows},
            "actors": actors,
            "player_inventory": {
                "melee": item_code(inv.melee) if inv.melee else None,
                "ranged": item_code(inv.ranged) if inv.ranged else None,
                "potion": item_code(inv.potion) if inv.potion else None,
            },
            "legal_actions": legal,
            "npcs_remaining": self._npcs_alive_in_level(),
        }


def new_run(model_dir, difficulty: DifficultyConfig = None, seed: int = 0) -> GameSession:
    """Convenience constructor used by the CLI and tests."""
    store = ModelStore(model_dir)
    return GameSession(store, difficulty or DifficultyConfig(), seed)
