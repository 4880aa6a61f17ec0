"""Turn-based roguelike room simulation.

One Room is a rectangular grid (at most 10x10) holding impassable
tiles, collectible loot, and actors split into two factions (``npc``
and ``player``).  Every actor shares the same 17-action space:

    index 0-7   Move in compass order N, NE, E, SE, S, SW, W, NW
    index 8     Use the potion in the inventory slot
    index 9-16  Ranged attack in the same compass order

Coordinates are (x, y) with x growing east and y growing south, so
"N" is (0, -1).  All randomness flows through explicit
``random.Random`` instances; replaying the same seeds reproduces the
exact same rooms and combat rolls.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Union

MAX_ROOM_SIDE = 10
MAX_HP = 20
STEP_LIMIT = 100

# Compass order shared by move and ranged actions.
DIRECTIONS = ((0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1))
DIRECTION_NAMES = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")

N_ACTIONS = 17

BARE_HANDS_POWER = 2
WEAPON_POWER = {1: 3, 2: 5, 3: 7}  # tier -> damage die size
HEAL_AMOUNT = 10
BUFF_TURNS = 5
BUFF_BONUS = 2  # applied to both effective ATK and effective DEF


class EnvError(Exception):
    """Base class for simulation errors."""


class GenParamsError(EnvError):
    """Room generation parameters out of range."""


class UnknownActorError(EnvError):
    """Actor id not present (or no longer alive) in the room."""


class RoomFormatError(EnvError):
    """Serialized room text could not be parsed."""


class Faction(str, Enum):
    NPC = "npc"
    PLAYER = "player"


class ItemCategory(str, Enum):
    MELEE = "melee"
    RANGED = "ranged"
    POTION = "potion"


POTION_HEAL = 1
POTION_BUFF = 2


@dataclass(frozen=True)
class ItemKind:
    """One collectible: weapon tier 1-3 or potion kind heal/buff."""

    category: ItemCategory
    tier_or_kind: int

    def __post_init__(self):
        if self.category is ItemCategory.POTION:
            if self.tier_or_kind not in (POTION_HEAL, POTION_BUFF):
                raise ValueError(f"bad potion kind {self.tier_or_kind}")
        elif self.tier_or_kind not in (1, 2, 3):
            raise ValueError(f"bad weapon tier {self.tier_or_kind}")


def melee_weapon(tier: int) -> ItemKind:
    return ItemKind(ItemCategory.MELEE, tier)


def ranged_weapon(tier: int) -> ItemKind:
    return ItemKind(ItemCategory.RANGED, tier)


def heal_potion() -> ItemKind:
    return ItemKind(ItemCategory.POTION, POTION_HEAL)


def buff_potion() -> ItemKind:
    return ItemKind(ItemCategory.POTION, POTION_BUFF)


ALL_ITEM_KINDS = tuple(
    [melee_weapon(t) for t in (1, 2, 3)]
    + [ranged_weapon(t) for t in (1, 2, 3)]
    + [heal_potion(), buff_potion()]
)


@dataclass
class ActorStats:
    """Mutable combat state. atk/def_/dex never change after spawn;
    buffs are tracked in buff_turns_left only."""

    hp: int
    max_hp: int
    atk: int
    def_: int
    dex: int
    buff_turns_left: int = 0

    def __post_init__(self):
        if not (0 <= self.hp <= self.max_hp <= MAX_HP):
            raise ValueError(f"hp {self.hp}/{self.max_hp} outside [0, {MAX_HP}]")

    @property
    def buffed(self) -> bool:
        return self.buff_turns_left > 0

    @property
    def eff_atk(self) -> int:
        return self.atk + (BUFF_BONUS if self.buffed else 0)

    @property
    def eff_def(self) -> int:
        return self.def_ + (BUFF_BONUS if self.buffed else 0)

    @property
    def eff_dex(self) -> int:
        return self.dex  # buff raises ATK and DEF only


@dataclass
class Inventory:
    """At most one item per category; a new pickup replaces the old one."""

    melee: Optional[ItemKind] = None
    ranged: Optional[ItemKind] = None
    potion: Optional[ItemKind] = None

    def store(self, item: ItemKind) -> Optional[ItemKind]:
        """Put item in its slot, returning whatever it replaced."""
        slot = item.category.value
        old = getattr(self, slot)
        setattr(self, slot, item)
        return old


@dataclass
class Actor:
    actor_id: int
    faction: Faction
    stats: ActorStats
    inventory: Inventory
    x: int
    y: int
    class_name: str = ""

    @property
    def alive(self) -> bool:
        return self.stats.hp > 0

    @property
    def pos(self) -> tuple[int, int]:
        return (self.x, self.y)


class ActionKind(str, Enum):
    MOVE = "move"
    USE_POTION = "use_potion"
    RANGED = "ranged"


@dataclass(frozen=True)
class Action:
    """One of the 17 discrete actions, identified by a stable index."""

    kind: ActionKind
    direction: Optional[int] = None

    def __post_init__(self):
        if self.kind is ActionKind.USE_POTION:
            if self.direction is not None:
                raise ValueError("use_potion takes no direction")
        elif self.direction not in range(8):
            raise ValueError(f"direction must be 0-7, got {self.direction}")

    @property
    def index(self) -> int:
        if self.kind is ActionKind.MOVE:
            return self.direction
        if self.kind is ActionKind.USE_POTION:
            return 8
        return 9 + self.direction

    @classmethod
    def from_index(cls, index: int) -> "Action":
        if 0 <= index <= 7:
            return cls(ActionKind.MOVE, index)
        if index == 8:
            return cls(ActionKind.USE_POTION)
        if 9 <= index <= 16:
            return cls(ActionKind.RANGED, index - 9)
        raise ValueError(f"action index out of range: {index}")

    def __repr__(self):
        if self.kind is ActionKind.USE_POTION:
            return "Action(use_potion)"
        return f"Action({self.kind.value} {DIRECTION_NAMES[self.direction]})"


ALL_ACTIONS = tuple(Action.from_index(i) for i in range(N_ACTIONS))


class EpisodeStatus(str, Enum):
    ONGOING = "ongoing"
    ACTOR_WON = "actor_won"
    ACTOR_LOST = "actor_lost"
    STEP_LIMIT = "step_limit"


@dataclass
class TurnOutcome:
    legal: bool
    damage_dealt: int = 0
    episode_status: EpisodeStatus = EpisodeStatus.ONGOING
    turn_consumed: bool = True
    events: list = field(default_factory=list)


@dataclass
class PotionEffect:
    kind: int  # POTION_HEAL or POTION_BUFF
    hp_restored: int = 0
    buff_turns: int = 0


# ---------------------------------------------------------------------------
# Room


@dataclass
class Room:
    width: int
    height: int
    blocked: set  # {(x, y)} impassable tiles
    loot: dict  # {(x, y): ItemKind}
    actors: list  # [Actor]
    turn_count: int = 0

    def __post_init__(self):
        self._by_id = {a.actor_id: a for a in self.actors}
        if len(self._by_id) != len(self.actors):
            raise ValueError("duplicate actor ids")

    def actor(self, actor_id: int) -> Actor:
        try:
            return self._by_id[actor_id]
        except KeyError:
            raise UnknownActorError(f"no actor with id {actor_id}") from None

    def has_actor(self, actor_id: int) -> bool:
        return actor_id in self._by_id

    def add_actor(self, actor: Actor):
        if actor.actor_id in self._by_id:
            raise ValueError(f"duplicate actor id {actor.actor_id}")
        self.actors.append(actor)
        self._by_id[actor.actor_id] = actor

    def remove_actor(self, actor_id: int) -> Actor:
        actor = self.actor(actor_id)
        self.actors.remove(actor)
        del self._by_id[actor_id]
        return actor

    def reindex_actors(self):
        """Rebuild the id lookup after actor ids were reassigned."""
        self._by_id = {a.actor_id: a for a in self.actors}

    def alive_actors(self) -> list[Actor]:
        return [a for a in self.actors if a.alive]

    def actor_at(self, x: int, y: int) -> Optional[Actor]:
        for a in self.actors:
            if a.alive and a.x == x and a.y == y:
                return a
        return None

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def passable(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and (x, y) not in self.blocked

    def opponents_of(self, faction: Faction) -> list[Actor]:
        return [a for a in self.actors if a.alive and a.faction is not faction]

    def clone(self) -> "Room":
        return Room(
            width=self.width,
            height=self.height,
            blocked=set(self.blocked),
            loot=dict(self.loot),
            actors=[
                Actor(
                    actor_id=a.actor_id,
                    faction=a.faction,
                    stats=replace(a.stats),
                    inventory=replace(a.inventory),
                    x=a.x,
                    y=a.y,
                    class_name=a.class_name,
                )
                for a in self.actors
            ],
            turn_count=self.turn_count,
        )

    # -- text serialization (format documented in docs/room_format.md) --

    _ITEM_CHARS = {
        melee_weapon(1): "a", melee_weapon(2): "b", melee_weapon(3): "c",
        ranged_weapon(1): "d", ranged_weapon(2): "e", ranged_weapon(3): "f",
        heal_potion(): "h", buff_potion(): "p",
    }
    _CHAR_ITEMS = {v: k for k, v in _ITEM_CHARS.items()}

    def serialize(self) -> str:
        lines = ["room v1", f"size {self.width} {self.height}", f"turn {self.turn_count}"]
        for y in range(self.height):
            row = []
            for x in range(self.width):
                if (x, y) in self.blocked:
                    row.append("#")
                elif (x, y) in self.loot:
                    row.append(self._ITEM_CHARS[self.loot[(x, y)]])
                else:
                    row.append(".")
            lines.append("".join(row))
        for a in self.actors:
            inv = a.inventory
            lines.append(
                "actor id={} faction={} class={} pos={},{} hp={}/{} atk={} def={} dex={} "
                "buff={} melee={} ranged={} potion={}".format(
                    a.actor_id, a.faction.value, a.class_name or "-", a.x, a.y,
                    a.stats.hp, a.stats.max_hp, a.stats.atk, a.stats.def_, a.stats.dex,
                    a.stats.buff_turns_left,
                    self._ITEM_CHARS[inv.melee] if inv.melee else "-",
                    self._ITEM_CHARS[inv.ranged] if inv.ranged else "-",
                    self._ITEM_CHARS[inv.potion] if inv.potion else "-",
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "Room":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "room v1":
            raise RoomFormatError("missing or unsupported 'room v1' header")
        try:
            _, w, h = lines[1].split()
            width, height = int(w), int(h)
            turn_count = int(lines[2].split()[1])
        except (IndexError, ValueError) as exc:
            raise RoomFormatError(f"bad size/turn header: {exc}") from exc
        if len(lines) < 3 + height:
            raise RoomFormatError("truncated grid")
        blocked, loot = set(), {}
        for y in range(height):
            row = lines[3 + y]
            if len(row) != width:
                raise RoomFormatError(f"grid row {y} has length {len(row)}, want {width}")
            for x, ch in enumerate(row):
                if ch == "#":
                    blocked.add((x, y))
                elif ch in cls._CHAR_ITEMS:
                    loot[(x, y)] = cls._CHAR_ITEMS[ch]
                elif ch != ".":
                    raise RoomFormatError(f"unknown grid char {ch!r}")
        actors = []
        for row in lines[3 + height:]:
            if not row.startswith("actor "):
                raise RoomFormatError(f"expected actor record, got {row!r}")
            fields = dict(part.split("=", 1) for part in row.split()[1:])
            try:
                hp, max_hp = (int(v) for v in fields["hp"].split("/"))
                x, y = (int(v) for v in fields["pos"].split(","))
                stats = ActorStats(
                    hp=hp, max_hp=max_hp, atk=int(fields["atk"]),
                    def_=int(fields["def"]), dex=int(fields["dex"]),
                    buff_turns_left=int(fields["buff"]),
                )
                inv = Inventory(
                    melee=cls._CHAR_ITEMS.get(fields["melee"]),
                    ranged=cls._CHAR_ITEMS.get(fields["ranged"]),
                    potion=cls._CHAR_ITEMS.get(fields["potion"]),
                )
                actors.append(Actor(
                    actor_id=int(fields["id"]),
                    faction=Faction(fields["faction"]),
                    stats=stats,
                    inventory=inv,
                    x=x,
                    y=y,
                    class_name="" if fields["class"] == "-" else fields["class"],
                ))
            except (KeyError, ValueError) as exc:
                raise RoomFormatError(f"bad actor record {row!r}: {exc}") from exc
        return cls(width=width, height=height, blocked=blocked, loot=loot,
                   actors=actors, turn_count=turn_count)


# ---------------------------------------------------------------------------
# Generation


IntOrRange = Union[int, tuple]
FloatOrRange = Union[float, tuple]


@dataclass(frozen=True)
class ActorSpec:
    """How to spawn one actor; hp may be an inclusive (lo, hi) range."""

    faction: Faction
    atk: int
    def_: int
    dex: int
    hp: IntOrRange = MAX_HP
    max_hp: int = MAX_HP
    class_name: str = ""


@dataclass(frozen=True)
class RoomGenParams:
    actors: tuple
    width: IntOrRange = (4, 10)
    height: IntOrRange = (4, 10)
    obstacle_fraction: FloatOrRange = 0.0
    loot_fraction: FloatOrRange = 0.2
    random_equipment: bool = False


def _draw_int(rng: random.Random, value: IntOrRange) -> int:
    if isinstance(value, tuple):
        lo, hi = value
        return rng.randint(lo, hi)
    return value


def _draw_float(rng: random.Random, value: FloatOrRange) -> float:
    if isinstance(value, tuple):
        lo, hi = value
        return lo + rng.random() * (hi - lo)
    return value


def _check_side(name: str, value: IntOrRange):
    bounds = value if isinstance(value, tuple) else (value, value)
    for v in bounds:
        if not (2 <= v <= MAX_ROOM_SIDE):
            raise GenParamsError(f"{name} must be within [2, {MAX_ROOM_SIDE}], got {v}")


def _check_fraction(name: str, value: FloatOrRange):
    bounds = value if isinstance(value, tuple) else (value, value)
    for v in bounds:
        if not (0.0 <= v <= 1.0):
            raise GenParamsError(f"{name} must be within [0, 1], got {v}")


def _connected(width: int, height: int, blocked: set) -> bool:
    """True when all passable tiles form one orthogonally-connected region."""
    free = {(x, y) for x in range(width) for y in range(height) if (x, y) not in blocked}
    if not free:
        return False
    stack = [next(iter(free))]
    seen = {stack[0]}
    while stack:
        x, y = stack.pop()
        for dx, dy in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            n = (x + dx, y + dy)
            if n in free and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(free)


def generate_room(gen_params: RoomGenParams, seed: int) -> Room:
    """Build a seeded random room. Identical (gen_params, seed) pairs
    produce bit-identical rooms.

    Loot count is round(loot_fraction * empty_tiles) where empty tiles
    are passable and not under an actor. Obstacles that would split the
    walkable area are skipped so every actor can always reach every
    other actor.
    """
    gp = gen_params
    _check_side("width", gp.width)
    _check_side("height", gp.height)
    _check_fraction("obstacle_fraction", gp.obstacle_fraction)
    _check_fraction("loot_fraction", gp.loot_fraction)
    if not gp.actors:
        raise GenParamsError("at least one actor spec required")

    rng = random.Random(seed)
    width = _draw_int(rng, gp.width)
    height = _draw_int(rng, gp.height)

    n_obstacles = round(_draw_float(rng, gp.obstacle_fraction) * width * height)
    cells = [(x, y) for y in range(height) for x in range(width)]
    rng.shuffle(cells)
    blocked = set()
    placed = 0
    for cell in cells:
        if placed >= n_obstacles:
            break
        if len(blocked) + 1 >= width * height - len(gp.actors):
            break
        candidate = blocked | {cell}
        if _connected(width, height, candidate):
            blocked = candidate
        placed += 1

    free = [c for c in cells if c not in blocked]
    if len(free) < len(gp.actors):
        raise GenParamsError("room too small for requested actors")

    actors = []
    for i, spec in enumerate(gp.actors):
        x, y = free.pop(0)
        hp = _draw_int(rng, spec.hp)
        hp = max(0, min(hp, spec.max_hp))
        inv = Inventory()
        if gp.random_equipment:
            if rng.random() < 0.5:
                inv.melee = melee_weapon(rng.randint(1, 3))
            if rng.random() < 0.5:
                inv.ranged = ranged_weapon(rng.randint(1, 3))
            if rng.random() < 0.5:
                inv.potion = heal_potion() if rng.random() < 0.5 else buff_potion()
        actors.append(Actor(
            actor_id=i,
            faction=spec.faction,
            stats=ActorStats(hp=hp, max_hp=spec.max_hp, atk=spec.atk,
                             def_=spec.def_, dex=spec.dex),
            inventory=inv,
            x=x,
            y=y,
            class_name=spec.class_name,
        ))

    loot_frac = _draw_float(rng, gp.loot_fraction)
    n_loot = round(loot_frac * len(free))
    loot = {}
    for cell in free[:n_loot]:
        loot[cell] = rng.choice(ALL_ITEM_KINDS)

    return Room(width=width, height=height, blocked=blocked, loot=loot, actors=actors)


# ---------------------------------------------------------------------------
# Rules


def _ray_target(room: Room, actor: Actor, direction: int) -> Optional[Actor]:
    """First opposing actor along the ray, or None if the ray exits the
    room or is blocked by an obstacle or a same-faction actor."""
    dx, dy = DIRECTIONS[direction]
    x, y = actor.x + dx, actor.y + dy
    while room.in_bounds(x, y):
        if (x, y) in room.blocked:
            return None
        other = room.actor_at(x, y)
        if other is not None:
            return other if other.faction is not actor.faction else None
        x, y = x + dx, y + dy
    return None


def legal_actions(room: Room, actor_id: int) -> set[Action]:
    """Actions that would succeed for the actor this turn.

    Moving onto an opposing actor is a legal melee attack; moving onto
    a same-faction actor, an obstacle, or out of bounds is not.
    """
    actor = room.actor(actor_id)
    if not actor.alive:
        raise UnknownActorError(f"actor {actor_id} is dead")
    legal = set()
    for d in range(8):
        dx, dy = DIRECTIONS[d]
        tx, ty = actor.x + dx, actor.y + dy
        if not room.passable(tx, ty):
            continue
        other = room.actor_at(tx, ty)
        if other is not None and other.faction is actor.faction:
            continue
        legal.add(Action(ActionKind.MOVE, d))
    if actor.inventory.potion is not None:
        legal.add(Action(ActionKind.USE_POTION))
    if actor.inventory.ranged is not None:
        for d in range(8):
            if _ray_target(room, actor, d) is not None:
                legal.add(Action(ActionKind.RANGED, d))
    return legal


def melee_damage(attacker: Actor, defender: ActorStats, rng: random.Random) -> int:
    """max(1, roll(1..W) + eff_atk - eff_def); W from the melee weapon,
    2 bare-handed."""
    weapon = attacker.inventory.melee
    power = WEAPON_POWER[weapon.tier_or_kind] if weapon else BARE_HANDS_POWER
    roll = rng.randint(1, power)
    return max(1, roll + attacker.stats.eff_atk - defender.eff_def)


def ranged_damage(attacker: Actor, defender: ActorStats, rng: random.Random) -> int:
    """Same shape as melee damage with DEX in place of ATK; requires a
    ranged weapon."""
    weapon = attacker.inventory.ranged
    if weapon is None:
        raise EnvError("ranged attack without a ranged weapon")
    power = WEAPON_POWER[weapon.tier_or_kind]
    roll = rng.randint(1, power)
    return max(1, roll + attacker.stats.eff_dex - defender.eff_def)


def use_potion(actor: Actor) -> PotionEffect:
    """Apply and consume the held potion. Heal restores 10 hp capped at
    max; buff grants +2/+2 for 5 turns, resetting (not stacking) any
    active buff."""
    potion = actor.inventory.potion
    if potion is None:
        raise EnvError("no potion in inventory")
    actor.inventory.potion = None
    if potion.tier_or_kind == POTION_HEAL:
        before = actor.stats.hp
        actor.stats.hp = min(actor.stats.max_hp, before + HEAL_AMOUNT)
        return PotionEffect(POTION_HEAL, hp_restored=actor.stats.hp - before)
    actor.stats.buff_turns_left = BUFF_TURNS
    return PotionEffect(POTION_BUFF, buff_turns=BUFF_TURNS)


def _end_turn(room: Room, actor: Actor):
    room.turn_count += 1
    if actor.stats.buff_turns_left > 0:
        actor.stats.buff_turns_left -= 1


def _resolve_hit(room: Room, actor: Actor, target: Actor, damage: int,
                 outcome: TurnOutcome, kind: str):
    target.stats.hp = max(0, target.stats.hp - damage)
    outcome.damage_dealt = damage
    outcome.events.append({
        "type": kind, "attacker": actor.actor_id, "target": target.actor_id,
        "damage": damage, "target_hp": target.stats.hp,
    })
    if not target.alive:
        outcome.events.append({"type": "death", "actor": target.actor_id})
        if not room.opponents_of(actor.faction):
            outcome.episode_status = EpisodeStatus.ACTOR_WON


def apply_action(room: Room, actor_id: int, action: Action,
                 rng: random.Random) -> TurnOutcome:
    """Resolve one action for one actor, mutating the room.

    Illegal actions leave the room unchanged but still consume the
    turn. A successful potion is the only action that does not consume
    the turn. The actor's buff ticks down when its turn ends.
    """
    actor = room.actor(actor_id)
    if not actor.alive:
        raise UnknownActorError(f"actor {actor_id} is dead")

    if action not in legal_actions(room, actor_id):
        outcome = TurnOutcome(legal=False)
        _end_turn(room, actor)
        return outcome

    outcome = TurnOutcome(legal=True)
    if action.kind is ActionKind.USE_POTION:
        effect = use_potion(actor)
        outcome.turn_consumed = False
        outcome.events.append({
            "type": "potion", "actor": actor.actor_id, "kind": effect.kind,
            "hp_restored": effect.hp_restored,
        })
        return outcome

    if action.kind is ActionKind.MOVE:
        dx, dy = DIRECTIONS[action.direction]
        tx, ty = actor.x + dx, actor.y + dy
        target = room.actor_at(tx, ty)
        if target is None:
            actor.x, actor.y = tx, ty
            outcome.events.append({"type": "move", "actor": actor.actor_id,
                                   "to": [tx, ty]})
            item = room.loot.pop((tx, ty), None)
            if item is not None:
                replaced = actor.inventory.store(item)
                outcome.events.append({
                    "type": "pickup", "actor": actor.actor_id,
                    "item": item_code(item),
                    "replaced": item_code(replaced) if replaced else None,
                })
        else:
            damage = melee_damage(actor, target.stats, rng)
            _resolve_hit(room, actor, target, damage, outcome, "melee")
    else:  # ranged
        target = _ray_target(room, actor, action.direction)
        damage = ranged_damage(actor, target.stats, rng)
        _resolve_hit(room, actor, target, damage, outcome, "ranged")

    _end_turn(room, actor)
    return outcome


def pass_turn(room: Room, actor_id: int):
    """Consume a turn without acting (an actor with no legal actions
    still ends its turn, so its buff ticks down)."""
    actor = room.actor(actor_id)
    if not actor.alive:
        raise UnknownActorError(f"actor {actor_id} is dead")
    _end_turn(room, actor)


def item_code(item: ItemKind) -> str:
    """Short stable name used in events and snapshots, e.g. 'melee2',
    'heal', 'buff'."""
    if item.category is ItemCategory.POTION:
        return "heal" if item.tier_or_kind == POTION_HEAL else "buff"
    return f"{item.category.value}{item.tier_or_kind}"
