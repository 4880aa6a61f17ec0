import random

import pytest

from dungeonrl.env import (
    Actor,
    ActorSpec,
    ActorStats,
    Faction,
    Inventory,
    Room,
    RoomGenParams,
)


def make_actor(actor_id, faction, x, y, hp=20, max_hp=20, atk=3, def_=3, dex=3,
               melee=None, ranged=None, potion=None, buff_turns=0, class_name=""):
    return Actor(
        actor_id=actor_id,
        faction=faction,
        stats=ActorStats(hp=hp, max_hp=max_hp, atk=atk, def_=def_, dex=dex,
                         buff_turns_left=buff_turns),
        inventory=Inventory(melee=melee, ranged=ranged, potion=potion),
        x=x, y=y, class_name=class_name,
    )


def make_room(width=10, height=10, blocked=(), loot=None, actors=()):
    return Room(width=width, height=height, blocked=set(blocked),
                loot=dict(loot or {}), actors=list(actors))


def duel_room(width=10, height=10, agent_pos=(0, 0), enemy_pos=(9, 9),
              agent_kwargs=None, enemy_kwargs=None, **room_kwargs):
    """Standard two-actor fixture: NPC agent id 0 vs player-faction id 1."""
    agent = make_actor(0, Faction.NPC, *agent_pos, **(agent_kwargs or {}))
    enemy = make_actor(1, Faction.PLAYER, *enemy_pos, **(enemy_kwargs or {}))
    return make_room(width=width, height=height, actors=[agent, enemy],
                     **room_kwargs)


def default_gen_params(**overrides):
    base = dict(
        actors=(
            ActorSpec(Faction.NPC, atk=4, def_=3, dex=0, hp=20, class_name="warrior"),
            ActorSpec(Faction.PLAYER, atk=3, def_=3, dex=3, hp=20, class_name="opponent"),
        ),
        width=10, height=10, obstacle_fraction=0.0, loot_fraction=0.2,
        random_equipment=False,
    )
    base.update(overrides)
    return RoomGenParams(**base)


class FixedRolls:
    """rng stand-in whose randint returns scripted values (for exact
    damage-formula oracles)."""

    def __init__(self, *rolls):
        self.rolls = list(rolls)

    def randint(self, lo, hi):
        value = self.rolls.pop(0)
        assert lo <= value <= hi, f"scripted roll {value} outside [{lo}, {hi}]"
        return value


@pytest.fixture
def env_rng():
    return random.Random(1234)
