"""Declarative training configuration.

One JSON file fully describes a training run so every hyperparameter
choice is auditable. Field defaults reproduce the published setup:
learning rates 1e-6 / 1e-4, clip 0.2, discount 0.99, 10-episode
rollouts of at most 100 steps, and the five standard curriculum
phases. Parsing is total: every malformed field is reported by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .arena import CLASS_PRESETS, TRAINING_OPPONENT
from .env import MAX_HP, ActorSpec, Faction, RoomGenParams
from .rewards import DEFAULT_PHASES
from .training import EPISODES_PER_BATCH, Hyperparams


class ConfigError(Exception):
    """Invalid configuration; message lists one diagnostic per line."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(self.diagnostics))


@dataclass
class RoomConfig:
    width: tuple = (4, 10)
    height: tuple = (4, 10)
    obstacle_fraction: tuple = (0.0, 0.15)
    random_equipment: bool = True


@dataclass
class TrainConfig:
    class_preset: str = "warrior"
    seed: int = 0
    total_steps: int = 100_000
    width_scale: float = 0.25
    out_dir: str = "run"
    workers: int = 1
    curriculum_enabled: bool = True
    curriculum_fractions: tuple = tuple(p.duration_fraction for p in DEFAULT_PHASES)
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    room: RoomConfig = field(default_factory=RoomConfig)
    episodes_per_batch: int = EPISODES_PER_BATCH
    max_episode_steps: int = 100
    opponent_uniform_over_all: bool = False
    checkpoint_every: int = 50
    log_every: int = 10

    def schedule(self) -> tuple:
        """Active curriculum: the five standard phases with configured
        durations, or a single full-difficulty phase when disabled."""
        if not self.curriculum_enabled:
            return (replace(DEFAULT_PHASES[-1], duration_fraction=1.0),)
        return tuple(
            replace(phase, duration_fraction=frac)
            for phase, frac in zip(DEFAULT_PHASES, self.curriculum_fractions)
        )

    def base_gen_params(self) -> RoomGenParams:
        klass = CLASS_PRESETS[self.class_preset]
        agent = ActorSpec(Faction.NPC, atk=klass.atk, def_=klass.def_,
                          dex=klass.dex, hp=MAX_HP, class_name=klass.name)
        enemy = ActorSpec(Faction.PLAYER, atk=TRAINING_OPPONENT.atk,
                          def_=TRAINING_OPPONENT.def_, dex=TRAINING_OPPONENT.dex,
                          hp=MAX_HP, class_name="opponent")
        return RoomGenParams(
            actors=(agent, enemy),
            width=self.room.width,
            height=self.room.height,
            obstacle_fraction=self.room.obstacle_fraction,
            loot_fraction=0.2,
            random_equipment=self.room.random_equipment,
        )


def _want(errors, data, key, types, where=""):
    name = f"{where}{key}"
    if key not in data:
        return None
    value = data[key]
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        errors.append(f"{name}: expected {types}, got bool")
        return None
    if not isinstance(value, types):
        errors.append(f"{name}: expected {getattr(types, '__name__', types)}, got {type(value).__name__}")
        return None
    return value


def _int_or_pair(errors, data, key, where):
    value = data.get(key)
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return value
    if isinstance(value, list) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return tuple(value)
    errors.append(f"{where}{key}: expected number or [lo, hi] pair")
    return None


def parse_train_config(text: str) -> TrainConfig:
    """Parse and fully validate a JSON training config."""
    errors = []
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError(["config root must be a JSON object"])

    cfg = TrainConfig()
    known = {"class_preset", "seed", "total_steps", "width_scale", "out_dir",
             "workers", "curriculum", "hyperparams", "room",
             "episodes_per_batch", "max_episode_steps",
             "opponent_uniform_over_all", "checkpoint_every", "log_every"}
    for key in data:
        if key not in known:
            errors.append(f"{key}: unknown field")

    preset = _want(errors, data, "class_preset", str)
    if preset is not None:
        if preset not in CLASS_PRESETS:
            errors.append(f"class_preset: unknown class {preset!r}, expected one of "
                          f"{sorted(CLASS_PRESETS)}")
        else:
            cfg.class_preset = preset
    for key in ("seed", "total_steps", "workers", "episodes_per_batch",
                "max_episode_steps", "checkpoint_every", "log_every"):
        value = _want(errors, data, key, int)
        if value is not None:
            minimum = {"seed": 0, "total_steps": 1, "workers": 1,
                       "episodes_per_batch": 1, "max_episode_steps": 1,
                       "checkpoint_every": 0, "log_every": 0}[key]
            if value < minimum:
                errors.append(f"{key}: must be >= {minimum}, got {value}")
            else:
                setattr(cfg, key, value)
    scale = _want(errors, data, "width_scale", (int, float))
    if scale is not None:
        if not (0 < scale <= 1):
            errors.append(f"width_scale: must be in (0, 1], got {scale}")
        else:
            cfg.width_scale = float(scale)
    out_dir = _want(errors, data, "out_dir", str)
    if out_dir is not None:
        cfg.out_dir = out_dir
    flag = _want(errors, data, "opponent_uniform_over_all", bool)
    if flag is not None:
        cfg.opponent_uniform_over_all = flag

    curriculum = _want(errors, data, "curriculum", dict)
    if curriculum is not None:
        enabled = _want(errors, curriculum, "enabled", bool, "curriculum.")
        if enabled is not None:
            cfg.curriculum_enabled = enabled
        fractions = _want(errors, curriculum, "fractions", list, "curriculum.")
        if fractions is not None:
            if len(fractions) != len(DEFAULT_PHASES) or not all(
                    isinstance(f, (int, float)) and not isinstance(f, bool) and f > 0
                    for f in fractions):
                errors.append(f"curriculum.fractions: expected {len(DEFAULT_PHASES)} "
                              "positive numbers")
            elif abs(sum(fractions) - 1.0) > 1e-9:
                errors.append(f"curriculum.fractions: must sum to 1, got {sum(fractions)}")
            else:
                cfg.curriculum_fractions = tuple(float(f) for f in fractions)

    hyper = _want(errors, data, "hyperparams", dict)
    if hyper is not None:
        hp_fields = {"lr_policy": float, "lr_baseline": float,
                     "clip_epsilon": float, "gamma": float,
                     "entropy_coeff": float, "epochs_per_batch": int,
                     "max_grad_norm": float}
        for key in hyper:
            if key not in hp_fields:
                errors.append(f"hyperparams.{key}: unknown field")
        hp = cfg.hyperparams
        for key, kind in hp_fields.items():
            types = int if kind is int else (int, float)
            value = _want(errors, hyper, key, types, "hyperparams.")
            if value is None:
                continue
            if value <= 0 and key != "entropy_coeff":
                errors.append(f"hyperparams.{key}: must be positive, got {value}")
            elif key == "gamma" and not (0 < value <= 1):
                errors.append(f"hyperparams.gamma: must be in (0, 1], got {value}")
            else:
                setattr(hp, key, kind(value))

    room = _want(errors, data, "room", dict)
    if room is not None:
        for key in room:
            if key not in ("width", "height", "obstacle_fraction", "random_equipment"):
                errors.append(f"room.{key}: unknown field")
        for key, limit in (("width", (2, 10)), ("height", (2, 10))):
            value = _int_or_pair(errors, room, key, "room.")
            if value is not None:
                bounds = value if isinstance(value, tuple) else (value, value)
                if not all(limit[0] <= v <= limit[1] and float(v).is_integer() for v in bounds):
                    errors.append(f"room.{key}: sides must be integers in "
                                  f"[{limit[0]}, {limit[1]}], got {value}")
                else:
                    setattr(cfg.room, key,
                            tuple(int(v) for v in bounds) if isinstance(value, tuple) else int(value))
        frac = _int_or_pair(errors, room, "obstacle_fraction", "room.")
        if frac is not None:
            bounds = frac if isinstance(frac, tuple) else (frac, frac)
            if not all(0.0 <= v <= 1.0 for v in bounds):
                errors.append(f"room.obstacle_fraction: must lie in [0, 1], got {frac}")
            else:
                cfg.room.obstacle_fraction = frac
        eq = _want(errors, room, "random_equipment", bool, "room.")
        if eq is not None:
            cfg.room.random_equipment = eq

    if errors:
        raise ConfigError(errors)
    return cfg


def load_train_config(path) -> TrainConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file not found: {path}"])
    return parse_train_config(path.read_text())
