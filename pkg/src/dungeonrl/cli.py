"""Command-line entry point: train / eval / serve / export-metrics,
plus a headless play mode.

Training runs are declared in a JSON config file (see docs and the
config module) so every published-value default stays auditable.
Set DUNGEONRL_LOG=debug|info|warning to control verbosity.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np


def _setup_logging():
    level = os.environ.get("DUNGEONRL_LOG", "info").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_train(args) -> int:
    from .config import ConfigError, load_train_config
    from .training import TrainingError, train
    try:
        config = load_train_config(args.config)
    except ConfigError as exc:
        for line in exc.diagnostics:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    try:
        result = train(config, resume=args.resume)
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return 1
    print(f"trained {result['batches']} batches ({result['steps']} steps); "
          f"model at {result['policy_path']}")
    return 0


def cmd_eval(args) -> int:
    from .arena import (CLASS_PRESETS, TRAINING_OPPONENT, NetworkPolicy,
                        RandomPolicy, evaluate)
    from .env import ActorSpec, Faction, RoomGenParams
    from .nn import ModelFormatError, load_model
    if args.episodes < 1:
        print("eval error: --episodes must be >= 1", file=sys.stderr)
        return 2
    try:
        params_a, _, meta_a = load_model(args.a)
    except (OSError, ModelFormatError) as exc:
        print(f"eval error: cannot load model A: {exc}", file=sys.stderr)
        return 2
    policy_a = NetworkPolicy(params_a)
    if args.b:
        try:
            params_b, _, _ = load_model(args.b)
        except (OSError, ModelFormatError) as exc:
            print(f"eval error: cannot load model B: {exc}", file=sys.stderr)
            return 2
        policy_b = NetworkPolicy(params_b)
    else:
        policy_b = RandomPolicy()

    klass = CLASS_PRESETS.get(meta_a.get("class_preset", ""),
                              CLASS_PRESETS["ranger"])
    agent = ActorSpec(Faction.NPC, atk=klass.atk, def_=klass.def_, dex=klass.dex,
                      hp=args.agent_hp, class_name=klass.name)
    enemy = ActorSpec(Faction.PLAYER, atk=TRAINING_OPPONENT.atk,
                      def_=TRAINING_OPPONENT.def_, dex=TRAINING_OPPONENT.dex,
                      hp=args.enemy_hp, class_name="opponent")
    gen = RoomGenParams(actors=(agent, enemy), width=(4, 10), height=(4, 10),
                        obstacle_fraction=(0.0, 0.15), loot_fraction=0.2,
                        random_equipment=True)
    report = evaluate(policy_a, policy_b, args.episodes, gen, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_csv())
    print(report.summary())
    print(f"report written to {out}")
    return 0


def cmd_serve(args) -> int:
    from .server import serve
    from .service import ServiceError
    try:
        serve(args.models, args.port, ui_dir=args.ui)
    except ServiceError as exc:
        print(f"serve error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"serve error: cannot bind port {args.port}: {exc}", file=sys.stderr)
        return 2
    return 0


def cmd_play(args) -> int:
    from .server import headless_play
    from .service import ServiceError
    try:
        headless_play(args.models, seed=args.seed)
    except ServiceError as exc:
        print(f"play error: {exc}", file=sys.stderr)
        return 2
    return 0


def cmd_export_metrics(args) -> int:
    if args.window < 1:
        print("export error: --window must be >= 1", file=sys.stderr)
        return 2
    path = Path(args.inp)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return 2
    if not rows:
        print(f"export error: {path} holds no metric rows", file=sys.stderr)
        return 2
    required = {"batch", "phase", "mean_reward", "entropy"}
    missing = required - set(rows[0])
    if missing:
        print(f"export error: {path} missing columns {sorted(missing)}", file=sys.stderr)
        return 2

    batches = [int(r["batch"]) for r in rows]
    phases = [int(r["phase"]) for r in rows]
    reward = np.array([float(r["mean_reward"]) for r in rows])
    entropy = np.array([float(r["entropy"]) for r in rows])

    def moving_average(series, window):
        out = np.empty_like(series)
        cum = np.cumsum(series)
        for i in range(len(series)):
            lo = max(0, i - window + 1)
            total = cum[i] - (cum[lo - 1] if lo > 0 else 0.0)
            out[i] = total / (i - lo + 1)
        return out

    smooth_r = moving_average(reward, args.window)
    smooth_e = moving_average(entropy, args.window)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "smoothed.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch", "mean_reward_smoothed", "entropy_smoothed"])
        for b, r, e in zip(batches, smooth_r, smooth_e):
            writer.writerow([b, f"{r:.6f}", f"{e:.6f}"])
    with open(out_dir / "phase_boundaries.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch", "phase"])
        for i in range(1, len(phases)):
            if phases[i] != phases[i - 1]:
                writer.writerow([batches[i], phases[i]])
    print(f"wrote {out_dir / 'smoothed.csv'} and {out_dir / 'phase_boundaries.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dungeonrl",
        description="Train, evaluate, and serve roguelike NPC policies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run a training config")
    p.add_argument("--config", required=True, help="path to JSON training config")
    p.add_argument("--resume", action="store_true",
                   help="continue from the latest checkpoint in out_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="head-to-head evaluation")
    p.add_argument("--a", required=True, help="model file for side A")
    p.add_argument("--b", default=None, help="model file for side B (default: random mover)")
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV report path")
    p.add_argument("--agent-hp", type=int, default=20)
    p.add_argument("--enemy-hp", type=int, default=20)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="host the playable dungeon")
    p.add_argument("--models", required=True, help="directory with archer/warrior/ranger .model files")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--ui", default="frontend/dist", help="static UI bundle directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("play", help="headless terminal play (no UI)")
    p.add_argument("--models", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("export-metrics", help="smooth training metrics for plotting")
    p.add_argument("--in", dest="inp", required=True, help="metrics.csv from training")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--window", type=int, default=10)
    p.set_defaults(func=cmd_export_metrics)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
