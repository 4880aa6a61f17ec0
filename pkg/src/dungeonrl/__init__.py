"""Roguelike NPC training and play: seedable room simulation, recurrent
policy networks with a from-scratch autodiff engine, clipped-surrogate
policy optimization over a five-phase curriculum, head-to-head
evaluation, and a dungeon game server for human play."""

__version__ = "0.1.0"
