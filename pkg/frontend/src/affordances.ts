/**
 * Turns the server's legal-action list into concrete click/highlight
 * targets. Always derived from snapshot.legal_actions — the client
 * never infers legality on its own.
 */

import { DIRECTIONS, USE_POTION_INDEX } from "./actions.js";
import type { ActorView, Snapshot } from "./protocol.js";

export interface MoveTarget {
  index: number;
  x: number;
  y: number;
}

export function playerOf(snapshot: Snapshot): ActorView | null {
  return snapshot.actors.find((a) => a.faction === "player") ?? null;
}

/** Tiles the player may step onto (or melee into) this turn. */
export function moveTargets(snapshot: Snapshot): MoveTarget[] {
  const player = playerOf(snapshot);
  if (!player) return [];
  const targets: MoveTarget[] = [];
  for (const index of snapshot.legal_actions) {
    if (index < 0 || index > 7) continue;
    const [dx, dy] = DIRECTIONS[index];
    targets.push({ index, x: player.x + dx, y: player.y + dy });
  }
  return targets;
}

/** Directions (0-7) with a legal ranged attack this turn. */
export function rangedDirections(snapshot: Snapshot): number[] {
  return snapshot.legal_actions
    .filter((i) => i >= 9 && i <= 16)
    .map((i) => i - 9);
}

export function potionEnabled(snapshot: Snapshot): boolean {
  return snapshot.legal_actions.includes(USE_POTION_INDEX);
}

/** Map a clicked tile to the action it affords, if any. */
export function actionForTileClick(snapshot: Snapshot, x: number, y: number): number | null {
  const target = moveTargets(snapshot).find((t) => t.x === x && t.y === y);
  return target ? target.index : null;
}

export function actorAt(snapshot: Snapshot, x: number, y: number): ActorView | null {
  return snapshot.actors.find((a) => a.x === x && a.y === y) ?? null;
}
