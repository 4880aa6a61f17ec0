/**
 * Wire types for the game server protocol (docs/protocol.md, v1).
 * The client treats the server as the single source of truth: nothing
 * here re-implements game rules, it only mirrors and validates shapes.
 */

export const PROTOCOL_VERSION = 1;

export type RunStatus = "active" | "won" | "lost";

export interface ActorView {
  id: number;
  faction: "player" | "npc";
  class: string;
  x: number;
  y: number;
  hp: number;
  max_hp: number;
  buffed: boolean;
}

export interface Snapshot {
  type: "snapshot";
  protocol: number;
  session: string;
  level: number;
  room_index: number;
  rooms_in_level: number;
  status: RunStatus;
  turn: number;
  grid: { width: number; height: number; rows: string[] };
  actors: ActorView[];
  player_inventory: { melee: string | null; ranged: string | null; potion: string | null };
  legal_actions: number[];
  npcs_remaining: number;
}

export interface GameEvent {
  type: string;
  [key: string]: unknown;
}

export interface EventsMessage {
  type: "events";
  events: GameEvent[];
}

export interface InspectResult {
  type: "inspect_result";
  actor: {
    id: number;
    class: string;
    hp: number;
    max_hp: number;
    atk: number;
    def: number;
    dex: number;
    buff_turns: number;
    equipment: { melee: string | null; ranged: string | null; potion: string | null };
  };
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
  legal_actions?: number[];
}

export type ServerMessage = Snapshot | EventsMessage | InspectResult | ErrorMessage;

export type ClientMessage =
  | { type: "new_run"; seed: number; difficulty?: Record<string, unknown> }
  | { type: "action"; index: number }
  | { type: "inspect"; actor_id: number }
  | { type: "resume"; session: string }
  | { type: "resign" };

/** Outbound builders keep call sites typo-free. */
export const outbound = {
  newRun(seed: number, difficulty?: Record<string, unknown>): ClientMessage {
    return difficulty ? { type: "new_run", seed, difficulty } : { type: "new_run", seed };
  },
  action(index: number): ClientMessage {
    return { type: "action", index };
  },
  inspect(actorId: number): ClientMessage {
    return { type: "inspect", actor_id: actorId };
  },
  resume(session: string): ClientMessage {
    return { type: "resume", session };
  },
  resign(): ClientMessage {
    return { type: "resign" };
  },
};

function isObject(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null;
}

/**
 * Returns the list of schema problems for an inbound message; empty
 * means the message is safe to consume. Unknown message types are a
 * problem (the UI surfaces them instead of guessing).
 */
export function validateServerMessage(raw: unknown): string[] {
  if (!isObject(raw)) return ["message is not an object"];
  const problems: string[] = [];
  switch (raw.type) {
    case "snapshot": {
      for (const key of ["level", "room_index", "rooms_in_level", "turn", "npcs_remaining"]) {
        if (typeof raw[key] !== "number") problems.push(`snapshot.${key} must be a number`);
      }
      if (raw.status !== "active" && raw.status !== "won" && raw.status !== "lost") {
        problems.push("snapshot.status must be active|won|lost");
      }
      if (!isObject(raw.grid)) {
        problems.push("snapshot.grid missing");
      } else {
        const grid = raw.grid;
        if (typeof grid.width !== "number" || typeof grid.height !== "number") {
          problems.push("snapshot.grid width/height must be numbers");
        }
        if (!Array.isArray(grid.rows) || grid.rows.some((r) => typeof r !== "string")) {
          problems.push("snapshot.grid.rows must be strings");
        } else if (typeof grid.height === "number" && grid.rows.length !== grid.height) {
          problems.push("snapshot.grid.rows length must equal height");
        }
      }
      if (!Array.isArray(raw.actors)) {
        problems.push("snapshot.actors must be an array");
      } else {
        for (const actor of raw.actors) {
          if (!isObject(actor) || typeof actor.id !== "number" ||
              typeof actor.x !== "number" || typeof actor.y !== "number" ||
              typeof actor.hp !== "number") {
            problems.push("snapshot.actors entries need id/x/y/hp numbers");
            break;
          }
        }
      }
      if (!Array.isArray(raw.legal_actions) ||
          raw.legal_actions.some((i) => typeof i !== "number" || i < 0 || i > 16)) {
        problems.push("snapshot.legal_actions must be indices 0-16");
      }
      if (!isObject(raw.player_inventory)) problems.push("snapshot.player_inventory missing");
      return problems;
    }
    case "events":
      if (!Array.isArray(raw.events) || raw.events.some((e) => !isObject(e) || typeof e.type !== "string")) {
        problems.push("events.events must be a list of typed objects");
      }
      return problems;
    case "inspect_result": {
      if (!isObject(raw.actor)) return ["inspect_result.actor missing"];
      const actor = raw.actor;
      for (const key of ["hp", "max_hp", "atk", "def", "dex"]) {
        if (typeof actor[key] !== "number") problems.push(`inspect_result.actor.${key} must be a number`);
      }
      if (typeof actor.class !== "string") problems.push("inspect_result.actor.class must be a string");
      return problems;
    }
    case "error":
      if (typeof raw.code !== "string" || typeof raw.message !== "string") {
        problems.push("error needs code and message strings");
      }
      return problems;
    default:
      return [`unknown message type ${String(raw.type)}`];
  }
}

export function parseServerMessage(text: string): { message: ServerMessage | null; problems: string[] } {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return { message: null, problems: ["message is not JSON"] };
  }
  const problems = validateServerMessage(raw);
  if (problems.length > 0) return { message: null, problems };
  return { message: raw as ServerMessage, problems: [] };
}
