"use strict";
/**
 * Wire types for the game server protocol (docs/protocol.md, v1).
 * The client treats the server as the single source of truth: nothing
 * here re-implements game rules, it only mirrors and validates shapes.
 */
Object.defineProperty(exports, "__esModule", { value: true });
exports.outbound = exports.PROTOCOL_VERSION = void 0;
exports.validateServerMessage = validateServerMessage;
exports.parseServerMessage = parseServerMessage;
exports.PROTOCOL_VERSION = 1;
/** Outbound builders keep call sites typo-free. */
exports.outbound = {
    newRun(seed, difficulty) {
        return difficulty ? { type: "new_run", seed, difficulty } : { type: "new_run", seed };
    },
    action(index) {
        return { type: "action", index };
    },
    inspect(actorId) {
        return { type: "inspect", actor_id: actorId };
    },
    resume(session) {
        return { type: "resume", session };
    },
    resign() {
        return { type: "resign" };
    },
};
function isObject(v) {
    return typeof v === "object" && v !== null;
}
/**
 * Returns the list of schema problems for an inbound message; empty
 * means the message is safe to consume. Unknown message types are a
 * problem (the UI surfaces them instead of guessing).
 */
function validateServerMessage(raw) {
    if (!isObject(raw))
        return ["message is not an object"];
    const problems = [];
    switch (raw.type) {
        case "snapshot": {
            for (const key of ["level", "room_index", "rooms_in_level", "turn", "npcs_remaining"]) {
                if (typeof raw[key] !== "number")
                    problems.push(`snapshot.${key} must be a number`);
            }
            if (raw.status !== "active" && raw.status !== "won" && raw.status !== "lost") {
                problems.push("snapshot.status must be active|won|lost");
            }
            if (!isObject(raw.grid)) {
                problems.push("snapshot.grid missing");
            }
            else {
                const grid = raw.grid;
                if (typeof grid.width !== "number" || typeof grid.height !== "number") {
                    problems.push("snapshot.grid width/height must be numbers");
                }
                if (!Array.isArray(grid.rows) || grid.rows.some((r) => typeof r !== "string")) {
                    problems.push("snapshot.grid.rows must be strings");
                }
                else if (typeof grid.height === "number" && grid.rows.length !== grid.height) {
                    problems.push("snapshot.grid.rows length must equal height");
                }
            }
            if (!Array.isArray(raw.actors)) {
                problems.push("snapshot.actors must be an array");
            }
            else {
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
            if (!isObject(raw.player_inventory))
                problems.push("snapshot.player_inventory missing");
            return problems;
        }
        case "events":
            if (!Array.isArray(raw.events) || raw.events.some((e) => !isObject(e) || typeof e.type !== "string")) {
                problems.push("events.events must be a list of typed objects");
            }
            return problems;
        case "inspect_result": {
            if (!isObject(raw.actor))
                return ["inspect_result.actor missing"];
            const actor = raw.actor;
            for (const key of ["hp", "max_hp", "atk", "def", "dex"]) {
                if (typeof actor[key] !== "number")
                    problems.push(`inspect_result.actor.${key} must be a number`);
            }
            if (typeof actor.class !== "string")
                problems.push("inspect_result.actor.class must be a string");
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
function parseServerMessage(text) {
    let raw;
    try {
        raw = JSON.parse(text);
    }
    catch {
        return { message: null, problems: ["message is not JSON"] };
    }
    const problems = validateServerMessage(raw);
    if (problems.length > 0)
        return { message: null, problems };
    return { message: raw, problems: [] };
}
