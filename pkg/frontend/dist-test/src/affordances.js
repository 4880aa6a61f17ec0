"use strict";
/**
 * Turns the server's legal-action list into concrete click/highlight
 * targets. Always derived from snapshot.legal_actions — the client
 * never infers legality on its own.
 */
Object.defineProperty(exports, "__esModule", { value: true });
exports.playerOf = playerOf;
exports.moveTargets = moveTargets;
exports.rangedDirections = rangedDirections;
exports.potionEnabled = potionEnabled;
exports.actionForTileClick = actionForTileClick;
exports.actorAt = actorAt;
const actions_js_1 = require("./actions.js");
function playerOf(snapshot) {
    return snapshot.actors.find((a) => a.faction === "player") ?? null;
}
/** Tiles the player may step onto (or melee into) this turn. */
function moveTargets(snapshot) {
    const player = playerOf(snapshot);
    if (!player)
        return [];
    const targets = [];
    for (const index of snapshot.legal_actions) {
        if (index < 0 || index > 7)
            continue;
        const [dx, dy] = actions_js_1.DIRECTIONS[index];
        targets.push({ index, x: player.x + dx, y: player.y + dy });
    }
    return targets;
}
/** Directions (0-7) with a legal ranged attack this turn. */
function rangedDirections(snapshot) {
    return snapshot.legal_actions
        .filter((i) => i >= 9 && i <= 16)
        .map((i) => i - 9);
}
function potionEnabled(snapshot) {
    return snapshot.legal_actions.includes(actions_js_1.USE_POTION_INDEX);
}
/** Map a clicked tile to the action it affords, if any. */
function actionForTileClick(snapshot, x, y) {
    const target = moveTargets(snapshot).find((t) => t.x === x && t.y === y);
    return target ? target.index : null;
}
function actorAt(snapshot, x, y) {
    return snapshot.actors.find((a) => a.x === x && a.y === y) ?? null;
}
