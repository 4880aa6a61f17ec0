"use strict";
/**
 * Browser entry point: wires the protocol client, keyboard and pointer
 * input, and the renderer together. Events from the server are played
 * into the log in order and input stays locked until the snapshot that
 * follows them arrives.
 */
Object.defineProperty(exports, "__esModule", { value: true });
const actions_js_1 = require("./actions.js");
const affordances_js_1 = require("./affordances.js");
const client_js_1 = require("./client.js");
const protocol_js_1 = require("./protocol.js");
const render_js_1 = require("./render.js");
const state = {
    snapshot: null,
    log: [],
    inspect: null,
    rangedMode: false,
    notice: null,
    inputLocked: false,
};
const root = document.getElementById("app");
if (!root)
    throw new Error("missing #app container");
function draw() {
    (0, render_js_1.render)(root, state);
}
function wsUrl() {
    const proto = location.protocol === "https:" ? "wss" : "ws";
    return `${proto}://${location.host}/ws`;
}
const client = new client_js_1.GameClient(wsUrl(), {
    onMessage(message) {
        switch (message.type) {
            case "snapshot":
                state.snapshot = message;
                state.inputLocked = false;
                state.notice = null;
                if (message.status !== "active")
                    state.rangedMode = false;
                break;
            case "events":
                for (const event of message.events)
                    state.log.push((0, render_js_1.describeEvent)(event));
                break;
            case "inspect_result":
                state.inspect = message.actor;
                state.inputLocked = false;
                break;
            case "error":
                state.inputLocked = false;
                if (message.code === "no_session") {
                    client.send(protocol_js_1.outbound.newRun(Date.now() % 1000000));
                }
                else {
                    state.notice = `${message.code}: ${message.message}`;
                }
                break;
        }
        draw();
    },
    onProblem(problems) {
        state.notice = `protocol problem: ${problems.join("; ")}`;
        state.inputLocked = false;
        draw();
    },
    onConnectionChange(connected) {
        state.notice = connected ? null : "connection lost — reconnecting…";
        if (connected && state.snapshot === null) {
            client.send(protocol_js_1.outbound.newRun(Date.now() % 1000000));
        }
        draw();
    },
}, (url) => new WebSocket(url));
function submit(index) {
    if (!state.snapshot || state.snapshot.status !== "active" || state.inputLocked)
        return;
    if (!state.snapshot.legal_actions.includes(index))
        return; // affordance-gated
    state.inputLocked = true;
    state.rangedMode = false;
    state.inspect = null;
    client.send(protocol_js_1.outbound.action(index));
    draw();
}
document.addEventListener("keydown", (ev) => {
    if (!state.snapshot)
        return;
    if ((0, actions_js_1.isRangedModeKey)(ev.key)) {
        state.rangedMode = !state.rangedMode;
        draw();
        return;
    }
    if ((0, actions_js_1.isCancelKey)(ev.key)) {
        state.rangedMode = false;
        state.inspect = null;
        draw();
        return;
    }
    const index = (0, actions_js_1.keyToActionIndex)(ev.key, state.rangedMode);
    if (index !== null) {
        ev.preventDefault();
        submit(index);
    }
});
document.addEventListener("click", (ev) => {
    const target = ev.target;
    if (!target || !state.snapshot)
        return;
    if (target.classList.contains("new-run")) {
        state.log = [];
        state.inspect = null;
        client.send(protocol_js_1.outbound.newRun(Date.now() % 1000000));
        return;
    }
    const actionIndex = target.dataset.actionIndex;
    if (actionIndex !== undefined && !target.disabled) {
        submit(Number(actionIndex));
        return;
    }
    if (target.classList.contains("cell")) {
        const x = Number(target.dataset.x);
        const y = Number(target.dataset.y);
        const move = (0, affordances_js_1.actionForTileClick)(state.snapshot, x, y);
        const actor = (0, affordances_js_1.actorAt)(state.snapshot, x, y);
        if (move !== null) {
            submit(move);
        }
        else if (actor && actor.faction === "npc") {
            state.inputLocked = true;
            client.send(protocol_js_1.outbound.inspect(actor.id));
            draw();
        }
    }
});
draw();
client.connect();
