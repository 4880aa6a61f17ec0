/**
 * Browser entry point: wires the protocol client, keyboard and pointer
 * input, and the renderer together. Events from the server are played
 * into the log in order and input stays locked until the snapshot that
 * follows them arrives.
 */

import { isCancelKey, isRangedModeKey, keyToActionIndex } from "./actions.js";
import { actionForTileClick, actorAt } from "./affordances.js";
import { GameClient } from "./client.js";
import { outbound, ServerMessage } from "./protocol.js";
import { describeEvent, render, UiState } from "./render.js";

const state: UiState = {
  snapshot: null,
  log: [],
  inspect: null,
  rangedMode: false,
  notice: null,
  inputLocked: false,
};

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

function draw(): void {
  render(root as HTMLElement, state);
}

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

const client = new GameClient(
  wsUrl(),
  {
    onMessage(message: ServerMessage) {
      switch (message.type) {
        case "snapshot":
          state.snapshot = message;
          state.inputLocked = false;
          state.notice = null;
          if (message.status !== "active") state.rangedMode = false;
          break;
        case "events":
          for (const event of message.events) state.log.push(describeEvent(event));
          break;
        case "inspect_result":
          state.inspect = message.actor;
          state.inputLocked = false;
          break;
        case "error":
          state.inputLocked = false;
          if (message.code === "no_session") {
            client.send(outbound.newRun(Date.now() % 1_000_000));
          } else {
            state.notice = `${message.code}: ${message.message}`;
          }
          break;
      }
      draw();
    },
    onProblem(problems: string[]) {
      state.notice = `protocol problem: ${problems.join("; ")}`;
      state.inputLocked = false;
      draw();
    },
    onConnectionChange(connected: boolean) {
      state.notice = connected ? null : "connection lost — reconnecting…";
      if (connected && state.snapshot === null) {
        client.send(outbound.newRun(Date.now() % 1_000_000));
      }
      draw();
    },
  },
  (url) => new WebSocket(url) as unknown as import("./client.js").WebSocketLike,
);

function submit(index: number): void {
  if (!state.snapshot || state.snapshot.status !== "active" || state.inputLocked) return;
  if (!state.snapshot.legal_actions.includes(index)) return; // affordance-gated
  state.inputLocked = true;
  state.rangedMode = false;
  state.inspect = null;
  client.send(outbound.action(index));
  draw();
}

document.addEventListener("keydown", (ev) => {
  if (!state.snapshot) return;
  if (isRangedModeKey(ev.key)) {
    state.rangedMode = !state.rangedMode;
    draw();
    return;
  }
  if (isCancelKey(ev.key)) {
    state.rangedMode = false;
    state.inspect = null;
    draw();
    return;
  }
  const index = keyToActionIndex(ev.key, state.rangedMode);
  if (index !== null) {
    ev.preventDefault();
    submit(index);
  }
});

document.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement | null;
  if (!target || !state.snapshot) return;
  if (target.classList.contains("new-run")) {
    state.log = [];
    state.inspect = null;
    client.send(outbound.newRun(Date.now() % 1_000_000));
    return;
  }
  const actionIndex = target.dataset.actionIndex;
  if (actionIndex !== undefined && !(target as HTMLButtonElement).disabled) {
    submit(Number(actionIndex));
    return;
  }
  if (target.classList.contains("cell")) {
    const x = Number(target.dataset.x);
    const y = Number(target.dataset.y);
    const move = actionForTileClick(state.snapshot, x, y);
    const actor = actorAt(state.snapshot, x, y);
    if (move !== null) {
      submit(move);
    } else if (actor && actor.faction === "npc") {
      state.inputLocked = true;
      client.send(outbound.inspect(actor.id));
      draw();
    }
  }
});

draw();
client.connect();
