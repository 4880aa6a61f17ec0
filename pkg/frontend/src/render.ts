/**
 * DOM rendering: a pure projection of (snapshot, ui state) into the
 * container element. Rebuilt wholesale every time — state lives in the
 * snapshot, not in the DOM.
 */

import { DIRECTION_NAMES } from "./actions.js";
import { moveTargets, potionEnabled, rangedDirections } from "./affordances.js";
import type { GameEvent, InspectResult, Snapshot } from "./protocol.js";

export interface UiState {
  snapshot: Snapshot | null;
  log: string[];
  inspect: InspectResult["actor"] | null;
  rangedMode: boolean;
  notice: string | null;
  inputLocked: boolean;
}

const TILE_GLYPHS: Record<string, { glyph: string; cls: string; title: string }> = {
  "#": { glyph: "#", cls: "wall", title: "impassable" },
  ".": { glyph: "·", cls: "floor", title: "" },
  D: { glyph: "D", cls: "door", title: "door" },
  a: { glyph: "/", cls: "loot", title: "melee weapon (tier 1)" },
  b: { glyph: "/", cls: "loot tier2", title: "melee weapon (tier 2)" },
  c: { glyph: "/", cls: "loot tier3", title: "melee weapon (tier 3)" },
  d: { glyph: ")", cls: "loot", title: "ranged weapon (tier 1)" },
  e: { glyph: ")", cls: "loot tier2", title: "ranged weapon (tier 2)" },
  f: { glyph: ")", cls: "loot tier3", title: "ranged weapon (tier 3)" },
  h: { glyph: "!", cls: "loot heal", title: "heal potion" },
  p: { glyph: "!", cls: "loot buff", title: "buff potion" },
};

const ACTOR_GLYPHS: Record<string, { glyph: string; cls: string }> = {
  player: { glyph: "@", cls: "player" },
  archer: { glyph: "A", cls: "npc archer" },
  warrior: { glyph: "W", cls: "npc warrior" },
  ranger: { glyph: "R", cls: "npc ranger" },
};

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function describeEvent(event: GameEvent): string {
  switch (event.type) {
    case "move":
      return `actor ${event.actor} moves to ${(event.to as number[]).join(",")}`;
    case "pickup":
      return `actor ${event.actor} picks up ${event.item}` +
        (event.replaced ? ` (drops ${event.replaced})` : "");
    case "melee":
      return `actor ${event.attacker} hits ${event.target} for ${event.damage} (hp ${event.target_hp})`;
    case "ranged":
      return `actor ${event.attacker} shoots ${event.target} for ${event.damage} (hp ${event.target_hp})`;
    case "potion":
      return event.kind === 1
        ? `actor ${event.actor} drinks a heal potion (+${event.hp_restored} hp)`
        : `actor ${event.actor} drinks a buff potion`;
    case "death":
      return `actor ${event.actor} dies`;
    case "room_transition":
      return `you pass through the door into room ${(event.room_index as number) + 1}`;
    case "level_cleared":
      return `level ${event.level} cleared!`;
    case "level_start":
      return `level ${event.level} begins (${event.rooms} room${event.rooms === 1 ? "" : "s"})`;
    case "run_end":
      return `run over: ${event.status}`;
    default:
      return JSON.stringify(event);
  }
}

export function render(root: HTMLElement, state: UiState): void {
  root.textContent = "";
  const snapshot = state.snapshot;
  if (!snapshot) {
    root.appendChild(el("div", "banner", state.notice ?? "connecting…"));
    return;
  }

  const main = el("div", "layout");

  // status bar
  const player = snapshot.actors.find((a) => a.faction === "player");
  const status = el("div", "status-bar");
  status.appendChild(el("span", "level", `level ${snapshot.level}`));
  status.appendChild(el("span", "room",
    `room ${snapshot.room_index + 1}/${snapshot.rooms_in_level}`));
  if (player) {
    status.appendChild(el("span", "hp", `hp ${player.hp}/${player.max_hp}`));
    if (player.buffed) status.appendChild(el("span", "buff", "buffed"));
  }
  status.appendChild(el("span", "npcs", `enemies left ${snapshot.npcs_remaining}`));
  if (state.rangedMode) status.appendChild(el("span", "ranged-mode", "RANGED — pick a direction"));
  main.appendChild(status);

  // grid
  const gridBox = el("div", "grid");
  gridBox.style.gridTemplateColumns = `repeat(${snapshot.grid.width}, 1.6em)`;
  const targets = new Map(moveTargets(snapshot).map((t) => [`${t.x},${t.y}`, t.index]));
  const actorMap = new Map(snapshot.actors.map((a) => [`${a.x},${a.y}`, a]));
  for (let y = 0; y < snapshot.grid.height; y += 1) {
    for (let x = 0; x < snapshot.grid.width; x += 1) {
      const ch = snapshot.grid.rows[y][x];
      const tile = TILE_GLYPHS[ch] ?? { glyph: "?", cls: "unknown", title: ch };
      const cell = el("div", `cell ${tile.cls}`, tile.glyph);
      cell.title = tile.title;
      const actor = actorMap.get(`${x},${y}`);
      if (actor) {
        const look = ACTOR_GLYPHS[actor.class] ?? { glyph: "N", cls: "npc" };
        cell.textContent = look.glyph;
        cell.className = `cell actor ${look.cls}` + (actor.buffed ? " buffed" : "");
        cell.title = `${actor.class} (${actor.hp}/${actor.max_hp} hp)`;
        cell.dataset.actorId = String(actor.id);
      }
      if (targets.has(`${x},${y}`)) {
        cell.classList.add("highlight");
        cell.dataset.moveIndex = String(targets.get(`${x},${y}`));
      }
      cell.dataset.x = String(x);
      cell.dataset.y = String(y);
      gridBox.appendChild(cell);
    }
  }
  main.appendChild(gridBox);

  // controls: potion button and a ranged direction pad
  const controls = el("div", "controls");
  const potion = el("button", "potion", "drink potion (p)") as HTMLButtonElement;
  potion.disabled = !potionEnabled(snapshot) || state.inputLocked ||
    snapshot.status !== "active";
  potion.dataset.actionIndex = "8";
  controls.appendChild(potion);
  const pad = el("div", "ranged-pad");
  const legalDirs = new Set(rangedDirections(snapshot));
  DIRECTION_NAMES.forEach((name, direction) => {
    const btn = el("button", "ranged-dir", `➳${name}`) as HTMLButtonElement;
    btn.disabled = !legalDirs.has(direction) || state.inputLocked ||
      snapshot.status !== "active";
    btn.dataset.actionIndex = String(9 + direction);
    pad.appendChild(btn);
  });
  controls.appendChild(pad);
  main.appendChild(controls);

  // inventory
  const inv = snapshot.player_inventory;
  const invBox = el("div", "inventory");
  invBox.appendChild(el("span", "slot", `melee: ${inv.melee ?? "—"}`));
  invBox.appendChild(el("span", "slot", `ranged: ${inv.ranged ?? "—"}`));
  invBox.appendChild(el("span", "slot", `potion: ${inv.potion ?? "—"}`));
  main.appendChild(invBox);

  // inspect panel
  if (state.inspect) {
    const a = state.inspect;
    const panel = el("div", "inspect-panel");
    panel.appendChild(el("h3", undefined, a.class));
    panel.appendChild(el("div", "stat hp", `HP ${a.hp}/${a.max_hp}`));
    panel.appendChild(el("div", "stat atk", `ATK ${a.atk}`));
    panel.appendChild(el("div", "stat def", `DEF ${a.def}`));
    panel.appendChild(el("div", "stat dex", `DEX ${a.dex}`));
    if (a.buff_turns > 0) {
      panel.appendChild(el("div", "stat buff", `buffed for ${a.buff_turns} turns`));
    }
    panel.appendChild(el("div", "stat equipment",
      `carrying: ${[a.equipment.melee, a.equipment.ranged, a.equipment.potion]
        .filter(Boolean).join(", ") || "nothing"}`));
    main.appendChild(panel);
  }

  // event log
  const logBox = el("div", "event-log");
  for (const line of state.log.slice(-12)) {
    logBox.appendChild(el("div", "log-line", line));
  }
  main.appendChild(logBox);

  if (state.notice) main.appendChild(el("div", "banner notice", state.notice));

  // run-over overlay
  if (snapshot.status !== "active") {
    const overlay = el("div", `overlay ${snapshot.status}`);
    overlay.appendChild(el("h1", undefined,
      snapshot.status === "won" ? "You conquered the dungeon!" : "You have fallen."));
    overlay.appendChild(el("p", undefined,
      snapshot.status === "won"
        ? "All ten levels cleared."
        : `You reached level ${snapshot.level}.`));
    const again = el("button", "new-run", "descend again") as HTMLButtonElement;
    overlay.appendChild(again);
    main.appendChild(overlay);
  }

  root.appendChild(main);
}
