"""Network host for the dungeon: a WebSocket protocol endpoint plus the
static UI bundle, and a terminal read-eval loop for headless play.

The message schema is documented in docs/protocol.md. Each connected
client owns exactly one session; sessions never share game state, only
the loaded model parameters.
"""

from __future__ import annotations

import json
import logging
import uuid
from pathlib import Path

from aiohttp import WSMsgType, web

from .env import DIRECTION_NAMES
from .service import DifficultyConfig, GameSession, ModelStore, ServiceError

log = logging.getLogger("dungeonrl.server")

PROTOCOL_VERSION = 1


def _error_payload(code: str, message: str, **extra) -> dict:
    payload = {"type": "error", "code": code, "message": message}
    payload.update(extra)
    return payload


def _snapshot_payload(session_id: str, session: GameSession) -> dict:
    snap = session.snapshot()
    snap["type"] = "snapshot"
    snap["session"] = session_id
    snap["protocol"] = PROTOCOL_VERSION
    return snap


MAX_SESSIONS = 64


class GameServer:
    def __init__(self, model_dir, ui_dir=None):
        self.store = ModelStore(model_dir)
        self.ui_dir = Path(ui_dir) if ui_dir else None
        # insertion-ordered; oldest sessions are evicted past MAX_SESSIONS
        self.sessions: dict[str, GameSession] = {}

    # -- message handling, shared by transport and tests --

    def handle_message(self, state: dict, data: dict) -> list:
        """Process one client message; returns the ordered list of
        payloads to send back."""
        msg_type = data.get("type")
        if msg_type == "new_run":
            seed = data.get("seed", 0)
            if not isinstance(seed, int):
                return [_error_payload("bad_request", "seed must be an integer")]
            try:
                difficulty = DifficultyConfig.from_dict(data.get("difficulty") or {})
                session = GameSession(self.store, difficulty, seed)
            except (ServiceError, TypeError, ValueError) as exc:
                return [_error_payload("bad_request", str(exc))]
            session_id = uuid.uuid4().hex
            self.sessions[session_id] = session
            while len(self.sessions) > MAX_SESSIONS:
                self.sessions.pop(next(iter(self.sessions)))
            state["session_id"] = session_id
            return [_snapshot_payload(session_id, session)]

        if msg_type == "resume":
            wanted = data.get("session")
            session = self.sessions.get(wanted)
            if session is None:
                return [_error_payload("no_session",
                                       "unknown or expired session; send new_run")]
            state["session_id"] = wanted
            return [_snapshot_payload(wanted, session)]

        session_id = state.get("session_id")
        session = self.sessions.get(session_id)
        if session is None:
            return [_error_payload("no_session", "send new_run first")]

        if msg_type == "action":
            index = data.get("index")
            if not isinstance(index, int):
                return [_error_payload("bad_request", "action index must be an integer")]
            try:
                events = session.submit_action(index)
            except ServiceError as exc:
                return [_error_payload(exc.code, str(exc), **exc.extra)]
            return [{"type": "events", "events": events},
                    _snapshot_payload(session_id, session)]

        if msg_type == "inspect":
            try:
                view = session.inspect(data.get("actor_id"))
            except ServiceError as exc:
                return [_error_payload(exc.code, str(exc), **exc.extra)]
            return [{"type": "inspect_result", "actor": view}]

        if msg_type == "resign":
            events = session.resign()
            return [{"type": "events", "events": events},
                    _snapshot_payload(session_id, session)]

        return [_error_payload("bad_request", f"unknown message type {msg_type!r}")]

    # -- transport --

    async def websocket_handler(self, request):
        ws = web.WebSocketResponse()
        await ws.prepare(request)
        state = {}
        async for msg in ws:
            if msg.type != WSMsgType.TEXT:
                continue
            try:
                data = json.loads(msg.data)
            except json.JSONDecodeError:
                await ws.send_json(_error_payload("bad_request", "message is not JSON"))
                continue
            for payload in self.handle_message(state, data):
                await ws.send_json(payload)
        # sessions survive disconnects so a client can resume; stale ones
        # age out of the LRU ring instead
        return ws

    async def health_handler(self, request):
        return web.json_response({
            "status": "ok",
            "classes": list(self.store.policies),
            "protocol": PROTOCOL_VERSION,
            "active_sessions": len(self.sessions),
        })

    async def index_handler(self, request):
        if self.ui_dir and (self.ui_dir / "index.html").exists():
            return web.FileResponse(self.ui_dir / "index.html")
        return web.Response(
            text="dungeonrl server running; UI bundle not found "
                 "(build the frontend or connect via /ws)",
            content_type="text/plain")

    def build_app(self) -> web.Application:
        app = web.Application()
        app.router.add_get("/healthz", self.health_handler)
        app.router.add_get("/ws", self.websocket_handler)
        app.router.add_get("/", self.index_handler)
        if self.ui_dir and self.ui_dir.exists():
            app.router.add_static("/static", self.ui_dir)
        return app


def serve(model_dir, port: int, ui_dir=None, host: str = "127.0.0.1"):
    """Blocking entry point for the serve command."""
    server = GameServer(model_dir, ui_dir)
    log.info("serving on %s:%d", host, port)
    web.run_app(server.build_app(), host=host, port=port, print=None)


# ---------------------------------------------------------------------------
# headless terminal mode


_KEY_TO_ACTION = {name.lower(): i for i, name in enumerate(DIRECTION_NAMES)}
_KEY_TO_ACTION["p"] = 8
for _i, _name in enumerate(DIRECTION_NAMES):
    _KEY_TO_ACTION[f"r{_name.lower()}"] = 9 + _i


def render_text(snapshot: dict) -> str:
    grid = [list(row) for row in snapshot["grid"]["rows"]]
    glyphs = {"player": "@", "archer": "A", "warrior": "W", "ranger": "R"}
    for actor in snapshot["actors"]:
        grid[actor["y"]][actor["x"]] = glyphs.get(actor["class"], "N")
    lines = ["".join(row) for row in grid]
    inv = snapshot["player_inventory"]
    lines.append(f"level {snapshot['level']} room {snapshot['room_index'] + 1}/"
                 f"{snapshot['rooms_in_level']} status {snapshot['status']} "
                 f"npcs left {snapshot['npcs_remaining']}")
    player = next((a for a in snapshot["actors"] if a["class"] == "player"), None)
    if player:
        lines.append(f"hp {player['hp']}/{player['max_hp']} "
                     f"melee={inv['melee']} ranged={inv['ranged']} potion={inv['potion']}")
    return "\n".join(lines)


def headless_play(model_dir, seed: int = 0, difficulty: DifficultyConfig = None,
                  in_stream=None, out_stream=None):
    """The same game loop driven by a terminal read-eval loop.

    Commands: n/ne/e/se/s/sw/w/nw move, p potion, rn/rne/... ranged,
    i <id> inspect, q resign.
    """
    import sys
    in_stream = in_stream or sys.stdin
    out_stream = out_stream or sys.stdout
    store = ModelStore(model_dir)
    session = GameSession(store, difficulty or DifficultyConfig(), seed)

    def emit(text):
        print(text, file=out_stream, flush=True)

    emit(render_text(session.snapshot()))
    for line in in_stream:
        cmd = line.strip().lower()
        if not cmd:
            continue
        if cmd == "q":
            session.resign()
            emit("resigned")
            break
        if cmd.startswith("i "):
            try:
                emit(json.dumps(session.inspect(int(cmd.split()[1]))))
            except (ValueError, ServiceError) as exc:
                emit(f"error: {exc}")
            continue
        index = _KEY_TO_ACTION.get(cmd)
        if index is None:
            emit(f"unknown command {cmd!r} (moves: n ne e se s sw w nw; "
                 "p potion; rn.. ranged; i <id>; q quit)")
            continue
        try:
            events = session.submit_action(index)
        except ServiceError as exc:
            emit(f"rejected: {exc}")
            continue
        for event in events:
            emit(json.dumps(event))
        emit(render_text(session.snapshot()))
        if session.status != "active":
            emit(f"run over: {session.status}")
            break
    return session.status
