"use strict";
/**
 * WebSocket wrapper: serializes outbound messages, validates inbound
 * ones, and reconnects with a resume request after channel loss. The
 * WebSocket constructor is injectable so node tests can supply one.
 */
Object.defineProperty(exports, "__esModule", { value: true });
exports.GameClient = void 0;
const protocol_js_1 = require("./protocol.js");
const RECONNECT_DELAY_MS = 1500;
class GameClient {
    constructor(url, hooks, makeSocket) {
        this.url = url;
        this.hooks = hooks;
        this.makeSocket = makeSocket;
        this.socket = null;
        this.sessionId = null;
        this.closed = false;
        this.reconnectTimer = null;
    }
    connect() {
        this.closed = false;
        this.open();
    }
    open() {
        const socket = this.makeSocket(this.url);
        this.socket = socket;
        socket.onopen = () => {
            this.hooks.onConnectionChange(true);
            if (this.sessionId) {
                socket.send(JSON.stringify(protocol_js_1.outbound.resume(this.sessionId)));
            }
        };
        socket.onmessage = (ev) => {
            const { message, problems } = (0, protocol_js_1.parseServerMessage)(String(ev.data));
            if (!message) {
                this.hooks.onProblem(problems);
                return;
            }
            if (message.type === "snapshot") {
                this.sessionId = message.session;
            }
            if (message.type === "error" && message.code === "no_session") {
                this.sessionId = null; // resume refused; caller starts a new run
            }
            this.hooks.onMessage(message);
        };
        socket.onclose = () => {
            this.hooks.onConnectionChange(false);
            if (!this.closed) {
                this.reconnectTimer = setTimeout(() => this.open(), RECONNECT_DELAY_MS);
            }
        };
        socket.onerror = () => {
            // close follows; reconnect handled there
        };
    }
    get session() {
        return this.sessionId;
    }
    send(message) {
        if (!this.socket || this.socket.readyState !== 1) {
            this.hooks.onProblem(["not connected; action dropped"]);
            return;
        }
        this.socket.send(JSON.stringify(message));
    }
    close() {
        this.closed = true;
        if (this.reconnectTimer)
            clearTimeout(this.reconnectTimer);
        this.socket?.close();
    }
}
exports.GameClient = GameClient;
