/**
 * WebSocket wrapper: serializes outbound messages, validates inbound
 * ones, and reconnects with a resume request after channel loss. The
 * WebSocket constructor is injectable so node tests can supply one.
 */

import { ClientMessage, ServerMessage, outbound, parseServerMessage } from "./protocol.js";

export type WebSocketLike = {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  readyState: number;
};

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface ClientHooks {
  onMessage(message: ServerMessage): void;
  onProblem(problems: string[]): void;
  onConnectionChange(connected: boolean): void;
}

const RECONNECT_DELAY_MS = 1500;

export class GameClient {
  private socket: WebSocketLike | null = null;
  private sessionId: string | null = null;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly hooks: ClientHooks,
    private readonly makeSocket: WebSocketFactory,
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.hooks.onConnectionChange(true);
      if (this.sessionId) {
        socket.send(JSON.stringify(outbound.resume(this.sessionId)));
      }
    };
    socket.onmessage = (ev) => {
      const { message, problems } = parseServerMessage(String(ev.data));
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

  get session(): string | null {
    return this.sessionId;
  }

  send(message: ClientMessage): void {
    if (!this.socket || this.socket.readyState !== 1) {
      this.hooks.onProblem(["not connected; action dropped"]);
      return;
    }
    this.socket.send(JSON.stringify(message));
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.socket?.close();
  }
}
