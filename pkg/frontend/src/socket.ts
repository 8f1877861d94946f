/**
 * Reconnecting websocket wrapper: exponential backoff, one socket at a time,
 * JSON envelopes dispatched to a callback. The socket constructor and timer
 * functions are injectable so tests run with the network stubbed.
 */

import { SUBPROTOCOL, type StreamEnvelope } from "./protocol.js";

export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface StreamHandlers {
  onEnvelope(envelope: StreamEnvelope): void;
  onStatus?(connected: boolean): void;
}

export interface Timers {
  set(fn: () => void, ms: number): unknown;
  clear(handle: unknown): void;
}

const BASE_DELAY_MS = 1000;
const MAX_DELAY_MS = 30000;

export function backoffDelay(attempt: number): number {
  return Math.min(BASE_DELAY_MS * 2 ** attempt, MAX_DELAY_MS);
}

export class ReconnectingStream {
  private socket: SocketLike | null = null;
  private timer: unknown = null;
  private attempts = 0;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly handlers: StreamHandlers,
    private readonly factory: SocketFactory = defaultFactory,
    private readonly timers: Timers = {
      set: (fn, ms) => setTimeout(fn, ms),
      clear: (h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]),
    },
  ) {}

  connect(): void {
    if (this.stopped || this.socket) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.handlers.onStatus?.(true);
    };
    socket.onmessage = (ev) => {
      this.handlers.onEnvelope(JSON.parse(String(ev.data)) as StreamEnvelope);
    };
    socket.onclose = () => {
      if (this.socket !== socket) return;
      this.socket = null;
      this.handlers.onStatus?.(false);
      this.scheduleReconnect();
    };
  }

  close(): void {
    this.stopped = true;
    if (this.timer !== null) {
      this.timers.clear(this.timer);
      this.timer = null;
    }
    this.socket?.close();
    this.socket = null;
  }

  private scheduleReconnect(): void {
    if (this.stopped || this.timer !== null) return;
    const delay = backoffDelay(this.attempts);
    this.attempts += 1;
    this.timer = this.timers.set(() => {
      this.timer = null;
      this.connect();
    }, delay);
  }
}

function defaultFactory(url: string): SocketLike {
  return new WebSocket(url, [SUBPROTOCOL]) as unknown as SocketLike;
}
