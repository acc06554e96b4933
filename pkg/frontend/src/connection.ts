// Reconnecting WebSocket session with per-command acknowledgements.

import { CommandFrame, ServerFrame, parseFrame } from './protocol.js';

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionHooks {
  onFrame: (frame: ServerFrame, wallMs: number) => void;
  onStatus: (connected: boolean, detail: string) => void;
}

const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 8000;

// Omit must distribute over the command union, not collapse it.
type CommandBody = CommandFrame extends infer T
  ? T extends CommandFrame ? Omit<T, 'id'> : never
  : never;

export class OperatorSession {
  private socket: SocketLike | null = null;
  private nextId = 1;
  private backoffMs = BACKOFF_START_MS;
  private closed = false;
  private pending = new Map<number, (ok: boolean, detail: string) => void>();

  constructor(
    private url: string,
    private hooks: SessionHooks,
    private factory: SocketFactory = (u) => new WebSocket(u) as unknown as SocketLike,
    private now: () => number = () => Date.now(),
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = BACKOFF_START_MS;
      this.hooks.onStatus(true, 'connected');
    };
    socket.onmessage = (ev) => {
      const frame = parseFrame(String(ev.data));
      if (!frame) {
        console.warn('malformed frame ignored');
        return;
      }
      if ((frame.type === 'ack' || frame.type === 'error') && frame.id != null) {
        const settle = this.pending.get(frame.id);
        if (settle) {
          this.pending.delete(frame.id);
          settle(frame.type === 'ack',
                 frame.type === 'error' ? frame.reason : '');
        }
      }
      this.hooks.onFrame(frame, this.now());
    };
    const drop = () => {
      if (this.socket !== socket) return;
      this.socket = null;
      this.hooks.onStatus(false, 'connection lost');
      for (const settle of this.pending.values()) settle(false, 'disconnected');
      this.pending.clear();
      if (!this.closed) this.scheduleReconnect();
    };
    socket.onclose = drop;
    socket.onerror = drop;
  }

  private scheduleReconnect(): void {
    const delay = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
    setTimeout(() => {
      if (!this.closed && this.socket === null) this.open();
    }, delay);
  }

  /** Send a command; the settle callback fires on ack or error. */
  send(
    partial: CommandBody,
    settle?: (ok: boolean, detail: string) => void,
  ): number {
    if (!this.socket) {
      settle?.(false, 'not connected');
      return -1;
    }
    const id = this.nextId++;
    const frame = { ...partial, id } as CommandFrame;
    if (settle) this.pending.set(id, settle);
    this.socket.send(JSON.stringify(frame));
    return id;
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
    this.socket = null;
  }
}
