import type { ClientMessage, MutationPayload, ServerMessage } from "./types";

export interface ConnectionEvents {
  onSnapshot(message: Extract<ServerMessage, { type: "snapshot" }>): void;
  onApplied(message: Extract<ServerMessage, { type: "applied" }>): void;
  onRejected(message: Extract<ServerMessage, { type: "rejected" }>): void;
  onStatus(connected: boolean): void;
}

export type WebSocketLike = Pick<
  WebSocket,
  "send" | "close" | "addEventListener" | "readyState"
>;

const RECONNECT_DELAY_MS = 1500;

/**
 * The one channel to the server. Outbound traffic is limited to the three
 * client message shapes (hello / mutate / request_snapshot); there is no
 * API here that could serialize a position, and reconnecting starts a
 * fresh handshake that yields a new snapshot.
 */
export class SyncConnection {
  private ws: WebSocketLike | null = null;
  private seq = 0;
  private closed = false;

  constructor(
    private readonly url: string,
    private readonly events: ConnectionEvents,
    private readonly factory: (url: string) => WebSocketLike = (u) => new WebSocket(u),
  ) {}

  connect(): void {
    this.closed = false;
    const ws = this.factory(this.url);
    this.ws = ws;
    ws.addEventListener("open", () => {
      this.events.onStatus(true);
      this.post({ type: "hello", client_seq: this.nextSeq() });
    });
    ws.addEventListener("message", (event) => {
      this.dispatch((event as MessageEvent).data);
    });
    ws.addEventListener("close", () => {
      this.events.onStatus(false);
      this.ws = null;
      if (!this.closed) {
        setTimeout(() => this.connect(), RECONNECT_DELAY_MS);
      }
    });
  }

  disconnect(): void {
    this.closed = true;
    this.ws?.close();
    this.ws = null;
  }

  sendMutation(mutation: MutationPayload): number {
    const seq = this.nextSeq();
    this.post({ type: "mutate", client_seq: seq, mutation });
    return seq;
  }

  requestSnapshot(): void {
    this.post({ type: "request_snapshot", client_seq: this.nextSeq() });
  }

  private nextSeq(): number {
    this.seq += 1;
    return this.seq;
  }

  private post(message: ClientMessage): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(message));
    }
  }

  private dispatch(raw: unknown): void {
    let message: ServerMessage;
    try {
      message = JSON.parse(String(raw)) as ServerMessage;
    } catch {
      return;
    }
    if (message.type === "snapshot") this.events.onSnapshot(message);
    else if (message.type === "applied") this.events.onApplied(message);
    else if (message.type === "rejected") this.events.onRejected(message);
  }
}
