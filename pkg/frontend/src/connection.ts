/** WebSocket client: outgoing seq numbering and reassembly of envelopes with
 * their trailing binary frames. */

import { Envelope } from "./protocol.js";

export interface ServerMessage {
  envelope: Envelope;
  binary: ArrayBuffer[];
}

export type MessageHandler = (msg: ServerMessage) => void;

function binaryFramesExpected(env: Envelope): number {
  if (!env.body || env.body["binary"] !== true) return 0;
  return env.kind === "mesh_full" ? 2 : 1;
}

/** Pure reassembler: feed raw frames in arrival order, complete messages
 * come out. Kept transport-free so it is testable. */
export class FrameAssembler {
  private pending: ServerMessage | null = null;
  private want = 0;

  feedText(raw: string): ServerMessage | null {
    const envelope = JSON.parse(raw) as Envelope;
    const want = binaryFramesExpected(envelope);
    if (want === 0) {
      return { envelope, binary: [] };
    }
    this.pending = { envelope, binary: [] };
    this.want = want;
    return null;
  }

  feedBinary(data: ArrayBuffer): ServerMessage | null {
    if (!this.pending) {
      throw new Error("binary frame without a pending envelope");
    }
    this.pending.binary.push(data);
    if (this.pending.binary.length === this.want) {
      const done = this.pending;
      this.pending = null;
      return done;
    }
    return null;
  }
}

export class Connection {
  private ws: WebSocket;
  private assembler = new FrameAssembler();
  private seq = 0;

  constructor(url: string, private onMessage: MessageHandler,
              private onClose: () => void = () => undefined) {
    this.ws = new WebSocket(url);
    this.ws.binaryType = "arraybuffer";
    this.ws.onmessage = (ev) => {
      const msg = typeof ev.data === "string"
        ? this.assembler.feedText(ev.data)
        : this.assembler.feedBinary(ev.data as ArrayBuffer);
      if (msg) this.onMessage(msg);
    };
    this.ws.onclose = () => this.onClose();
  }

  send(kind: string, body: Record<string, unknown>): void {
    this.seq += 1;
    this.ws.send(JSON.stringify({ kind, seq: this.seq, body }));
  }

  close(): void {
    this.ws.close();
  }
}
