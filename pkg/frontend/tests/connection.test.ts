import { describe, expect, it } from "vitest";

import { FrameAssembler } from "../src/connection.js";
import { encodeVertexBuffer } from "../src/protocol.js";

const VERTS = encodeVertexBuffer({
  indices: new Uint32Array([0]),
  positions: new Float32Array([1, 2, 3]),
});

describe("FrameAssembler", () => {
  it("plain envelopes complete immediately", () => {
    const a = new FrameAssembler();
    const msg = a.feedText(JSON.stringify({ kind: "ack", seq: 1, body: { for: "load" } }));
    expect(msg).not.toBeNull();
    expect(msg!.envelope.kind).toBe("ack");
    expect(msg!.binary).toEqual([]);
  });

  it("mesh_delta waits for one binary frame", () => {
    const a = new FrameAssembler();
    const env = a.feedText(JSON.stringify(
      { kind: "mesh_delta", seq: 2, body: { count: 1, binary: true } }));
    expect(env).toBeNull();
    const done = a.feedBinary(VERTS);
    expect(done).not.toBeNull();
    expect(done!.binary).toHaveLength(1);
  });

  it("mesh_full waits for two binary frames", () => {
    const a = new FrameAssembler();
    expect(a.feedText(JSON.stringify(
      { kind: "mesh_full", seq: 3, body: { binary: true } }))).toBeNull();
    expect(a.feedBinary(VERTS)).toBeNull();
    const done = a.feedBinary(new ArrayBuffer(4));
    expect(done!.envelope.kind).toBe("mesh_full");
    expect(done!.binary).toHaveLength(2);
  });

  it("unexpected binary frames are an error", () => {
    const a = new FrameAssembler();
    expect(() => a.feedBinary(VERTS)).toThrow();
  });

  it("interleaved sequences keep envelope-binary pairing", () => {
    const a = new FrameAssembler();
    const first = a.feedText(JSON.stringify(
      { kind: "step_info", seq: 4, body: { step_index: 0 } }));
    expect(first!.envelope.kind).toBe("step_info");
    a.feedText(JSON.stringify({ kind: "mesh_delta", seq: 5, body: { binary: true } }));
    const delta = a.feedBinary(VERTS);
    expect(delta!.envelope.seq).toBe(5);
    const after = a.feedText(JSON.stringify({ kind: "ack", seq: 6, body: {} }));
    expect(after!.envelope.kind).toBe("ack");
  });
});
