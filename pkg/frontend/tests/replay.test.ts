/** Session replay against a recording of the real server: feeding the
 * captured frames through the client modules reproduces the exported vertex
 * buffer exactly at 32-bit precision. */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { FrameAssembler } from "../src/connection.js";
import { MeshBuffer } from "../src/meshbuffer.js";
import { decodeFaceBuffer, decodeVertexBuffer } from "../src/protocol.js";

interface Recording {
  frames: { envelope: { kind: string; body: Record<string, unknown> }; binary: string[] }[];
  final_positions_f32: string;
}

function b64ToBuffer(b64: string): ArrayBuffer {
  const raw = Buffer.from(b64, "base64");
  return raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength);
}

const recording: Recording = JSON.parse(
  readFileSync(new URL("./fixtures/session_replay.json", import.meta.url), "utf-8"),
);

describe("recorded session replay", () => {
  it("reproduces the exported positions to float32 precision", () => {
    const assembler = new FrameAssembler();
    let mesh: MeshBuffer | null = null;
    let deltas = 0;
    for (const frame of recording.frames) {
      let msg = assembler.feedText(JSON.stringify(frame.envelope));
      for (const b of frame.binary) {
        msg = assembler.feedBinary(b64ToBuffer(b));
      }
      if (!msg) continue;
      if (msg.envelope.kind === "mesh_full") {
        const verts = decodeVertexBuffer(msg.binary[0]);
        mesh = new MeshBuffer(verts.positions, decodeFaceBuffer(msg.binary[1]));
      } else if (msg.envelope.kind === "mesh_delta") {
        mesh!.applyDelta(decodeVertexBuffer(msg.binary[0]));
        deltas++;
      }
    }
    expect(mesh).not.toBeNull();
    expect(deltas).toBeGreaterThan(0);
    const expected = new Float32Array(b64ToBuffer(recording.final_positions_f32));
    expect(mesh!.positions.length).toBe(expected.length);
    for (let i = 0; i < expected.length; i++) {
      if (mesh!.positions[i] !== expected[i]) {
        throw new Error(`component ${i}: ${mesh!.positions[i]} != ${expected[i]}`);
      }
    }
  });
});
