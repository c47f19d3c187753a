/** Session protocol wire format.
 *
 * Text frames carry JSON envelopes {kind, seq, body}; when body.binary is
 * true, binary frames follow: a vertex buffer (u32 count, then records of
 * u32 index + 3 float32) and, for mesh_full only, a face buffer
 * (u32 count, then u32 triples). All little-endian.
 */

export type ClientKind =
  | "load" | "select_axis" | "set_params" | "inflate_to" | "reset" | "export";

export type ServerKind =
  | "mesh_full" | "mesh_delta" | "step_info" | "metrics_update" | "ack" | "error";

export interface Envelope {
  kind: string;
  seq: number;
  body: Record<string, unknown>;
}

export interface VertexDelta {
  indices: Uint32Array;
  positions: Float32Array; // 3 per index
}

export function decodeVertexBuffer(data: ArrayBuffer): VertexDelta {
  const view = new DataView(data);
  const count = view.getUint32(0, true);
  const indices = new Uint32Array(count);
  const positions = new Float32Array(count * 3);
  let off = 4;
  for (let i = 0; i < count; i++) {
    indices[i] = view.getUint32(off, true);
    positions[3 * i] = view.getFloat32(off + 4, true);
    positions[3 * i + 1] = view.getFloat32(off + 8, true);
    positions[3 * i + 2] = view.getFloat32(off + 12, true);
    off += 16;
  }
  return { indices, positions };
}

export function encodeVertexBuffer(delta: VertexDelta): ArrayBuffer {
  const count = delta.indices.length;
  const buf = new ArrayBuffer(4 + 16 * count);
  const view = new DataView(buf);
  view.setUint32(0, count, true);
  let off = 4;
  for (let i = 0; i < count; i++) {
    view.setUint32(off, delta.indices[i], true);
    view.setFloat32(off + 4, delta.positions[3 * i], true);
    view.setFloat32(off + 8, delta.positions[3 * i + 1], true);
    view.setFloat32(off + 12, delta.positions[3 * i + 2], true);
    off += 16;
  }
  return buf;
}

export function decodeFaceBuffer(data: ArrayBuffer): Uint32Array {
  const view = new DataView(data);
  const count = view.getUint32(0, true);
  const faces = new Uint32Array(count * 3);
  for (let i = 0; i < count * 3; i++) {
    faces[i] = view.getUint32(4 + 4 * i, true);
  }
  return faces;
}

export interface CenterlinePathMsg {
  id: number;
  points: number[][];
  mis_radius: number[];
  parent: number | null;
  attach_point: number | null;
}

export interface ProfilePoint {
  arc_length: number;
  mis_diameter: number;
}
