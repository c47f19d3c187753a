import { describe, expect, it } from "vitest";

import { DeltaRangeError, MeshBuffer } from "../src/meshbuffer.js";

function square(): MeshBuffer {
  return new MeshBuffer(
    new Float32Array([0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0]),
    new Uint32Array([0, 1, 2, 1, 3, 2]),
  );
}

describe("MeshBuffer.applyDelta", () => {
  it("patches exactly the referenced vertices", () => {
    const m = square();
    m.applyDelta({
      indices: new Uint32Array([1, 3]),
      positions: new Float32Array([5, 6, 7, 8, 9, 10]),
    });
    expect([...m.positions]).toEqual([0, 0, 0, 5, 6, 7, 0, 1, 0, 8, 9, 10]);
  });

  it("empty delta leaves the buffer and generation untouched", () => {
    const m = square();
    const before = [...m.positions];
    const gen = m.generation;
    m.applyDelta({ indices: new Uint32Array(0), positions: new Float32Array(0) });
    expect([...m.positions]).toEqual(before);
    expect(m.generation).toBe(gen);
  });

  it("cumulative deltas reproduce the final state exactly (float32)", () => {
    const m = square();
    const reference = square();
    const deltas = [
      { indices: new Uint32Array([0]), positions: new Float32Array([0.1, 0.2, 0.3]) },
      { indices: new Uint32Array([0, 2]), positions: new Float32Array([1.5, 0, 0, 0, 2.5, 0]) },
      { indices: new Uint32Array([3]), positions: new Float32Array([7.125, -3.25, 2]) },
    ];
    for (const d of deltas) m.applyDelta(d);
    // the last value written per vertex wins; replay onto a fresh buffer
    for (const d of deltas) reference.applyDelta(d);
    expect([...m.positions]).toEqual([...reference.positions]);
    expect(m.positions[0]).toBe(Math.fround(1.5));
    expect(m.positions[7]).toBe(Math.fround(2.5));
  });

  it("out-of-range index raises and leaves data untouched before the write", () => {
    const m = square();
    expect(() =>
      m.applyDelta({
        indices: new Uint32Array([1, 9]),
        positions: new Float32Array([1, 1, 1, 2, 2, 2]),
      }),
    ).toThrow(DeltaRangeError);
    // range check runs before any write, so vertex 1 is unchanged
    expect([...m.positions.slice(3, 6)]).toEqual([1, 0, 0]);
  });
});
