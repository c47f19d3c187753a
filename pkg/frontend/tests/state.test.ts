import { describe, expect, it } from "vitest";

import { DEFAULT_PARAMS, Emitter, UiState, panelErrors } from "../src/state.js";

class RecordingEmitter implements Emitter {
  sent: { kind: string; body: Record<string, unknown> }[] = [];
  send(kind: string, body: Record<string, unknown>): void {
    this.sent.push({ kind, body });
  }
}

function readyState(): UiState {
  const s = new UiState();
  s.loaded = true;
  s.axisAccepted = true;
  return s;
}

describe("parameter panel invariants", () => {
  it("defaults are valid", () => {
    expect(panelErrors(DEFAULT_PARAMS)).toEqual([]);
  });

  it("non-positive diameter invalidates the panel", () => {
    expect(panelErrors({ ...DEFAULT_PARAMS, diameter: 0 })).not.toEqual([]);
    expect(panelErrors({ ...DEFAULT_PARAMS, diameter: -3 })).not.toEqual([]);
  });

  it("corrected target radius must clear r_init", () => {
    // diameter/2 - k/4 must exceed r_init
    expect(panelErrors({ ...DEFAULT_PARAMS, diameter: 0.25, k: 0.4, r_init: 0.1 }))
      .not.toEqual([]);
  });

  it("inflate is disabled and emits nothing while the panel is invalid", () => {
    const s = readyState();
    s.params = { ...DEFAULT_PARAMS, diameter: 0 };
    const emitter = new RecordingEmitter();
    expect(s.inflateEnabled).toBe(false);
    expect(s.requestInflate(3.0, emitter)).toBe(false);
    expect(emitter.sent).toEqual([]);   // no inflate_to frame leaves the UI
    expect(s.hint).toContain("diameter");
  });

  it("inflate requires a loaded mesh and an accepted axis", () => {
    const s = new UiState();
    const emitter = new RecordingEmitter();
    expect(s.requestInflate(3.0, emitter)).toBe(false);
    expect(emitter.sent).toEqual([]);
  });

  it("valid panel emits set_params then inflate_to", () => {
    const s = readyState();
    const emitter = new RecordingEmitter();
    expect(s.requestInflate(3.0, emitter)).toBe(true);
    expect(emitter.sent.map((m) => m.kind)).toEqual(["set_params", "inflate_to"]);
    expect(emitter.sent[1].body).toEqual({ radius: 3.0 });
    expect(s.inflating).toBe(true);
  });

  it("no second inflate while one is in flight", () => {
    const s = readyState();
    const emitter = new RecordingEmitter();
    s.requestInflate(3.0, emitter);
    expect(s.requestInflate(3.0, emitter)).toBe(false);
    expect(emitter.sent.filter((m) => m.kind === "inflate_to")).toHaveLength(1);
  });
});

describe("pick flow", () => {
  it("two picks complete a selection and emit select_axis", () => {
    const s = readyState();
    const emitter = new RecordingEmitter();
    expect(s.recordPick({ path: 0, arc: 10 }, emitter)).toBe(false);
    expect(emitter.sent).toEqual([]);
    expect(s.recordPick({ path: 1, arc: 8 }, emitter)).toBe(true);
    expect(emitter.sent).toHaveLength(1);
    expect(emitter.sent[0].kind).toBe("select_axis");
    expect(emitter.sent[0].body).toMatchObject({
      start: { path: 0, arc: 10 },
      end: { path: 1, arc: 8 },
    });
  });

  it("a third pick starts a fresh selection", () => {
    const s = readyState();
    const emitter = new RecordingEmitter();
    s.recordPick({ path: 0, arc: 10 }, emitter);
    s.recordPick({ path: 0, arc: 30 }, emitter);
    expect(s.recordPick({ path: 0, arc: 12 }, emitter)).toBe(false);
    expect(s.start).toEqual({ path: 0, arc: 12 });
    expect(s.end).toBeNull();
    expect(s.axisAccepted).toBe(false);
  });

  it("nominal length rides along when set", () => {
    const s = readyState();
    s.params = { ...DEFAULT_PARAMS, length: 20, foreshortening: 0.1 };
    const emitter = new RecordingEmitter();
    s.recordPick({ path: 0, arc: 5 }, emitter);
    s.recordPick({ path: 0, arc: 30 }, emitter);
    expect(emitter.sent[0].body).toMatchObject({
      nominal_length: 20,
      foreshortening: 0.1,
    });
  });
});
