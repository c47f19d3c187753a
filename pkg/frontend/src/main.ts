/** Application wiring: panel, viewport, picking, websocket session. */

import { Vec3 } from "./camera.js";
import { Connection, ServerMessage } from "./connection.js";
import { drawChart } from "./chart.js";
import { DeltaRangeError, MeshBuffer } from "./meshbuffer.js";
import { PickablePath, pickCenterlinePoint, toPickable } from "./picking.js";
import {
  CenterlinePathMsg,
  ProfilePoint,
  decodeFaceBuffer,
  decodeVertexBuffer,
} from "./protocol.js";
import { UiState } from "./state.js";

const $ = (id: string) => document.getElementById(id)!;

const canvas = $("viewport") as HTMLCanvasElement;
const chartCanvas = $("chart") as HTMLCanvasElement;
const state = new UiState();
let viewport: import("./gl.js").Viewport | null = null;
let mesh: MeshBuffer | null = null;
let paths: PickablePath[] = [];
let profile: ProfilePoint[] = [];
let conn: Connection | null = null;
let meshFullRequested = false;

function setStatus(text: string) {
  $("status").textContent = text;
}

function refreshControls() {
  ($("inflate") as HTMLButtonElement).disabled = !state.inflateEnabled;
  ($("step") as HTMLButtonElement).disabled = !state.inflateEnabled;
  ($("reset") as HTMLButtonElement).disabled = !state.loaded || state.inflating;
  ($("export") as HTMLButtonElement).disabled = !state.loaded || state.inflating;
  $("hint").textContent = state.hint;
}

function readPanel() {
  const num = (id: string) => parseFloat(($(id) as HTMLInputElement).value);
  const lengthRaw = ($("length") as HTMLInputElement).value.trim();
  state.params = {
    diameter: num("diameter"),
    length: lengthRaw === "" ? null : parseFloat(lengthRaw),
    foreshortening: num("foreshortening"),
    k: num("k"),
    d_infl: num("d_infl"),
    dr: num("dr"),
    d_con: num("d_con"),
    r_init: num("r_init"),
  };
  state.hint = state.panelValid ? "" : "parameters invalid";
  refreshControls();
}

function redraw() {
  if (viewport) viewport.draw();
  requestAnimationFrame(redraw);
}

function handleServer(msg: ServerMessage) {
  const { envelope, binary } = msg;
  switch (envelope.kind) {
    case "mesh_full": {
      const verts = decodeVertexBuffer(binary[0]);
      const faces = decodeFaceBuffer(binary[1]);
      mesh = new MeshBuffer(verts.positions, faces);
      meshFullRequested = false;
      viewport!.setMesh(mesh);
      setStatus(`mesh: ${mesh.vertexCount} vertices / ${faces.length / 3} faces`);
      break;
    }
    case "mesh_delta": {
      if (!mesh) break;
      try {
        mesh.applyDelta(decodeVertexBuffer(binary[0]));
      } catch (err) {
        if (err instanceof DeltaRangeError && !meshFullRequested) {
          // surfaced to the user, then re-baseline from the server
          setStatus(`session error: ${err.message}; requesting mesh_full`);
          meshFullRequested = true;
          state.start = null;
          state.end = null;
          conn!.send("reset", {});
        } else {
          throw err;
        }
      }
      break;
    }
    case "step_info": {
      const b = envelope.body as Record<string, number>;
      state.currentRadius = +b.radius;
      setStatus(`step ${b.step_index}: r=${(+b.radius).toFixed(2)} mm, `
        + `${b.contact_count} contact / ${b.influence_count} influenced`);
      break;
    }
    case "metrics_update": {
      const b = envelope.body as unknown as {
        prescribed_diameter: number;
        profile: ProfilePoint[];
      };
      profile = b.profile;
      drawChart(chartCanvas.getContext("2d")!, profile, b.prescribed_diameter);
      break;
    }
    case "ack": {
      const body = envelope.body as Record<string, unknown>;
      const target = body["for"];
      if (target === "load") {
        state.loaded = true;
        const tree = body["centerline"] as { paths: CenterlinePathMsg[] };
        paths = tree.paths.map((p) => toPickable(p.id, p.points));
        viewport!.setLines("centerline", paths.map((p) => p.points), [0.3, 0.85, 0.75]);
        state.hint = "pick the distal (start) centerline point";
        setStatus("loaded");
      } else if (target === "select_axis") {
        state.axisAccepted = true;
        const axis = body["axis"] as { points: number[][] };
        viewport!.setLines("axis", [axis.points.map((p) => p as unknown as Vec3)],
          [0.95, 0.8, 0.3]);
        state.hint = "axis accepted";
      } else if (target === "inflate_to") {
        state.inflating = false;
        state.currentRadius = body["radius"] as number;
        setStatus(`inflation done at r=${(body["radius"] as number).toFixed(2)} mm`);
      } else if (target === "export") {
        setStatus(`exported to ${body["path"]}`);
      } else if (target === "reset") {
        profile = [];
        state.currentRadius = state.params.r_init;
        drawChart(chartCanvas.getContext("2d")!, profile, null);
      }
      refreshControls();
      break;
    }
    case "error": {
      state.inflating = false;
      setStatus(`server error: ${(envelope.body as { message: string }).message}`);
      refreshControls();
      break;
    }
  }
}

function connect() {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  conn = new Connection(`${proto}://${location.host}/ws`, handleServer,
    () => setStatus("connection closed"));
  setStatus("connected; load a case");
}

function wire() {
  import("./gl.js").then((m) => {
    viewport = new m.Viewport(canvas);
    requestAnimationFrame(redraw);
  });
  connect();

  $("load").addEventListener("click", () => {
    const meshPath = ($("mesh-path") as HTMLInputElement).value;
    const clPath = ($("centerline-path") as HTMLInputElement).value;
    conn!.send("load", { mesh_path: meshPath, centerline_path: clPath });
  });

  const dragging = { on: false, x: 0, y: 0, moved: false };
  canvas.addEventListener("click", (ev) => {
    if (!viewport || !paths.length || dragging.moved) return;
    const rect = canvas.getBoundingClientRect();
    const px = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const py = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    const anchor = pickCenterlinePoint(px, py, canvas.width, canvas.height,
      viewport.camera, paths);
    if (!anchor) {
      state.hint = "no centerline point near the cursor";
      refreshControls();
      return;
    }
    state.recordPick(anchor, conn!);
    const marks: Vec3[] = [];
    for (const a of [state.start, state.end]) {
      if (!a) continue;
      const path = paths.find((p) => p.id === a.path)!;
      let idx = 0;
      while (idx + 1 < path.arcs.length && path.arcs[idx + 1] <= a.arc) idx++;
      marks.push(path.points[idx]);
    }
    viewport.setLines("picks", [marks], [1.0, 0.45, 0.2], "points");
    refreshControls();
  });

  canvas.addEventListener("mousedown", (ev) => {
    dragging.on = true;
    dragging.moved = false;
    dragging.x = ev.clientX;
    dragging.y = ev.clientY;
  });
  window.addEventListener("mouseup", () => (dragging.on = false));
  window.addEventListener("mousemove", (ev) => {
    if (!dragging.on || !viewport) return;
    const dx = ev.clientX - dragging.x;
    const dy = ev.clientY - dragging.y;
    if (Math.abs(dx) + Math.abs(dy) > 3) dragging.moved = true;
    dragging.x = ev.clientX;
    dragging.y = ev.clientY;
    viewport.camera.yaw += dx * 0.008;
    viewport.camera.pitch = Math.min(1.45, Math.max(-1.45,
      viewport.camera.pitch + dy * 0.008));
  });
  canvas.addEventListener("wheel", (ev) => {
    if (!viewport) return;
    ev.preventDefault();
    viewport.camera.distance *= Math.exp(ev.deltaY * 0.001);
  });

  for (const id of ["diameter", "length", "foreshortening", "k", "d_infl",
                    "dr", "d_con", "r_init"]) {
    $(id).addEventListener("input", readPanel);
  }
  $("show-preop").addEventListener("change", (ev) => {
    if (viewport) viewport.showPreOp = (ev.target as HTMLInputElement).checked;
  });
  $("show-centerline").addEventListener("change", (ev) => {
    if (viewport) viewport.showCenterline = (ev.target as HTMLInputElement).checked;
  });

  $("inflate").addEventListener("click", () => {
    if (state.requestInflate(state.params.diameter / 2, conn!)) refreshControls();
  });
  $("step").addEventListener("click", () => {
    // single-increment nudge toward the target
    const next = Math.min(state.currentRadius + state.params.dr,
                          state.params.diameter / 2);
    if (state.requestInflate(next, conn!)) refreshControls();
  });
  $("reset").addEventListener("click", () => conn!.send("reset", {}));
  $("export").addEventListener("click", () => {
    conn!.send("export", { path: ($("export-path") as HTMLInputElement).value });
  });
  readPanel();
}

wire();
