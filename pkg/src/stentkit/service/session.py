"""Transport-free session state machine for the interactive protocol.

`Session.handle` consumes one client envelope and yields outgoing messages;
long-running inflations yield progressively so the transport can stream them
and service its receive loop between steps. All protocol violations produce
an error message and leave the session usable.
"""

from __future__ import annotations

import base64
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import io as stent_io
from ..centerline import CenterlineTree
from ..deform import DeploymentSession
from ..errors import StentKitError
from ..mesh import TriMesh
from ..metrics import mis_radius_profile
from ..pipeline import RunSpec, build_axis, params_for
from .models import CLIENT_KINDS, pack_face_buffer, pack_vertex_buffer

MAX_DELTA_RATE_HZ = 60.0


class ProtocolError(Exception):
    pass


@dataclass
class OutMsg:
    kind: str
    body: dict
    binary: list[bytes] = field(default_factory=list)

    def envelope(self, seq: int) -> dict:
        env = {"kind": self.kind, "seq": seq, "body": self.body}
        if self.binary:
            env["body"] = {**self.body, "binary": True}
        return env


def _ack(for_kind: str, **extra) -> OutMsg:
    return OutMsg("ack", {"for": for_kind, **extra})


def _error(message: str) -> OutMsg:
    return OutMsg("error", {"message": message})


class Session:
    """One interactive editing session over one mesh copy."""

    def __init__(self, export_dir: str = ".", now=time.monotonic):
        self.export_dir = Path(export_dir)
        self.mesh: TriMesh | None = None
        self.tree: CenterlineTree | None = None
        self.selection: dict | None = None
        self.params: dict = {}
        self.deployment: DeploymentSession | None = None
        self.last_client_seq: int | None = None
        self._now = now

    # -- message entry point ----------------------------------------------------

    def handle(self, msg):
        """Yield OutMsg objects for one parsed client envelope."""
        try:
            kind, body = self._validate_envelope(msg)
        except ProtocolError as e:
            yield _error(str(e))
            return
        handler = getattr(self, f"_on_{kind}")
        try:
            yield from handler(body)
        except ProtocolError as e:
            yield _error(str(e))
        except (StentKitError, ValueError, OSError) as e:
            yield _error(f"{kind} failed: {e}")

    def _validate_envelope(self, msg):
        if not isinstance(msg, dict):
            raise ProtocolError("envelope must be a JSON object")
        seq = msg.get("seq")
        if not isinstance(seq, int):
            raise ProtocolError("envelope missing integer seq")
        if self.last_client_seq is not None and seq <= self.last_client_seq:
            raise ProtocolError(
                f"seq must increase: got {seq} after {self.last_client_seq}"
            )
        self.last_client_seq = seq
        kind = msg.get("kind")
        if kind not in CLIENT_KINDS:
            raise ProtocolError(f"unknown message kind {kind!r}")
        body = msg.get("body", {})
        if not isinstance(body, dict):
            raise ProtocolError("body must be an object")
        return kind, body

    # -- handlers -----------------------------------------------------------------

    def _mesh_full(self) -> OutMsg:
        mesh = self.current_mesh()
        return OutMsg(
            "mesh_full",
            {"vertex_count": mesh.vertex_count, "face_count": mesh.face_count},
            binary=[
                pack_vertex_buffer(np.arange(mesh.vertex_count), mesh.positions),
                pack_face_buffer(mesh.faces),
            ],
        )

    def current_mesh(self) -> TriMesh:
        if self.deployment is not None:
            return self.deployment.mesh
        if self.mesh is None:
            raise ProtocolError("no mesh loaded")
        return self.mesh

    def _on_load(self, body):
        if "mesh_path" in body:
            mesh = stent_io.load_mesh(body["mesh_path"])
            tree = stent_io.load_centerline(body["centerline_path"])
        elif "mesh_b64" in body:
            mesh = stent_io.polydata_to_mesh(
                stent_io.read_polydata(base64.b64decode(body["mesh_b64"])))
            tree = stent_io.read_centerline(
                stent_io.read_polydata(base64.b64decode(body["centerline_b64"])))
        else:
            raise ProtocolError("load needs mesh_path/centerline_path or *_b64 payloads")
        self.mesh = mesh
        self.tree = tree
        self.deployment = None
        self.selection = None
        yield self._mesh_full()
        yield _ack("load", centerline=_tree_json(tree))

    def _on_select_axis(self, body):
        if self.tree is None:
            raise ProtocolError("select_axis before load")
        sel = {
            "start": _anchor(body, "start"),
            "end": _anchor(body, "end"),
            "nominal_length": body.get("nominal_length"),
            "foreshortening": float(body.get("foreshortening", 0.0)),
        }
        axis = build_axis(self.tree, self._run_spec(sel, diameter=1.0))
        self.selection = sel
        self.deployment = None  # a new axis discards any in-progress deployment
        yield _ack(
            "select_axis",
            axis={"points": axis.points.tolist(), "segment_length": axis.segment_length},
        )

    def _on_set_params(self, body):
        allowed = {"diameter", "k", "d_infl", "dr", "d_con", "r_init",
                   "capsule_length", "correct_radius"}
        unknown = set(body) - allowed
        if unknown:
            raise ProtocolError(f"unknown parameter(s): {sorted(unknown)}")
        merged = {**self.params, **body}
        if "diameter" in merged:
            probe = self._run_spec(self.selection or _dummy_selection(), merged=merged)
            params_for(probe)  # validates the invariants
        self.params = merged
        yield _ack("set_params", params=self.params)

    def _run_spec(self, sel, diameter=None, merged=None) -> RunSpec:
        p = merged if merged is not None else self.params
        if diameter is None:
            diameter = p.get("diameter")
        if diameter is None or diameter <= 0:
            raise ProtocolError("set_params with a positive diameter is required first")
        return RunSpec(
            start=sel["start"], end=sel["end"], diameter=float(diameter),
            nominal_length=sel.get("nominal_length"),
            foreshortening=sel.get("foreshortening", 0.0),
            k=float(p.get("k", 0.4)), d_infl=float(p.get("d_infl", 6.5)),
            dr=float(p.get("dr", 0.1)), d_con=float(p.get("d_con", 0.1)),
            r_init=float(p.get("r_init", 0.1)),
            capsule_length=float(p.get("capsule_length", 2.5)),
            correct_radius=bool(p.get("correct_radius", True)),
        )

    def _ensure_deployment(self) -> DeploymentSession:
        if self.deployment is not None:
            return self.deployment
        if self.mesh is None:
            raise ProtocolError("inflate_to before load")
        if self.selection is None:
            raise ProtocolError("inflate_to before select_axis")
        spec = self._run_spec(self.selection)
        axis = build_axis(self.tree, spec)
        self.deployment = DeploymentSession(self.mesh, axis, params_for(spec))
        return self.deployment

    def _on_inflate_to(self, body):
        radius = body.get("radius")
        if not isinstance(radius, (int, float)) or isinstance(radius, bool):
            raise ProtocolError("inflate_to needs a numeric radius (mm)")
        dep = self._ensure_deployment()
        target = dep._target_effective(float(radius))
        if target <= dep.radius + 1e-12:
            yield _ack("inflate_to", radius=dep.radius, steps=0)
            return

        # one delta per step, coalesced above MAX_DELTA_RATE_HZ
        pending: set[int] = set()
        last_emit = 0.0
        last_record = None
        for record, changed in dep.step_stream(float(radius)):
            pending.update(int(i) for i in changed)
            last_record = record
            now = self._now()
            if pending and (now - last_emit) >= 1.0 / MAX_DELTA_RATE_HZ:
                yield from self._emit_step(dep, record, pending)
                pending.clear()
                last_emit = now
        if last_record is not None and pending:
            yield from self._emit_step(dep, last_record, pending)
        yield from self._emit_metrics(dep)
        yield _ack("inflate_to", radius=dep.radius, steps=dep.step_index)

    def _emit_step(self, dep, record, pending):
        yield OutMsg("step_info", {
            "step_index": record.step_index,
            "radius": record.radius,
            "contact_count": record.contact_count,
            "influence_count": record.influence_count,
            "max_displacement": record.max_displacement,
        })
        idx = np.fromiter(sorted(pending), dtype=np.int64, count=len(pending))
        yield OutMsg("mesh_delta", {"count": int(len(idx))},
                     binary=[pack_vertex_buffer(idx, dep.positions[idx])])

    def _emit_metrics(self, dep):
        profile = mis_radius_profile(dep.mesh, dep.axis.points, spacing=0.5)
        yield OutMsg("metrics_update", {
            "prescribed_diameter": float(self.params.get("diameter", 0.0)),
            "profile": [
                {"arc_length": s.arc_length, "mis_diameter": 2.0 * s.mis_radius}
                for s in profile
            ],
        })

    def _on_reset(self, body):
        if self.mesh is None:
            raise ProtocolError("reset before load")
        self.deployment = None
        yield _ack("reset")
        yield self._mesh_full()

    def _on_export(self, body):
        name = body.get("path")
        if not isinstance(name, str) or not name:
            raise ProtocolError("export needs a file name in 'path'")
        target = (self.export_dir / name).resolve()
        if self.export_dir.resolve() not in target.parents and target != self.export_dir.resolve():
            raise ProtocolError("export path escapes the export directory")
        target.parent.mkdir(parents=True, exist_ok=True)
        stent_io.save_mesh(target, self.current_mesh())
        yield _ack("export", path=str(target))


def _anchor(body, key):
    obj = body.get(key)
    if not isinstance(obj, dict) or "path" not in obj or "arc" not in obj:
        raise ProtocolError(f"select_axis body needs {key} = {{path, arc}}")
    return int(obj["path"]), float(obj["arc"])


def _dummy_selection():
    return {"start": (0, 0.0), "end": (0, 1.0), "nominal_length": None,
            "foreshortening": 0.0}


def _tree_json(tree: CenterlineTree) -> dict:
    return {
        "paths": [
            {
                "id": p.path_id,
                "points": p.points.tolist(),
                "mis_radius": p.mis_radius.tolist(),
                "parent": tree.parent.get(p.path_id),
                "attach_point": tree.attach_point.get(p.path_id),
            }
            for p in tree.paths
        ]
    }
