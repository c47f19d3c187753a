"""Wire formats: the WebSocket session protocol envelope and the REST
request/response models.

Session protocol
----------------
Text frames carry JSON envelopes ``{"kind": ..., "seq": ..., "body": {...}}``
with seq strictly increasing per direction. When an envelope body sets
``"binary": true`` one or more binary frames follow immediately:

* vertex buffer: little-endian ``u32 count`` then ``count`` records of
  ``u32 index, f32 x, f32 y, f32 z``
* face buffer (mesh_full only, second frame): little-endian ``u32 count``
  then ``count`` records of ``u32 a, u32 b, u32 c``

Client kinds: load, select_axis, set_params, inflate_to, reset, export.
Server kinds: mesh_full, mesh_delta, step_info, metrics_update, ack, error.
"""

from __future__ import annotations

import struct

import numpy as np
from pydantic import BaseModel, Field

CLIENT_KINDS = {"load", "select_axis", "set_params", "inflate_to", "reset", "export"}
SERVER_KINDS = {"mesh_full", "mesh_delta", "step_info", "metrics_update", "ack", "error"}


def pack_vertex_buffer(indices: np.ndarray, positions: np.ndarray) -> bytes:
    """u32 count header, then (u32 index, 3 x f32) records, little-endian."""
    count = len(indices)
    rec = np.empty(count, dtype=[("i", "<u4"), ("x", "<f4"), ("y", "<f4"), ("z", "<f4")])
    rec["i"] = np.asarray(indices, dtype=np.uint32)
    pos = np.asarray(positions, dtype="<f4")
    rec["x"], rec["y"], rec["z"] = pos[:, 0], pos[:, 1], pos[:, 2]
    return struct.pack("<I", count) + rec.tobytes()


def unpack_vertex_buffer(data: bytes):
    (count,) = struct.unpack_from("<I", data, 0)
    rec = np.frombuffer(data, dtype=[("i", "<u4"), ("x", "<f4"), ("y", "<f4"), ("z", "<f4")],
                        count=count, offset=4)
    pos = np.stack([rec["x"], rec["y"], rec["z"]], axis=1)
    return rec["i"].astype(np.int64), pos


def pack_face_buffer(faces: np.ndarray) -> bytes:
    f = np.ascontiguousarray(faces, dtype="<u4")
    return struct.pack("<I", len(f)) + f.tobytes()


def unpack_face_buffer(data: bytes) -> np.ndarray:
    (count,) = struct.unpack_from("<I", data, 0)
    return np.frombuffer(data, dtype="<u4", count=count * 3, offset=4).reshape(count, 3).astype(np.int64)


# -- REST models ---------------------------------------------------------------


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class CheckRequest(BaseModel):
    mesh_path: str


class CheckResponse(BaseModel):
    is_watertight: bool
    boundary_edge_count: int
    non_manifold_edge_count: int
    self_intersecting_face_pairs: list[tuple[int, int]]


class DeployRequest(BaseModel):
    mesh_path: str
    centerline_path: str
    start_path: int
    start_arc: float
    end_path: int
    end_arc: float
    diameter: float = Field(gt=0)
    nominal_length: float | None = None
    foreshortening: float = Field(default=0.0, ge=0.0, lt=1.0)
    k: float = 0.4
    d_infl: float = 6.5
    dr: float = 0.1
    d_con: float = 0.1
    r_init: float = 0.1
    capsule_length: float = 2.5
    out_path: str


class DiameterSummaryModel(BaseModel):
    minimum: float
    maximum: float
    mean: float
    sd: float
    sample_count: int


class DeployResponse(BaseModel):
    steps: int
    moved_vertex_count: int
    wall_time_ms: float
    is_watertight: bool
    self_intersections: int
    stented_summary: DiameterSummaryModel
    out_path: str


class MetricsRequest(BaseModel):
    mesh_path: str
    centerline_path: str
    path_id: int | None = None
    spacing: float = Field(default=0.5, gt=0)


class ProfileSampleModel(BaseModel):
    arc_length: float
    mis_radius: float
    equivalent_radius: float | None = None
    cross_section_area: float | None = None
    note: str = ""


class MetricsResponse(BaseModel):
    profile: list[ProfileSampleModel]
    summary: DiameterSummaryModel
