"""File formats: the ASCII VTP polydata subset used for meshes and
centerlines, a minimal OBJ path for inspectable fixtures, and the batch
deployment configuration document.

The polydata subset is deliberately narrow: XML VTKFile/PolyData, one Piece,
ASCII-encoded DataArrays. Anything else (binary, appended, compressed,
multi-piece) is rejected loudly rather than half-read.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .centerline import CenterlinePath, CenterlineTree, build_ancestry
from .errors import ConfigError, ParseError, UnsupportedEncodingError
from .mesh import TriMesh

RADIUS_ARRAY_NAMES = ("MaximumInscribedSphereRadius", "Radius")


@dataclass
class PolyDataDocument:
    points: np.ndarray
    polys: np.ndarray  # (m, 3) after fan triangulation
    lines: list[np.ndarray] = dataclass_field(default_factory=list)
    point_data: dict[str, np.ndarray] = dataclass_field(default_factory=dict)


def _parse_numbers(text: str, dtype):
    if text is None or not text.strip():
        return np.array([], dtype=dtype)
    try:
        return np.array(text.split(), dtype=dtype)
    except ValueError as e:
        raise ParseError(f"malformed numeric data in DataArray: {e}") from None


def _data_array(elem) -> np.ndarray:
    fmt = elem.get("format", "ascii")
    if fmt != "ascii":
        raise UnsupportedEncodingError(
            f"unsupported encoding {fmt!r}: only ascii DataArrays are supported"
        )
    vtk_type = elem.get("type", "Float64")
    dtype = np.int64 if vtk_type.startswith(("Int", "UInt")) else np.float64
    arr = _parse_numbers(elem.text, dtype)
    ncomp = int(elem.get("NumberOfComponents", "1"))
    if ncomp > 1:
        if len(arr) % ncomp:
            raise ParseError(
                f"DataArray {elem.get('Name', '?')!r} length {len(arr)} not divisible "
                f"by NumberOfComponents={ncomp}"
            )
        arr = arr.reshape(-1, ncomp)
    return arr


def _cells(block) -> list[np.ndarray]:
    conn = offsets = None
    for da in block.findall("DataArray"):
        name = da.get("Name")
        if name == "connectivity":
            conn = _data_array(da).astype(np.int64).ravel()
        elif name == "offsets":
            offsets = _data_array(da).astype(np.int64).ravel()
    if conn is None or offsets is None:
        raise ParseError(f"{block.tag} block missing connectivity/offsets arrays")
    out = []
    prev = 0
    for off in offsets:
        if off < prev or off > len(conn):
            raise ParseError(f"{block.tag} offsets are not monotone within bounds")
        out.append(conn[prev:off])
        prev = int(off)
    return out


def read_polydata(data: bytes | str) -> PolyDataDocument:
    """Parse the supported VTP subset; never silently mis-reads.

    Polygons with more than three vertices are fan-triangulated.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="strict")
    try:
        root = ET.fromstring(data)
    except ET.ParseError as e:
        raise ParseError(f"malformed XML: {e}") from None
    if root.tag != "VTKFile":
        raise ParseError(f"root element is {root.tag!r}, expected VTKFile")
    if root.get("type") != "PolyData":
        raise ParseError(f"VTKFile type is {root.get('type')!r}, expected PolyData")
    if root.get("compressor"):
        raise UnsupportedEncodingError("unsupported encoding: compressed VTP")
    if root.find("AppendedData") is not None:
        raise UnsupportedEncodingError("unsupported encoding: appended data")
    poly = root.find("PolyData")
    if poly is None:
        raise ParseError("missing PolyData element")
    pieces = poly.findall("Piece")
    if len(pieces) != 1:
        raise ParseError(f"expected exactly one Piece, found {len(pieces)}")
    piece = pieces[0]

    points_block = piece.find("Points")
    if points_block is None:
        raise ParseError("Piece has no Points block")
    pts_arrays = points_block.findall("DataArray")
    if len(pts_arrays) != 1:
        raise ParseError("Points block must hold exactly one DataArray")
    points = _data_array(pts_arrays[0])
    if points.ndim != 2 or points.shape[1] != 3:
        raise ParseError("Points array must have 3 components")

    n = len(points)
    tris: list[np.ndarray] = []
    polys_block = piece.find("Polys")
    if polys_block is not None and len(polys_block):
        for cell in _cells(polys_block):
            if len(cell) < 3:
                raise ParseError(f"polygon cell with {len(cell)} vertices")
            if cell.min() < 0 or cell.max() >= n:
                raise ParseError("polygon connectivity index out of range")
            for i in range(1, len(cell) - 1):
                tris.append(np.array([cell[0], cell[i], cell[i + 1]]))
    lines: list[np.ndarray] = []
    lines_block = piece.find("Lines")
    if lines_block is not None and len(lines_block):
        for cell in _cells(lines_block):
            if len(cell) < 2:
                raise ParseError(f"line cell with {len(cell)} vertices")
            if cell.min() < 0 or cell.max() >= n:
                raise ParseError("line connectivity index out of range")
            lines.append(cell)

    point_data: dict[str, np.ndarray] = {}
    pd_block = piece.find("PointData")
    if pd_block is not None:
        for da in pd_block.findall("DataArray"):
            name = da.get("Name")
            if not name:
                raise ParseError("PointData DataArray without a Name")
            arr = _data_array(da)
            if len(arr) != n:
                raise ParseError(f"PointData array {name!r} length mismatch")
            point_data[name] = arr

    polys = (np.array(tris, dtype=np.int64).reshape(-1, 3)
             if tris else np.empty((0, 3), dtype=np.int64))
    return PolyDataDocument(points=np.asarray(points, dtype=np.float64),
                            polys=polys, lines=lines, point_data=point_data)


def _fmt_floats(arr: np.ndarray, per_line: int) -> str:
    flat = np.asarray(arr, dtype=np.float64).ravel()
    parts = [format(x, ".17g") for x in flat]
    lines = []
    for i in range(0, len(parts), per_line):
        lines.append(" ".join(parts[i:i + per_line]))
    return "\n".join(lines)


def _fmt_ints(arr, per_line: int) -> str:
    flat = np.asarray(arr, dtype=np.int64).ravel()
    parts = [str(int(x)) for x in flat]
    lines = []
    for i in range(0, len(parts), per_line):
        lines.append(" ".join(parts[i:i + per_line]))
    return "\n".join(lines)


def write_polydata(doc: PolyDataDocument) -> bytes:
    """Serialize to the ASCII VTP subset; identical documents yield identical
    bytes (point-data keys are emitted sorted). Floats carry 17 significant
    digits so 64-bit values round-trip exactly."""
    n = len(doc.points)
    out = []
    out.append('<?xml version="1.0"?>')
    out.append('<VTKFile type="PolyData" version="0.1" byte_order="LittleEndian">')
    out.append("  <PolyData>")
    n_polys = len(doc.polys)
    n_lines = len(doc.lines)
    out.append(
        f'    <Piece NumberOfPoints="{n}" NumberOfVerts="0" NumberOfLines="{n_lines}" '
        f'NumberOfStrips="0" NumberOfPolys="{n_polys}">'
    )
    if doc.point_data:
        out.append("      <PointData>")
        for name in sorted(doc.point_data):
            arr = np.asarray(doc.point_data[name])
            ncomp = 1 if arr.ndim == 1 else arr.shape[1]
            is_int = np.issubdtype(arr.dtype, np.integer)
            vtk_type = "Int64" if is_int else "Float64"
            out.append(
                f'        <DataArray type="{vtk_type}" Name="{name}" '
                f'NumberOfComponents="{ncomp}" format="ascii">'
            )
            out.append(_fmt_ints(arr, 9) if is_int else _fmt_floats(arr, 9))
            out.append("        </DataArray>")
        out.append("      </PointData>")
    out.append("      <Points>")
    out.append('        <DataArray type="Float64" NumberOfComponents="3" format="ascii">')
    out.append(_fmt_floats(doc.points, 3))
    out.append("        </DataArray>")
    out.append("      </Points>")
    if doc.lines:
        out.append("      <Lines>")
        out.append('        <DataArray type="Int64" Name="connectivity" format="ascii">')
        out.append(_fmt_ints(np.concatenate(doc.lines), 12))
        out.append("        </DataArray>")
        out.append('        <DataArray type="Int64" Name="offsets" format="ascii">')
        out.append(_fmt_ints(np.cumsum([len(c) for c in doc.lines]), 12))
        out.append("        </DataArray>")
        out.append("      </Lines>")
    if n_polys:
        out.append("      <Polys>")
        out.append('        <DataArray type="Int64" Name="connectivity" format="ascii">')
        out.append(_fmt_ints(doc.polys, 12))
        out.append("        </DataArray>")
        out.append('        <DataArray type="Int64" Name="offsets" format="ascii">')
        out.append(_fmt_ints(np.arange(3, 3 * n_polys + 1, 3), 12))
        out.append("        </DataArray>")
        out.append("      </Polys>")
    out.append("    </Piece>")
    out.append("  </PolyData>")
    out.append("</VTKFile>")
    out.append("")
    return "\n".join(out).encode("utf-8")


def mesh_to_polydata(mesh: TriMesh) -> PolyDataDocument:
    return PolyDataDocument(points=mesh.positions.copy(), polys=mesh.faces.copy(),
                            point_data={k: v.copy() for k, v in mesh.point_data.items()})


def polydata_to_mesh(doc: PolyDataDocument, validate: bool = True) -> TriMesh:
    if not len(doc.polys):
        raise ParseError("polydata document holds no triangles")
    return TriMesh(doc.points, doc.polys, point_data=doc.point_data, validate=validate)


def read_centerline(doc: PolyDataDocument) -> CenterlineTree:
    """Centerline tree from a polydata document: one path per line cell, MIS
    radii from the VMTK-convention point array."""
    if not doc.lines:
        raise ParseError("centerline document has no Lines cells")
    radius = None
    for name in RADIUS_ARRAY_NAMES:
        if name in doc.point_data:
            radius = np.asarray(doc.point_data[name], dtype=float).ravel()
            break
    if radius is None:
        raise ParseError(
            "centerline document lacks a radius array; accepted names: "
            + ", ".join(RADIUS_ARRAY_NAMES)
        )
    paths = []
    for i, cell in enumerate(doc.lines):
        paths.append(CenterlinePath(doc.points[cell], radius[cell], path_id=i))
    if len(paths) == 1:
        return CenterlineTree((paths[0],), {}, {})
    return build_ancestry(paths)


def centerline_to_polydata(tree: CenterlineTree) -> PolyDataDocument:
    pts, radii, cells = [], [], []
    offset = 0
    for p in sorted(tree.paths, key=lambda q: q.path_id):
        pts.append(p.points)
        radii.append(p.mis_radius)
        cells.append(np.arange(offset, offset + len(p.points), dtype=np.int64))
        offset += len(p.points)
    return PolyDataDocument(
        points=np.concatenate(pts),
        polys=np.empty((0, 3), dtype=np.int64),
        lines=cells,
        point_data={"MaximumInscribedSphereRadius": np.concatenate(radii)},
    )


# -- OBJ (v/f records only) ------------------------------------------------------


def read_obj(data: bytes | str) -> TriMesh:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    verts, faces = [], []
    for lineno, line in enumerate(data.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0] not in ("v", "f"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ParseError(f"OBJ line {lineno}: vertex needs 3 coordinates")
            verts.append([float(x) for x in parts[1:4]])
        else:
            if len(parts) != 4:
                raise ParseError(f"OBJ line {lineno}: only triangle faces supported")
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return TriMesh(np.array(verts, dtype=float), np.array(faces, dtype=np.int64))


def write_obj(mesh: TriMesh) -> bytes:
    lines = []
    for p in mesh.positions:
        lines.append(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
    for f in mesh.faces:
        lines.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    lines.append("")
    return "\n".join(lines).encode("utf-8")


# -- deployment configuration ------------------------------------------------------

CONFIG_DEFAULTS = {
    "k": 0.4,
    "d_infl": 6.5,
    "dr": 0.1,
    "d_con": 0.1,
    "r_init": 0.1,
    "foreshortening": 0.0,
}


@dataclass(frozen=True)
class StentEntry:
    positions: tuple[tuple[tuple[int, float], tuple[int, float]], ...]  # (start, end) pairs
    diameters: tuple[float, ...]
    lengths: tuple[float | None, ...]
    foreshortening: float
    k: float
    d_infl: float
    dr: float
    d_con: float
    r_init: float

    def combinations(self):
        """Cartesian product of positions x diameters x lengths."""
        for pi, pos in enumerate(self.positions):
            for d in self.diameters:
                for ln in self.lengths:
                    yield pi, pos, d, ln


@dataclass(frozen=True)
class DeploymentConfigDoc:
    mesh_path: str
    centerline_path: str
    stents: tuple[StentEntry, ...]
    output_path: str
    emit_metrics: bool
    capsule_length: float


def _cfg_get(obj, key, path, expected, required=True, default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}.{key}: required field missing" if path else f"{key}: required field missing")
        return default
    val = obj[key]
    if expected is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{_join(path, key)}: expected a number")
        return float(val)
    if not isinstance(val, expected):
        raise ConfigError(f"{_join(path, key)}: expected {expected.__name__}")
    return val


def _join(path, key):
    return f"{path}.{key}" if path else key


def _parse_anchor(obj, path):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object with 'path' and 'arc'")
    pid = obj.get("path")
    arc = obj.get("arc")
    if not isinstance(pid, int) or isinstance(pid, bool):
        raise ConfigError(f"{path}.path: expected an integer path id")
    if isinstance(arc, bool) or not isinstance(arc, (int, float)):
        raise ConfigError(f"{path}.arc: expected an arc length in mm")
    return int(pid), float(arc)


def _as_list(val):
    return val if isinstance(val, list) else [val]


def parse_config(data: bytes | str) -> DeploymentConfigDoc:
    """Validate and normalize a batch configuration document.

    Diameter, length and position may each be lists; cmd_batch enumerates
    their Cartesian product. Schema violations name the offending field.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected an object")
    schema = raw.get("schema", 1)
    if schema != 1:
        raise ConfigError(f"schema: unsupported version {schema!r}")
    mesh_path = _cfg_get(raw, "mesh", "", str)
    centerline_path = _cfg_get(raw, "centerline", "", str)
    output_path = _cfg_get(raw, "output_path", "", str, required=False, default="out")
    emit_metrics = raw.get("emit_metrics", True)
    if not isinstance(emit_metrics, bool):
        raise ConfigError("emit_metrics: expected true or false")
    capsule_length = _cfg_get(raw, "capsule_length", "", float, required=False, default=2.5)
    if capsule_length <= 0:
        raise ConfigError("capsule_length: must be positive")

    stents_raw = raw.get("stents")
    if not isinstance(stents_raw, list) or not stents_raw:
        raise ConfigError("stents: expected a non-empty list")
    stents = []
    for i, entry in enumerate(stents_raw):
        path = f"stents[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: expected an object")
        if "positions" in entry:
            if not isinstance(entry["positions"], list) or not entry["positions"]:
                raise ConfigError(f"{path}.positions: expected a non-empty list")
            positions = tuple(
                (_parse_anchor(p.get("start"), f"{path}.positions[{j}].start"),
                 _parse_anchor(p.get("end"), f"{path}.positions[{j}].end"))
                for j, p in enumerate(entry["positions"])
            )
        else:
            positions = ((
                _parse_anchor(entry.get("start"), f"{path}.start"),
                _parse_anchor(entry.get("end"), f"{path}.end"),
            ),)
        diam_raw = entry.get("target_diameter")
        if diam_raw is None:
            raise ConfigError(f"{path}.target_diameter: required field missing")
        diameters = []
        for j, d in enumerate(_as_list(diam_raw)):
            if isinstance(d, bool) or not isinstance(d, (int, float)) or d <= 0:
                raise ConfigError(f"{path}.target_diameter: must be a positive number (mm)")
            diameters.append(float(d))
        lengths: list[float | None] = []
        for ln in _as_list(entry.get("nominal_length", None)):
            if ln is None:
                lengths.append(None)
                continue
            if isinstance(ln, bool) or not isinstance(ln, (int, float)) or ln <= 0:
                raise ConfigError(f"{path}.nominal_length: must be a positive number (mm)")
            lengths.append(float(ln))
        fshort = entry.get("foreshortening", CONFIG_DEFAULTS["foreshortening"])
        if isinstance(fshort, bool) or not isinstance(fshort, (int, float)) or not 0 <= fshort < 1:
            raise ConfigError(f"{path}.foreshortening: must be a fraction in [0, 1)")
        overrides = {}
        for key in ("k", "d_infl", "dr", "d_con", "r_init"):
            v = entry.get(key, CONFIG_DEFAULTS[key])
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
                raise ConfigError(f"{path}.{key}: must be a non-negative number")
            overrides[key] = float(v)
        stents.append(StentEntry(
            positions=positions,
            diameters=tuple(diameters),
            lengths=tuple(lengths),
            foreshortening=float(fshort),
            **overrides,
        ))
    return DeploymentConfigDoc(
        mesh_path=mesh_path,
        centerline_path=centerline_path,
        stents=tuple(stents),
        output_path=output_path,
        emit_metrics=emit_metrics,
        capsule_length=float(capsule_length),
    )


# -- path-level conveniences ------------------------------------------------------


def load_mesh(path) -> TriMesh:
    with open(path, "rb") as f:
        data = f.read()
    if str(path).lower().endswith(".obj"):
        return read_obj(data)
    return polydata_to_mesh(read_polydata(data))


def load_centerline(path) -> CenterlineTree:
    with open(path, "rb") as f:
        return read_centerline(read_polydata(f.read()))


def save_mesh(path, mesh: TriMesh):
    data = write_obj(mesh) if str(path).lower().endswith(".obj") else write_polydata(mesh_to_polydata(mesh))
    with open(path, "wb") as f:
        f.write(data)


def save_centerline(path, tree: CenterlineTree):
    with open(path, "wb") as f:
        f.write(write_polydata(centerline_to_polydata(tree)))
