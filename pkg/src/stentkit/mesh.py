"""Indexed triangle meshes: construction-time validation, edge topology,
watertightness and self-intersection checks, and the vertex queries used by
the deformation engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import MeshError

MIN_FACE_AREA = 1e-12  # mm^2; smaller faces are rejected at load time
INTERSECT_TOL = 1e-9  # mm; contacts shallower than this are not intersections


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box, min <= max componentwise (mm)."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=float).reshape(3)
        hi = np.asarray(self.max, dtype=float).reshape(3)
        if np.any(lo > hi):
            raise ValueError("Aabb min must be <= max componentwise")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.min) & (pts <= self.max), axis=1)


@dataclass(frozen=True)
class ValidityReport:
    is_watertight: bool
    boundary_edge_count: int
    non_manifold_edge_count: int
    self_intersecting_face_pairs: tuple[tuple[int, int], ...]

    @property
    def is_clean(self) -> bool:
        return self.is_watertight and not self.self_intersecting_face_pairs


class TriMesh:
    """Triangle surface mesh with CCW-outward faces.

    Degenerate faces (repeated indices or area below MIN_FACE_AREA) are
    rejected on construction rather than silently dropped: the deformation
    gradients downstream assume non-degenerate triangles.
    """

    def __init__(self, positions, faces, point_data=None, validate=True):
        self.positions = np.ascontiguousarray(positions, dtype=np.float64)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        self.point_data = dict(point_data) if point_data else {}
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise MeshError("positions must be an (n, 3) array")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be an (m, 3) array")
        if validate:
            self._validate()

    def _validate(self):
        if not np.isfinite(self.positions).all():
            raise MeshError("positions contain non-finite values")
        n = len(self.positions)
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= n:
                raise MeshError("face index out of range")
            f = self.faces
            if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
                raise MeshError("face with repeated vertex indices")
            areas = self.face_areas()
            if np.any(areas < MIN_FACE_AREA):
                bad = int(np.argmin(areas))
                raise MeshError(
                    f"degenerate face {bad}: area {areas[bad]:.3e} mm^2 below {MIN_FACE_AREA:g}"
                )
        for name, arr in self.point_data.items():
            if len(arr) != n:
                raise MeshError(f"point-data array {name!r} length mismatch")

    @property
    def vertex_count(self) -> int:
        return len(self.positions)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def face_areas(self) -> np.ndarray:
        p0 = self.positions[self.faces[:, 0]]
        e1 = self.positions[self.faces[:, 1]] - p0
        e2 = self.positions[self.faces[:, 2]] - p0
        return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)

    def bounds(self) -> Aabb:
        return Aabb(self.positions.min(axis=0), self.positions.max(axis=0))

    def copy(self) -> "TriMesh":
        return TriMesh(
            self.positions.copy(),
            self.faces.copy(),
            {k: v.copy() for k, v in self.point_data.items()},
            validate=False,
        )

    def with_positions(self, positions) -> "TriMesh":
        return TriMesh(positions, self.faces.copy(),
                       {k: v.copy() for k, v in self.point_data.items()}, validate=False)


# -- edge topology -------------------------------------------------------------


def build_edge_map(mesh: TriMesh) -> dict[tuple[int, int], list[int]]:
    """Undirected edge -> ascending list of incident face indices."""
    edge_map: dict[tuple[int, int], list[int]] = {}
    for fi, (a, b, c) in enumerate(mesh.faces):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (int(u), int(v)) if u < v else (int(v), int(u))
            edge_map.setdefault(key, []).append(fi)
    return edge_map


def _edge_stats(mesh: TriMesh):
    """Vectorized per-undirected-edge incidence and orientation tally.

    Returns (boundary_count, non_manifold_count). An edge is non-manifold if
    more than two faces share it, or exactly two share it with the same
    traversal direction (inconsistent orientation).
    """
    f = mesh.faces
    if not len(f):
        return 0, 0
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    lo = edges.min(axis=1)
    hi = edges.max(axis=1)
    forward = edges[:, 0] == lo  # directed u->v with u < v
    keys = lo * len(mesh.positions) + hi
    order = np.argsort(keys, kind="stable")
    keys_sorted = keys[order]
    fwd_sorted = forward[order].astype(np.int64)
    uniq, start = np.unique(keys_sorted, return_index=True)
    counts = np.diff(np.append(start, len(keys_sorted)))
    fwd_per_edge = np.add.reduceat(fwd_sorted, start)
    boundary = int(np.sum(counts == 1))
    pair = counts == 2
    inconsistent = pair & (fwd_per_edge != 1)
    non_manifold = int(np.sum(counts > 2) + np.sum(inconsistent))
    return boundary, non_manifold


# -- triangle-triangle intersection --------------------------------------------


def _segment_triangle_hits(orig, dest, ta, tb, tc, tol):
    """Rows where segment orig->dest pierces the triangle interior.

    Moller-Trumbore with strict interior margins: grazing contacts within tol
    of an edge, a vertex, or the segment endpoints do not count.
    """
    d = dest - orig
    e1 = tb - ta
    e2 = tc - ta
    p = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, p)
    scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1) * np.linalg.norm(d, axis=1)
    scale = np.maximum(scale, 1e-300)
    ok = np.abs(det) > tol * scale  # near-parallel (incl. coplanar) never hits
    inv = np.where(ok, 1.0 / np.where(det == 0.0, 1.0, det), 0.0)
    t_vec = orig - ta
    u = np.einsum("ij,ij->i", t_vec, p) * inv
    q = np.cross(t_vec, e1)
    v = np.einsum("ij,ij->i", d, q) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    eps = 1e-12
    inside = (u > eps) & (v > eps) & (u + v < 1.0 - eps)
    within = (t > eps) & (t < 1.0 - eps)
    return ok & inside & within


def _pairs_intersect(tri1, tri2, tol=INTERSECT_TOL) -> np.ndarray:
    """Boolean mask over candidate pairs: interior (non-coplanar) overlap.

    Shared-plane contact is deliberately not an intersection; a transversal
    overlap always has at least one edge of one triangle piercing the other's
    interior.
    """
    hit = np.zeros(len(tri1), dtype=bool)
    for src, dst in ((tri1, tri2), (tri2, tri1)):
        for i0, i1 in ((0, 1), (1, 2), (2, 0)):
            rows = ~hit
            if not rows.any():
                break
            h = _segment_triangle_hits(
                src[rows, i0], src[rows, i1],
                dst[rows, 0], dst[rows, 1], dst[rows, 2], tol,
            )
            idx = np.flatnonzero(rows)
            hit[idx[h]] = True
    return hit


def _candidate_face_pairs(mesh: TriMesh) -> np.ndarray:
    """Broad phase: face pairs whose inflated AABBs share a uniform-grid cell.

    Grid cell size tracks the typical face extent so bins stay small; faces
    are binned into every cell their box touches, which keeps the pair set a
    superset of all geometrically overlapping boxes.
    """
    f = mesh.faces
    if len(f) < 2:
        return np.empty((0, 2), dtype=np.int64)
    tri = mesh.positions[f]  # (m, 3, 3)
    lo = tri.min(axis=1) - INTERSECT_TOL
    hi = tri.max(axis=1) + INTERSECT_TOL
    ext = hi - lo
    cell = max(float(np.median(ext.max(axis=1))) * 2.0, 1e-6)
    lo_cell = np.floor(lo / cell).astype(np.int64)
    hi_cell = np.floor(hi / cell).astype(np.int64)
    spans = hi_cell - lo_cell + 1
    reps = spans.prod(axis=1)
    face_ids = np.repeat(np.arange(len(f), dtype=np.int64), reps)
    # enumerate covered cells per face
    offsets = np.concatenate([[0], np.cumsum(reps)])
    total = int(offsets[-1])
    local = np.arange(total, dtype=np.int64) - offsets[face_ids]
    sx = spans[face_ids]
    cz = local % sx[:, 2]
    cy = (local // sx[:, 2]) % sx[:, 1]
    cx = local // (sx[:, 2] * sx[:, 1])
    cells = lo_cell[face_ids] + np.stack([cx, cy, cz], axis=1)
    # hash cells, group, and emit within-cell pairs
    cmin = cells.min(axis=0)
    cspan = cells.max(axis=0) - cmin + 1
    keys = ((cells[:, 0] - cmin[0]) * cspan[1] + (cells[:, 1] - cmin[1])) * cspan[2] + (
        cells[:, 2] - cmin[2]
    )
    order = np.lexsort((face_ids, keys))
    keys_s = keys[order]
    faces_s = face_ids[order]
    _, start = np.unique(keys_s, return_index=True)
    counts = np.diff(np.append(start, len(keys_s)))
    max_count = int(counts.max()) if len(counts) else 0
    if max_count < 2:
        return np.empty((0, 2), dtype=np.int64)
    # all within-cell pairs without a per-cell loop: for each offset, pair
    # every row with the row that many places later in the same cell
    out = []
    for offset in range(1, max_count):
        same = keys_s[:-offset] == keys_s[offset:]
        if same.any():
            out.append(np.stack([faces_s[:-offset][same], faces_s[offset:][same]], axis=1))
    pairs = np.concatenate(out)
    pairs.sort(axis=1)
    # dedupe on a scalar key; unique over 2-d rows is far slower
    pair_keys = np.unique(pairs[:, 0] * np.int64(len(f)) + pairs[:, 1])
    pairs = np.stack([pair_keys // len(f), pair_keys % len(f)], axis=1)
    # drop pairs that share any vertex (standard adjacency exclusion)
    fa = f[pairs[:, 0]]
    fb = f[pairs[:, 1]]
    shared = np.zeros(len(pairs), dtype=bool)
    for i in range(3):
        for j in range(3):
            shared |= fa[:, i] == fb[:, j]
    pairs = pairs[~shared]
    # AABB overlap filter
    keep = np.all((lo[pairs[:, 0]] <= hi[pairs[:, 1]]) & (lo[pairs[:, 1]] <= hi[pairs[:, 0]]), axis=1)
    return pairs[keep]


def self_intersecting_face_pairs(mesh: TriMesh) -> list[tuple[int, int]]:
    """All non-adjacent face pairs with interior triangle-triangle overlap."""
    pairs = _candidate_face_pairs(mesh)
    if not len(pairs):
        return []
    tri = mesh.positions[mesh.faces]
    mask = _pairs_intersect(tri[pairs[:, 0]], tri[pairs[:, 1]])
    hits = pairs[mask]
    return [(int(a), int(b)) for a, b in hits]


def check_validity(mesh: TriMesh) -> ValidityReport:
    """Watertightness plus self-intersection scan.

    Watertight means every edge bounds exactly two faces traversed in
    opposite directions.
    """
    boundary, non_manifold = _edge_stats(mesh)
    pairs = self_intersecting_face_pairs(mesh)
    return ValidityReport(
        is_watertight=(boundary == 0 and non_manifold == 0),
        boundary_edge_count=boundary,
        non_manifold_edge_count=non_manifold,
        self_intersecting_face_pairs=tuple(sorted(pairs)),
    )


# -- vertex queries ------------------------------------------------------------


def vertices_near_field(mesh: TriMesh, field, radius, d_con, cull: Aabb) -> np.ndarray:
    """Sorted indices of vertices inside cull whose field value at the given
    radius is strictly below d_con.

    The cull box must be conservative (field box at the final radius inflated
    by the influence distance) so the result matches an uncached full scan.
    """
    inside = np.flatnonzero(cull.contains(mesh.positions))
    if not len(inside):
        return np.empty(0, dtype=np.int64)
    vals = field.distance_fold(mesh.positions[inside]) - radius
    return inside[vals < d_con]


class UniformGrid:
    """Hash grid over a point set, for radius membership queries.

    Cell size defaults to the query radius; results are independent of the
    cell size (pure distance predicate, the grid only prunes candidates).
    """

    def __init__(self, points: np.ndarray, cell: float):
        if cell <= 0:
            raise ValueError("cell size must be positive")
        self.points = np.asarray(points, dtype=float)
        self.cell = float(cell)
        coords = np.floor(self.points / self.cell).astype(np.int64)
        self._cells: dict[tuple[int, int, int], np.ndarray] = {}
        order = np.lexsort((coords[:, 2], coords[:, 1], coords[:, 0]))
        sorted_coords = coords[order]
        if len(order):
            change = np.any(np.diff(sorted_coords, axis=0) != 0, axis=1)
            starts = np.concatenate([[0], np.flatnonzero(change) + 1])
            ends = np.concatenate([starts[1:], [len(order)]])
            for s, e in zip(starts, ends):
                key = tuple(int(c) for c in sorted_coords[s])
                self._cells[key] = order[s:e]

    def near(self, query_points: np.ndarray, radius: float) -> np.ndarray:
        """Mask over query_points: strictly within radius of any grid point."""
        qp = np.atleast_2d(np.asarray(query_points, dtype=float))
        out = np.zeros(len(qp), dtype=bool)
        if not len(self.points):
            return out
        qcoords = np.floor(qp / self.cell).astype(np.int64)
        reach = int(np.ceil(radius / self.cell))
        # group queries by cell so each group tests one shared candidate set
        order = np.lexsort((qcoords[:, 2], qcoords[:, 1], qcoords[:, 0]))
        sc = qcoords[order]
        if not len(order):
            return out
        change = np.any(np.diff(sc, axis=0) != 0, axis=1)
        starts = np.concatenate([[0], np.flatnonzero(change) + 1])
        ends = np.concatenate([starts[1:], [len(order)]])
        r2 = radius * radius
        for s, e in zip(starts, ends):
            base = sc[s]
            cand = []
            for dx in range(-reach, reach + 1):
                for dy in range(-reach, reach + 1):
                    for dz in range(-reach, reach + 1):
                        hit = self._cells.get((int(base[0] + dx), int(base[1] + dy), int(base[2] + dz)))
                        if hit is not None:
                            cand.append(hit)
            if not cand:
                continue
            cand_pts = self.points[np.concatenate(cand)]
            q = qp[order[s:e]]
            d2 = np.sum((q[:, None, :] - cand_pts[None, :, :]) ** 2, axis=2)
            out[order[s:e]] = np.any(d2 < r2, axis=1)
        return out


def vertices_within(mesh: TriMesh, seeds: np.ndarray, d_infl: float) -> np.ndarray:
    """Sorted indices of vertices strictly within d_infl of any seed vertex.

    Seeds themselves are always included (distance zero). Equals the brute
    force double loop for any grid cell size.
    """
    if d_infl <= 0:
        raise ValueError("d_infl must be positive")
    seeds = np.asarray(seeds, dtype=np.int64)
    if not len(seeds):
        return np.empty(0, dtype=np.int64)
    grid = UniformGrid(mesh.positions[seeds], d_infl)
    mask = grid.near(mesh.positions, d_infl)
    return np.flatnonzero(mask)


def nearest_distance_to_set(points: np.ndarray, targets: np.ndarray, upper: float) -> np.ndarray:
    """Distance from each point to the nearest target, inf beyond upper.

    KD-tree backed; the deformation engine uses this for both the influence
    membership and the alpha taper in one query.
    """
    if not len(targets):
        return np.full(len(points), np.inf)
    tree = cKDTree(targets)
    d, _ = tree.query(points, k=1, distance_upper_bound=upper, workers=1)
    return d


# -- point/triangle distance (used by metrics) ---------------------------------


def point_triangle_distances(point: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Distance from one point to each triangle in tri (m, 3, 3).

    Distance is either the orthogonal distance to the plane when the foot
    lies inside the triangle, or the nearest edge-segment distance otherwise.
    """
    p = np.asarray(point, dtype=float).reshape(3)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    n = np.cross(b - a, c - a)
    nn = np.maximum(np.einsum("ij,ij->i", n, n), 1e-300)
    t = (np.einsum("ij,j->i", n, p) - np.einsum("ij,ij->i", n, a)) / nn
    foot = p - t[:, None] * n
    # barycentric test for the foot point
    v0 = b - a
    v1 = c - a
    v2 = foot - a
    d00 = np.einsum("ij,ij->i", v0, v0)
    d01 = np.einsum("ij,ij->i", v0, v1)
    d11 = np.einsum("ij,ij->i", v1, v1)
    d20 = np.einsum("ij,ij->i", v2, v0)
    d21 = np.einsum("ij,ij->i", v2, v1)
    denom = np.maximum(d00 * d11 - d01 * d01, 1e-300)
    u = (d11 * d20 - d01 * d21) / denom
    v = (d00 * d21 - d01 * d20) / denom
    inside = (u >= 0) & (v >= 0) & (u + v <= 1)
    plane_dist = np.abs(t) * np.sqrt(nn)

    def seg_dist(s0, s1):
        d = s1 - s0
        h = np.clip(np.einsum("ij,ij->i", p - s0, d) / np.maximum(np.einsum("ij,ij->i", d, d), 1e-300), 0, 1)
        return np.linalg.norm(p - s0 - h[:, None] * d, axis=1)

    edge = np.minimum(np.minimum(seg_dist(a, b), seg_dist(b, c)), seg_dist(c, a))
    return np.where(inside, plane_dist, edge)
