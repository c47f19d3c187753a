"""Post-deployment geometry metrics: maximum-inscribed-sphere radius profile,
equivalent radius from planar cross-sections, and diameter summaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centerline import resample_arclength
from .mesh import TriMesh, point_triangle_distances


@dataclass(frozen=True)
class ProfileSample:
    arc_length: float
    mis_radius: float
    equivalent_radius: float | None = None
    cross_section_area: float | None = None
    note: str = ""  # "", "outside", "no_loop", "approximate"


@dataclass(frozen=True)
class DiameterSummary:
    minimum: float
    maximum: float
    mean: float
    sd: float
    sample_count: int

    def __str__(self):
        return (f"min {self.minimum:.2f} mm, max {self.maximum:.2f} mm, "
                f"mean {self.mean:.2f} +/- {self.sd:.2f} mm (n={self.sample_count})")


# three fixed, mutually skew ray directions; parity is voted across them so a
# single edge/vertex graze cannot flip the inside test
_PARITY_RAYS = np.array([
    [0.57735026918962584, 0.57735026918962584, 0.57735026918962584],
    [0.85811633479126189, -0.49483887294962186, 0.13707783890401887],
    [-0.23570226039551584, 0.94280904158206336, -0.23570226039551587],
])


def _ray_crossings(origin: np.ndarray, direction: np.ndarray, tri: np.ndarray) -> int:
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    p = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, p)
    ok = np.abs(det) > 1e-14
    inv = np.where(ok, 1.0 / np.where(det == 0, 1.0, det), 0.0)
    t_vec = origin - tri[:, 0]
    u = np.einsum("ij,ij->i", t_vec, p) * inv
    q = np.cross(t_vec, e1)
    v = np.einsum("j,ij->i", direction, q) * inv
    t = np.einsum("ij,ij->i", e2, q) * inv
    hits = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 1e-12)
    return int(np.sum(hits))


def point_inside_mesh(mesh: TriMesh, point) -> bool:
    """Ray-parity containment with a 3-ray majority vote."""
    tri = mesh.positions[mesh.faces]
    p = np.asarray(point, dtype=float).reshape(3)
    votes = sum((_ray_crossings(p, ray, tri) % 2) for ray in _PARITY_RAYS)
    return votes >= 2


def _resampled_query_points(polyline, spacing: float):
    axis = resample_arclength(np.asarray(polyline, dtype=float), spacing)
    pts = axis.points
    arcs = np.arange(len(pts)) * axis.segment_length
    arcs[-1] = axis.length
    return pts, arcs


def mis_radius_profile(mesh: TriMesh, polyline, spacing: float = 0.5) -> list[ProfileSample]:
    """Maximum-inscribed-sphere radius at equal arc-length samples along the
    polyline: the distance from each sample to the nearest wall triangle.

    Samples that fall outside the lumen are flagged rather than zeroed.
    """
    pts, arcs = _resampled_query_points(polyline, spacing)
    tri = mesh.positions[mesh.faces]
    out = []
    for p, s in zip(pts, arcs):
        r = float(point_triangle_distances(p, tri).min())
        note = "" if point_inside_mesh(mesh, p) else "outside"
        out.append(ProfileSample(float(s), r, note=note))
    return out


def _plane_basis(normal: np.ndarray):
    n = normal / np.linalg.norm(normal)
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(n)))] = 1.0
    u = np.cross(n, seed)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v


def _slice_loops(mesh: TriMesh, origin: np.ndarray, normal: np.ndarray):
    """Closed intersection loops of the mesh with a plane, as 2D polygons in
    the plane basis (origin at the query point)."""
    pos = mesh.positions
    s = (pos - origin) @ normal
    # vertices exactly on the plane would suppress edge crossings entirely;
    # nudge them to one side (far below any geometric tolerance)
    s = np.where(s == 0.0, 1e-12, s)
    f = mesh.faces
    sf = s[f]
    crossing = (sf.min(axis=1) < 0.0) & (sf.max(axis=1) > 0.0)
    if not crossing.any():
        return []
    u, v = _plane_basis(normal)
    segments = []
    for a, b, c in f[crossing]:
        ids = [int(a), int(b), int(c)]
        pts2d = []
        for i, j in ((0, 1), (1, 2), (2, 0)):
            si, sj = s[ids[i]], s[ids[j]]
            if (si < 0.0) == (sj < 0.0):
                continue
            t = si / (si - sj)
            p = pos[ids[i]] + t * (pos[ids[j]] - pos[ids[i]])
            key = (ids[i], ids[j]) if ids[i] < ids[j] else (ids[j], ids[i])
            pts2d.append((key, ((p - origin) @ u, (p - origin) @ v)))
        if len(pts2d) == 2:
            segments.append((pts2d[0], pts2d[1]))
    # chain segments into loops, matching on shared mesh edges
    adjacency: dict[tuple[int, int], list[int]] = {}
    for i, (e0, e1) in enumerate(segments):
        adjacency.setdefault(e0[0], []).append(i)
        adjacency.setdefault(e1[0], []).append(i)
    used = [False] * len(segments)
    loops = []
    for start in range(len(segments)):
        if used[start]:
            continue
        used[start] = True
        first_key, first_pt = segments[start][0]
        cur_key, cur_pt = segments[start][1]
        loop = [first_pt, cur_pt]
        closed = False
        while True:
            nxt = next((i for i in adjacency.get(cur_key, []) if not used[i]), None)
            if nxt is None:
                closed = cur_key == first_key
                break
            used[nxt] = True
            (k0, p0), (k1, p1) = segments[nxt]
            cur_key, cur_pt = (k1, p1) if k0 == cur_key else (k0, p0)
            if cur_key == first_key:
                closed = True
                break
            loop.append(cur_pt)
        if closed and len(loop) >= 3:
            loops.append(np.asarray(loop))
    return loops


def _shoelace_area(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def _point_in_loop(loop: np.ndarray, pt=(0.0, 0.0)) -> bool:
    x, y = pt
    xs, ys = loop[:, 0], loop[:, 1]
    x2, y2 = np.roll(xs, -1), np.roll(ys, -1)
    straddles = (ys > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = xs + (y - ys) / (y2 - ys) * (x2 - xs)
    return bool(np.sum(straddles & (xi > x)) % 2)


def _tangents(points: np.ndarray) -> np.ndarray:
    t = np.empty_like(points)
    t[1:-1] = points[2:] - points[:-2]
    t[0] = points[1] - points[0]
    t[-1] = points[-1] - points[-2]
    return t / np.linalg.norm(t, axis=1, keepdims=True)


def equivalent_radius_profile(mesh: TriMesh, polyline, spacing: float = 0.5) -> list[ProfileSample]:
    """Cross-sectional equivalent radius sqrt(area/pi) at equal arc-length
    samples, slicing orthogonal to the local polyline tangent.

    The loop enclosing the query point is used; if no loop encloses it, the
    nearest loop by centroid is taken and the sample flagged approximate.
    MIS radius is filled in alongside for convenience.
    """
    pts, arcs = _resampled_query_points(polyline, spacing)
    tangents = _tangents(pts)
    tri = mesh.positions[mesh.faces]
    out = []
    for p, s, n in zip(pts, arcs, tangents):
        mis = float(point_triangle_distances(p, tri).min())
        loops = _slice_loops(mesh, p, n)
        if not loops:
            out.append(ProfileSample(float(s), mis, note="no_loop"))
            continue
        containing = [lp for lp in loops if _point_in_loop(lp)]
        note = ""
        if containing:
            loop = min(containing, key=_shoelace_area)
        else:
            loop = min(loops, key=lambda lp: float(np.linalg.norm(lp.mean(axis=0))))
            note = "approximate"
        area = _shoelace_area(loop)
        out.append(ProfileSample(float(s), mis, float(np.sqrt(area / np.pi)), float(area), note))
    return out


def summarize(profile, region: tuple[float, float] | None = None) -> DiameterSummary:
    """Diameter statistics (2 x MIS radius) over an arc-length window.

    Uniform per-sample weighting; population standard deviation.
    """
    samples = [s for s in profile
               if region is None or region[0] <= s.arc_length <= region[1]]
    if not samples:
        raise ValueError("no profile samples in the requested region")
    d = np.array([2.0 * s.mis_radius for s in samples])
    return DiameterSummary(
        minimum=float(d.min()),
        maximum=float(d.max()),
        mean=float(d.mean()),
        sd=float(d.std()),
        sample_count=len(d),
    )


def profile_text(profile) -> str:
    """Tab-delimited export: arc_length, mis_radius, equivalent_radius, area."""
    lines = ["arc_length_mm\tmis_radius_mm\tequivalent_radius_mm\tcross_section_area_mm2\tnote"]
    for s in profile:
        req = "" if s.equivalent_radius is None else format(s.equivalent_radius, ".17g")
        area = "" if s.cross_section_area is None else format(s.cross_section_area, ".17g")
        lines.append(
            f"{s.arc_length:.17g}\t{s.mis_radius:.17g}\t{req}\t{area}\t{s.note}"
        )
    return "\n".join(lines) + "\n"
