"""Deterministic synthetic vessels and primitives for tests and demos.

All generators are pure functions of their arguments; identical calls produce
bitwise-identical meshes. Vessel walls are closed (capped) so the outputs are
watertight and orientable.
"""

from __future__ import annotations

import numpy as np

from .centerline import CenterlinePath, CenterlineTree, build_ancestry
from .mesh import TriMesh


def tube(radius_fn, length: float, n_theta: int = 64, n_z: int = 80,
         axis_origin=(0.0, 0.0, 0.0)) -> TriMesh:
    """Closed tube along +z with per-z radius from radius_fn(z).

    Faces wind counter-clockwise seen from outside; both ends are capped
    with triangle fans.
    """
    origin = np.asarray(axis_origin, dtype=float)
    zs = np.linspace(0.0, length, n_z + 1)
    thetas = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    radii = np.array([radius_fn(z) for z in zs], dtype=float)
    ring = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)

    pts = np.empty(((n_z + 1) * n_theta + 2, 3))
    for i, z in enumerate(zs):
        block = ring * radii[i]
        pts[i * n_theta:(i + 1) * n_theta, 0] = block[:, 0]
        pts[i * n_theta:(i + 1) * n_theta, 1] = block[:, 1]
        pts[i * n_theta:(i + 1) * n_theta, 2] = z
    c0 = (n_z + 1) * n_theta
    c1 = c0 + 1
    pts[c0] = (0.0, 0.0, 0.0)
    pts[c1] = (0.0, 0.0, length)
    pts += origin

    faces = []
    for i in range(n_z):
        base = i * n_theta
        for j in range(n_theta):
            j2 = (j + 1) % n_theta
            a, b = base + j, base + j2
            c, d = base + n_theta + j, base + n_theta + j2
            faces.append((a, b, d))
            faces.append((a, d, c))
    for j in range(n_theta):  # z=0 cap faces -z
        j2 = (j + 1) % n_theta
        faces.append((c0, j2, j))
    top = n_z * n_theta
    for j in range(n_theta):  # z=length cap faces +z
        j2 = (j + 1) % n_theta
        faces.append((c1, top + j, top + j2))
    return TriMesh(pts, np.array(faces, dtype=np.int64))


def stenosis_profile(nominal_radius: float, throat_radius: float,
                     center: float, half_width: float):
    """Cosine-squared narrowing from nominal_radius down to throat_radius."""

    def radius(z: float) -> float:
        t = abs(z - center)
        if t >= half_width:
            return nominal_radius
        w = 0.5 * (1.0 + np.cos(np.pi * t / half_width))
        return nominal_radius - (nominal_radius - throat_radius) * w

    return radius


def stenotic_tube(length: float = 40.0, nominal_diameter: float | None = None,
                  min_diameter: float = 4.0, stenosis_center: float | None = None,
                  stenosis_half_width: float = 6.0, n_theta: int = 64,
                  n_z: int = 100) -> tuple[TriMesh, CenterlineTree]:
    """Straight vessel with a focal stenosis, plus its centerline.

    Default nominal diameter is min_diameter / sqrt(0.6): a 40 % reduction of
    luminal area at the throat.
    """
    if nominal_diameter is None:
        nominal_diameter = min_diameter / np.sqrt(0.6)
    if stenosis_center is None:
        stenosis_center = length / 2.0
    rf = stenosis_profile(nominal_diameter / 2.0, min_diameter / 2.0,
                          stenosis_center, stenosis_half_width)
    mesh = tube(rf, length, n_theta=n_theta, n_z=n_z)
    zs = np.linspace(0.0, length, max(2, int(round(length)) + 1))
    pts = np.zeros((len(zs), 3))
    pts[:, 2] = zs
    path = CenterlinePath(pts, np.array([rf(z) for z in zs]), path_id=0)
    tree = CenterlineTree((path,), {}, {})
    return mesh, tree


def curved_tube(bend_radius: float = 30.0, arc_degrees: float = 90.0,
                tube_radius: float = 2.2, n_theta: int = 48,
                n_axial: int = 90) -> tuple[TriMesh, CenterlineTree]:
    """Constant-radius tube swept along a circular arc in the xz-plane."""
    ang = np.deg2rad(arc_degrees)
    ts = np.linspace(0.0, ang, n_axial + 1)
    centers = np.stack([
        bend_radius * (1.0 - np.cos(ts)), np.zeros_like(ts), bend_radius * np.sin(ts)
    ], axis=1)
    tangents = np.stack([np.sin(ts), np.zeros_like(ts), np.cos(ts)], axis=1)
    normal = np.array([0.0, 1.0, 0.0])
    thetas = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)

    pts = np.empty(((n_axial + 1) * n_theta + 2, 3))
    for i in range(n_axial + 1):
        binormal = np.cross(tangents[i], normal)
        ring = (np.outer(np.cos(thetas), binormal) + np.outer(np.sin(thetas), normal))
        pts[i * n_theta:(i + 1) * n_theta] = centers[i] + tube_radius * ring
    c0 = (n_axial + 1) * n_theta
    pts[c0] = centers[0]
    pts[c0 + 1] = centers[-1]

    faces = []
    for i in range(n_axial):
        base = i * n_theta
        for j in range(n_theta):
            j2 = (j + 1) % n_theta
            a, b = base + j, base + j2
            c, d = base + n_theta + j, base + n_theta + j2
            faces.append((a, d, b))
            faces.append((a, c, d))
    for j in range(n_theta):
        j2 = (j + 1) % n_theta
        faces.append((c0, j, j2))
    top = n_axial * n_theta
    for j in range(n_theta):
        j2 = (j + 1) % n_theta
        faces.append((c0 + 1, top + j2, top + j))
    mesh = TriMesh(pts, np.array(faces, dtype=np.int64))

    n_cl = 4 * (n_axial // 4) + 1
    ts_cl = np.linspace(0.0, ang, n_cl)
    cl = np.stack([
        bend_radius * (1.0 - np.cos(ts_cl)), np.zeros_like(ts_cl), bend_radius * np.sin(ts_cl)
    ], axis=1)
    path = CenterlinePath(cl, np.full(n_cl, tube_radius), path_id=0)
    return mesh, CenterlineTree((path,), {}, {})


def _capsule_union_distance(points, chains, radii, blend):
    """Smooth-min distance to a set of capsule chains (for implicit meshing)."""
    from .sdf import smin

    best = None
    for chain, r in zip(chains, radii):
        chain = np.asarray(chain, dtype=float)
        for i in range(len(chain) - 1):
            a, ba = chain[i], chain[i + 1] - chain[i]
            pa = points - a
            h = np.clip((pa @ ba) / (ba @ ba), 0.0, 1.0)
            d = np.linalg.norm(pa - h[:, None] * ba, axis=1) - r
            best = d if best is None else smin(best, d, blend)
    return best


def junction_vessel(trunk_radius: float = 2.6, daughter_radius: float = 1.9,
                    voxel: float = 0.35) -> tuple[TriMesh, CenterlineTree]:
    """Y-bifurcation vessel meshed from an implicit smooth union of capsules.

    Trunk runs along +z and forks into two daughters; the centerline tree has
    the trunk-to-first-daughter run as the root path and the second daughter
    attached at the junction. Requires scikit-image.
    """
    from skimage.measure import marching_cubes

    junction = np.array([0.0, 0.0, 18.0])
    trunk = np.array([[0.0, 0.0, -6.0], junction])

    def daughter(direction, length):
        d = np.asarray(direction, dtype=float)
        return np.array([junction, junction + d / np.linalg.norm(d) * length])

    # branch angles stay under 27 degrees so resampled axes match the joint
    # angle range asserted by the invariant tests
    d1 = daughter((6.0, 0.0, 14.0), 16.0)
    d2 = daughter((-5.5, 0.0, 13.0), 15.0)
    chains = [trunk, d1, d2]
    radii = [trunk_radius, daughter_radius, daughter_radius]

    lo = np.array([-9.5, -5.5, -10.0])
    hi = np.array([10.0, 5.5, 36.0])
    nx, ny, nz = [int(np.ceil((hi[i] - lo[i]) / voxel)) + 1 for i in range(3)]
    xs = np.linspace(lo[0], hi[0], nx)
    ys = np.linspace(lo[1], hi[1], ny)
    zs = np.linspace(lo[2], hi[2], nz)
    grid = np.stack(np.meshgrid(xs, ys, zs, indexing="ij"), axis=-1).reshape(-1, 3)
    vals = _capsule_union_distance(grid, chains, radii, blend=2.0).reshape(nx, ny, nz)
    verts, faces, _, _ = marching_cubes(
        vals, level=0.0, spacing=(xs[1] - xs[0], ys[1] - ys[0], zs[1] - zs[0])
    )
    verts = verts + lo
    faces = faces[:, ::-1]  # marching_cubes winds inward for this sign convention
    mesh = TriMesh(verts, np.ascontiguousarray(faces, dtype=np.int64))

    def sample_chain(chain, n):
        chain = np.asarray(chain, dtype=float)
        seg = np.linalg.norm(np.diff(chain, axis=0), axis=1)
        arcs = np.concatenate([[0.0], np.cumsum(seg)])
        at = np.linspace(0.0, arcs[-1], n)
        out = np.empty((n, 3))
        for c in range(3):
            out[:, c] = np.interp(at, arcs, chain[:, c])
        return out

    root_pts = np.concatenate([sample_chain(trunk, 25)[:-1], sample_chain(d1, 20)])
    root_r = np.concatenate([
        np.full(24, trunk_radius),
        np.linspace(trunk_radius, daughter_radius, 4),
        np.full(16, daughter_radius),
    ])
    child_pts = sample_chain(d2, 18)
    child_r = np.concatenate([
        np.linspace(trunk_radius, daughter_radius, 4), np.full(14, daughter_radius)
    ])
    p0 = CenterlinePath(root_pts, root_r, path_id=0)
    p1 = CenterlinePath(child_pts, child_r, path_id=1)
    return mesh, build_ancestry([p0, p1])


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriMesh:
    """Subdivided icosahedron; watertight and free of self-intersections."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts[0])
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = 0.5 * (verts[i] + verts[j])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(m)
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    pts = np.array(verts) * radius
    return TriMesh(pts, np.array(faces, dtype=np.int64))


def tetrahedron(offset=(0.0, 0.0, 0.0), scale: float = 1.0) -> TriMesh:
    pts = np.array([
        [1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]
    ], dtype=float) * scale + np.asarray(offset, dtype=float)
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]], dtype=np.int64)
    return TriMesh(pts, faces)


def merge(*meshes: TriMesh) -> TriMesh:
    """Concatenate meshes into one (disjoint components keep their faces)."""
    offset = 0
    pos, fac = [], []
    for m in meshes:
        pos.append(m.positions)
        fac.append(m.faces + offset)
        offset += m.vertex_count
    return TriMesh(np.concatenate(pos), np.concatenate(fac))
