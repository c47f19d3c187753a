"""Vascular centerline model: path family with ancestry, contiguous sub-path
extraction across junctions, equal arc-length resampling into a stent axis,
and foreshortening-adjusted selections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CenterlineError

ATTACH_TOL = 1e-3  # mm; how closely a child's first point must sit on its parent

# Capsule segment length used when resampling a selection into a stent axis.
# Long enough that, at clinical stent radii, only adjacent capsules blend in
# the smooth union (keeping the joint inflation at exactly k/4), short enough
# to track vessel curvature with small joint angles.
DEFAULT_SEGMENT_LENGTH = 2.5


@dataclass(frozen=True)
class CenterlinePath:
    """One branch run: ordered points with per-point maximum-inscribed-sphere
    radii."""

    points: np.ndarray
    mis_radius: np.ndarray
    path_id: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        rad = np.asarray(self.mis_radius, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
            raise CenterlineError(f"path {self.path_id}: needs >= 2 points of dim 3")
        if not np.isfinite(pts).all():
            raise CenterlineError(f"path {self.path_id}: non-finite point coordinates")
        if len(rad) != len(pts):
            raise CenterlineError(f"path {self.path_id}: radius array length mismatch")
        if np.any(rad <= 0):
            raise CenterlineError(f"path {self.path_id}: MIS radii must be positive")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg <= 0):
            raise CenterlineError(f"path {self.path_id}: consecutive points must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mis_radius", rad)

    def arc_lengths(self) -> np.ndarray:
        """Cumulative arc length at each point, starting at 0."""
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.arc_lengths()[-1])

    def point_at(self, arc: float) -> np.ndarray:
        arcs = self.arc_lengths()
        if arc < -1e-9 or arc > arcs[-1] + 1e-9:
            raise CenterlineError(
                f"arc length {arc} outside path {self.path_id} (0..{arcs[-1]:.6g})"
            )
        arc = min(max(arc, 0.0), arcs[-1])
        return _interp_polyline(self.points, arcs, np.array([arc]))[0]


@dataclass(frozen=True)
class CenterlineTree:
    """Forest of paths; parent and attach_point realize the junction topology."""

    paths: tuple[CenterlinePath, ...]
    parent: dict[int, int]
    attach_point: dict[int, int]

    def path(self, path_id: int) -> CenterlinePath:
        for p in self.paths:
            if p.path_id == path_id:
                return p
        raise CenterlineError(f"no path with id {path_id}")

    def root_ids(self) -> list[int]:
        return sorted(p.path_id for p in self.paths if p.path_id not in self.parent)

    def ancestry_chain(self, path_id: int) -> list[int]:
        """path_id up to its root, inclusive."""
        chain = [path_id]
        seen = {path_id}
        while chain[-1] in self.parent:
            nxt = self.parent[chain[-1]]
            if nxt in seen:
                raise CenterlineError("parent relation contains a cycle")
            chain.append(nxt)
            seen.add(nxt)
        return chain


@dataclass(frozen=True)
class AxisSelection:
    """Start and end as (path_id, arc length mm); start is the distal anchor."""

    start: tuple[int, float]
    end: tuple[int, float]


@dataclass(frozen=True)
class StentAxis:
    """Uniformly resampled polyline parameterizing the capsule chain."""

    points: np.ndarray
    segment_length: float
    source: AxisSelection | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 2:
            raise CenterlineError("stent axis needs >= 2 points")
        object.__setattr__(self, "points", pts)

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


def _interp_polyline(points: np.ndarray, arcs: np.ndarray, at: np.ndarray) -> np.ndarray:
    out = np.empty((len(at), 3))
    for c in range(3):
        out[:, c] = np.interp(at, arcs, points[:, c])
    return out


def build_ancestry(paths) -> CenterlineTree:
    """Organize paths into a tree by matching each path's first point against
    the other paths.

    A candidate parent is any other path holding a point within ATTACH_TOL of
    the child's first point. Candidates matching somewhere along their run
    outrank candidates matching at their own first point (the latter are
    siblings sharing the junction). Among equally ranked candidates whose
    matched locations coincide, the smallest path_id wins; matches at
    genuinely different locations are ambiguous and rejected. Exactly one
    root is expected.
    """
    paths = sorted(paths, key=lambda p: p.path_id)
    ids = [p.path_id for p in paths]
    if len(set(ids)) != len(ids):
        raise CenterlineError("duplicate path ids")
    parent: dict[int, int] = {}
    attach: dict[int, int] = {}
    unattached: list[int] = []
    for child in paths:
        head = child.points[0]
        candidates = []  # (rank, path_id, point_index, location)
        for cand in paths:
            if cand.path_id == child.path_id:
                continue
            d = np.linalg.norm(cand.points - head, axis=1)
            idx = int(np.argmin(d))
            if d[idx] >= ATTACH_TOL:
                continue
            rank = 1 if idx == 0 else 0
            candidates.append((rank, cand.path_id, idx, cand.points[idx]))
        if not candidates:
            unattached.append(child.path_id)
            continue
        candidates.sort(key=lambda c: (c[0], c[1]))
        top_rank = candidates[0][0]
        top = [c for c in candidates if c[0] == top_rank]
        locs = np.array([c[3] for c in top])
        if len(top) > 1 and np.linalg.norm(locs - locs[0], axis=1).max() > ATTACH_TOL:
            names = [c[1] for c in top]
            raise CenterlineError(
                f"ambiguous attachment for path {child.path_id}: "
                f"candidate parents {names} at distinct locations"
            )
        parent[child.path_id] = top[0][1]
        attach[child.path_id] = top[0][2]
    if not unattached:
        raise CenterlineError("no root path: every path attaches to another")
    if len(unattached) > 1:
        raise CenterlineError(
            f"orphan path(s) {unattached[1:]}: first point matches no other path "
            f"and path {unattached[0]} is already the root"
        )
    tree = CenterlineTree(tuple(paths), parent, attach)
    for pid in ids:
        tree.ancestry_chain(pid)  # cycle guard
    return tree


def _clip_path(path: CenterlinePath, arc_from: float, arc_to: float):
    """Sub-polyline of one path between two arc positions, endpoints exact.

    Returns (points, per-point arc on the owning path); runs in the
    arc_from -> arc_to direction, which may be against the path orientation.
    """
    arcs = path.arc_lengths()
    total = arcs[-1]
    for a in (arc_from, arc_to):
        if a < -1e-9 or a > total + 1e-9:
            raise CenterlineError(
                f"arc length {a:.6g} outside path {path.path_id} (0..{total:.6g})"
            )
    a0, a1 = sorted((min(max(arc_from, 0.0), total), min(max(arc_to, 0.0), total)))
    inner = np.flatnonzero((arcs > a0 + 1e-12) & (arcs < a1 - 1e-12))
    at = np.concatenate([[a0], arcs[inner], [a1]])
    pts = _interp_polyline(path.points, arcs, at)
    if arc_from > arc_to:
        return pts[::-1].copy(), at[::-1].copy()
    return pts, at


def _walk_pieces(tree: CenterlineTree, sel: AxisSelection):
    """Per-path pieces of the walk from sel.start to sel.end, in travel order.

    Each piece is (path_id, points, arcs-on-that-path). Only walks along one
    ancestor-descendant chain are simple paths; selections across sibling
    branches would reverse through the junction and are rejected.
    """
    sid, sarc = sel.start
    eid, earc = sel.end
    if sid == eid:
        pts, arcs = _clip_path(tree.path(sid), sarc, earc)
        return [(sid, pts, arcs)]

    chain_s = tree.ancestry_chain(sid)
    chain_e = tree.ancestry_chain(eid)
    if sid in chain_e:
        chain = chain_e[: chain_e.index(sid) + 1][::-1]  # ancestor .. descendant
        up_arc, down_arc, reverse = sarc, earc, False
    elif eid in chain_s:
        chain = chain_s[: chain_s.index(eid) + 1][::-1]
        up_arc, down_arc, reverse = earc, sarc, True
    else:
        raise CenterlineError("selection not a simple path")

    pieces = []
    for i, pid in enumerate(chain):
        path = tree.path(pid)
        arcs = path.arc_lengths()
        if i < len(chain) - 1:
            attach_arc = float(arcs[tree.attach_point[chain[i + 1]]])
            frm = up_arc if i == 0 else 0.0
            pts, seg_arcs = _clip_path(path, frm, attach_arc)
        else:
            pts, seg_arcs = _clip_path(path, 0.0, down_arc)
        pieces.append((pid, pts, seg_arcs))
    if reverse:
        pieces = [(pid, pts[::-1].copy(), arcs[::-1].copy()) for pid, pts, arcs in pieces[::-1]]
    return pieces


def _join_pieces(pieces):
    """Concatenate piece geometry, dropping the repeated junction points."""
    points, pids, arcs = [], [], []
    for pid, pts, seg_arcs in pieces:
        start_at = 0
        if points and np.linalg.norm(points[-1] - pts[0]) < ATTACH_TOL:
            start_at = 1
        for j in range(start_at, len(pts)):
            points.append(pts[j])
            pids.append(pid)
            arcs.append(seg_arcs[j])
    return np.array(points), np.array(pids, dtype=np.int64), np.array(arcs)


def extract_subpath(tree: CenterlineTree, sel: AxisSelection) -> np.ndarray:
    """The contiguous polyline from sel.start to sel.end along the tree walk."""
    pts, _, _ = _join_pieces(_walk_pieces(tree, sel))
    if len(pts) < 2:
        raise CenterlineError("selection has zero length")
    return pts


def selection_length(tree: CenterlineTree, sel: AxisSelection) -> float:
    pts = extract_subpath(tree, sel)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def resample_arclength(polyline, requested_interval: float,
                       source: AxisSelection | None = None) -> StentAxis:
    """Resample at n = max(1, round(L / interval)) equal arc-length segments.

    The count snaps so both endpoints are preserved exactly; the actual
    spacing is L/n. Interior points interpolate linearly along the polyline.
    """
    if requested_interval <= 0:
        raise ValueError("requested interval must be positive")
    pts = np.asarray(polyline, dtype=float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = float(np.sum(seg))
    if total <= 0:
        raise CenterlineError("polyline has zero length")
    n = max(1, int(np.floor(total / requested_interval + 0.5)))
    arcs = np.concatenate([[0.0], np.cumsum(seg)])
    at = np.linspace(0.0, total, n + 1)
    out = _interp_polyline(pts, arcs, at)
    out[0] = pts[0]
    out[-1] = pts[-1]
    return StentAxis(out, segment_length=total / n, source=source)


def apply_foreshortening(tree: CenterlineTree, sel: AxisSelection,
                         nominal_length: float, pct: float) -> AxisSelection:
    """Selection of arc length nominal_length * (1 - pct), anchored at start.

    The start (distal end, placed by the operator) stays fixed; the end moves
    along the walk so the deployed length reflects the stent's axial
    shortening. The walk extends past sel.end along the end path when the
    target length exceeds the current selection.
    """
    if not (0.0 <= pct < 1.0):
        raise ValueError("foreshortening fraction must be in [0, 1)")
    if nominal_length <= 0:
        raise ValueError("nominal length must be positive")
    target = nominal_length * (1.0 - pct)

    pieces = _walk_pieces(tree, sel)
    # extend the final piece to the terminus of the end path, following the
    # direction of travel on that path
    pid, pts, arcs = pieces[-1]
    path = tree.path(pid)
    path_arcs = path.arc_lengths()
    if len(arcs) >= 2 and arcs[-1] >= arcs[0]:
        ext_to = float(path_arcs[-1])
    else:
        ext_to = 0.0
    if abs(ext_to - arcs[-1]) > 1e-9:
        ext_pts, ext_arcs = _clip_path(path, float(arcs[-1]), ext_to)
        pieces[-1] = (pid, np.concatenate([pts, ext_pts[1:]]),
                      np.concatenate([arcs, ext_arcs[1:]]))

    walked = 0.0
    for pid, pts, arcs in pieces:
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if target <= walked + cum[-1] + 1e-9:
            local = min(max(target - walked, 0.0), cum[-1])
            end_arc = float(np.interp(local, cum, arcs))
            return AxisSelection(start=sel.start, end=(pid, end_arc))
        walked += cum[-1]
    raise CenterlineError(
        f"insufficient centerline length: need {target:.6g} mm from the anchor, "
        f"have {walked:.6g} mm"
    )


def joint_angles(axis: StentAxis) -> np.ndarray:
    """Angle (degrees) between consecutive axis segments."""
    d = np.diff(axis.points, axis=0)
    d = d / np.linalg.norm(d, axis=1, keepdims=True)
    cosang = np.clip(np.einsum("ij,ij->i", d[:-1], d[1:]), -1.0, 1.0)
    return np.degrees(np.arccos(cosang))
