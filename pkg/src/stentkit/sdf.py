"""Analytic stent signed-distance field.

The stent is a chain of capsules (cylinders capped by hemispheres) sharing
endpoints, combined with a quadratic smooth-minimum so consecutive segments
weld into a C1 surface instead of creasing. Both the field value and its
gradient have closed forms, parameterized by the current radius, so the whole
family of inflation states from crimped to fully deployed is available from
one object.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGradientError

# Points closer than this to a capsule axis have no usable gradient.
GRADIENT_EPS = 1e-9


@dataclass(frozen=True)
class CapsuleSegment:
    """One straight piece of the stent axis, from a to b (mm)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(3)
        b = np.asarray(self.b, dtype=float).reshape(3)
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise ValueError("capsule endpoints must be finite")
        if np.linalg.norm(b - a) <= 0.0:
            raise ValueError("capsule segment has zero length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def _as_points(p):
    """Coerce to an (n, 3) array, remembering whether input was a single point."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        return arr.reshape(1, 3), True
    if arr.ndim == 2 and arr.shape[1] == 3:
        return arr, False
    raise ValueError(f"expected a 3-vector or (n, 3) array, got shape {arr.shape}")


def capsule_distance(points, a, b):
    """Unsigned distance from each point to the segment a-b.

    Uses the same arithmetic as the vectorized field fold, so a one-segment
    field evaluates bitwise-identically to this function.
    """
    pts, single = _as_points(points)
    a = np.asarray(a, dtype=float).reshape(3)
    ba = np.asarray(b, dtype=float).reshape(3) - a
    pa = pts - a
    h = np.clip(np.einsum("nk,k->n", pa, ba) / np.einsum("k,k->", ba, ba), 0.0, 1.0)
    v = pa - h[:, None] * ba
    d = np.sqrt(np.einsum("nk,nk->n", v, v))
    return d[0] if single else d


def capsule_sdf(points, segment: CapsuleSegment, radius: float):
    """Signed distance to the capsule surface: negative inside, zero on it."""
    if radius < 0.0:
        raise ValueError("capsule radius must be >= 0")
    return capsule_distance(points, segment.a, segment.b) - radius


def capsule_grad(points, segment: CapsuleSegment):
    """Unit gradient of the capsule SDF; independent of the radius.

    Equals (p - a - h*(b - a)) normalized, which reduces to the radial
    direction along the cylinder body and to (p - a)/|p - a| or
    (p - b)/|p - b| over the hemispherical caps.
    """
    pts, single = _as_points(points)
    a = segment.a
    ba = segment.b - a
    pa = pts - a
    h = np.clip((pa @ ba) / (ba @ ba), 0.0, 1.0)
    v = pa - h[:, None] * ba
    n = np.linalg.norm(v, axis=1)
    if np.any(n <= GRADIENT_EPS):
        raise DegenerateGradientError("query point lies on the capsule axis")
    g = v / n[:, None]
    return g[0] if single else g


def smin(alpha, beta, k: float):
    """Quadratic smooth minimum with smoothing width k (mm).

    For |alpha - beta| > k this is plain min; inside the blend band the value
    dips below min by up to k/4, with equality of the dip exactly when
    alpha == beta. k = 0 reduces to min.
    """
    if k < 0.0:
        raise ValueError("smoothing width k must be >= 0")
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    m = np.minimum(alpha, beta)
    if k == 0.0:
        return m if m.ndim else float(m)
    d = np.abs(alpha - beta)
    with np.errstate(over="ignore"):  # d/k may overflow where d > k anyway
        blended = m - (k / 4.0) * (1.0 - d / k) ** 2
    out = np.where(d > k, m, blended)
    return out if out.ndim else float(out)


def smin_grad(alpha, beta, grad_a, grad_b, k: float):
    """Gradient of smin given the component values and gradients.

    Clamped linear interpolation of the two gradients: returns grad_a when
    (beta - alpha)/k > 1, grad_b when < -1, and the linear blend in between.
    Not normalized. At |beta - alpha| == k the blend branch coincides with the
    clamped branch (C1 seam), so the blend is used at equality.
    """
    ga = np.asarray(grad_a, dtype=float)
    gb = np.asarray(grad_b, dtype=float)
    single = ga.ndim == 1
    ga = np.atleast_2d(ga)
    gb = np.atleast_2d(gb)
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if k == 0.0:
        out = np.where((beta < alpha)[:, None], gb, ga)
        return out[0] if single else out
    with np.errstate(over="ignore"):  # the clamp absorbs overflow at tiny k
        x = np.clip((beta - alpha) / k, -1.0, 1.0)
    w = 0.5 * (x + 1.0)  # weight on grad_a; 1 at x >= 1, 0 at x <= -1
    out = w[:, None] * ga + (1.0 - w)[:, None] * gb
    return out[0] if single else out


@dataclass(frozen=True)
class StentField:
    """Capsule chain + smoothing width + nominal radius.

    The radius passed to evaluation is the corrected one: nominal - k/4,
    clamped at zero, compensating the smooth-union inflation so the deployed
    surface tops out at the prescribed radius. Construction with
    ``radius_correction=False`` keeps the nominal radius (used to demonstrate
    the k/4 overshoot).
    """

    segments: tuple[CapsuleSegment, ...]
    smoothing_k: float
    nominal_radius: float
    radius_correction: bool = True
    # packed endpoint arrays for vectorized evaluation
    _seg_a: np.ndarray = field(init=False, repr=False, compare=False)
    _seg_b: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("stent field needs at least one segment")
        if self.smoothing_k < 0.0:
            raise ValueError("smoothing width k must be >= 0")
        if self.nominal_radius < 0.0:
            raise ValueError("nominal radius must be >= 0")
        for prev, cur in zip(self.segments, self.segments[1:]):
            if not np.array_equal(prev.b, cur.a):
                raise ValueError("consecutive segments must share an endpoint")
        object.__setattr__(self, "_seg_a", np.array([s.a for s in self.segments]))
        object.__setattr__(self, "_seg_b", np.array([s.b for s in self.segments]))

    @classmethod
    def from_polyline(cls, points, smoothing_k, nominal_radius, radius_correction=True):
        """Build the chain from an ordered polyline, most distal point first."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 3:
            raise ValueError("polyline must be an (n >= 2, 3) array")
        segs = tuple(CapsuleSegment(pts[i], pts[i + 1]) for i in range(len(pts) - 1))
        return cls(segs, float(smoothing_k), float(nominal_radius), radius_correction)

    @property
    def effective_radius(self) -> float:
        """Radius actually used for the fully deployed surface."""
        if not self.radius_correction:
            return self.nominal_radius
        return max(self.nominal_radius - self.smoothing_k / 4.0, 0.0)

    def axis_points(self) -> np.ndarray:
        pts = np.empty((len(self.segments) + 1, 3))
        pts[:-1] = self._seg_a
        pts[-1] = self._seg_b[-1]
        return pts

    # -- vectorized internals -------------------------------------------------
    #
    # The folds run one segment at a time with (n,) and (n, 3) temporaries
    # only; per-row arithmetic is identical regardless of batching, so cached
    # or subset evaluations are bitwise-equal to full scans.

    def _segment_distance(self, pts: np.ndarray, i: int):
        a = self._seg_a[i]
        ba = self._seg_b[i] - a
        pa = pts - a
        h = np.clip(np.einsum("nk,k->n", pa, ba) / np.einsum("k,k->", ba, ba), 0.0, 1.0)
        v = pa - h[:, None] * ba
        return v, np.sqrt(np.einsum("nk,nk->n", v, v))

    def _capsule_distances(self, pts: np.ndarray) -> np.ndarray:
        """(n, m) unsigned distances from each point to each segment axis."""
        out = np.empty((len(pts), len(self.segments)))
        for i in range(len(self.segments)):
            out[:, i] = self._segment_distance(pts, i)[1]
        return out

    def distance_fold(self, pts: np.ndarray) -> np.ndarray:
        """Smooth-min fold of the capsule axis distances, distal to proximal.

        Radius-independent: the field value at radius r is this minus r.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        k = self.smoothing_k
        acc = self._segment_distance(pts, 0)[1]
        for i in range(1, len(self.segments)):
            acc = smin(acc, self._segment_distance(pts, i)[1], k)
        return acc

    def distance_and_gradient_fold(self, pts: np.ndarray):
        """Fold of distances with the matching gradient carried alongside.

        Returns (distances (n,), unit gradients (n, 3), degenerate mask (n,)).
        Degenerate rows (gradient norm <= GRADIENT_EPS before normalization)
        carry a zero gradient; callers pick the fallback.
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        k = self.smoothing_k

        def unit(v, d):
            with np.errstate(invalid="ignore", divide="ignore"):
                g = v / d[:, None]
            return np.nan_to_num(g, nan=0.0)

        v, acc = self._segment_distance(pts, 0)
        acc_g = unit(v, acc)
        for i in range(1, len(self.segments)):
            v, beta = self._segment_distance(pts, i)
            acc_g = smin_grad(acc, beta, acc_g, unit(v, beta), k)
            acc = smin(acc, beta, k)
        norm = np.linalg.norm(acc_g, axis=1)
        degenerate = norm <= GRADIENT_EPS
        safe = np.where(degenerate, 1.0, norm)
        acc_g = acc_g / safe[:, None]
        acc_g[degenerate] = 0.0
        return acc, acc_g, degenerate


def field_eval(field: StentField, points, radius: float):
    """Stent SDF value at the given radius (mm): fold of capsule SDFs."""
    if radius < 0.0:
        raise ValueError("radius must be >= 0")
    pts, single = _as_points(points)
    out = field.distance_fold(pts) - radius
    return float(out[0]) if single else out


def field_grad(field: StentField, points, radius: float | None = None):
    """Unit gradient of the stent SDF (radius-independent).

    Raises DegenerateGradientError if any query point sits on the degenerate
    locus; the deformation engine uses the masked variant instead and applies
    its own fallback.
    """
    pts, single = _as_points(points)
    _, g, bad = field.distance_and_gradient_fold(pts)
    if bad.any():
        raise DegenerateGradientError(
            f"{int(bad.sum())} query point(s) on the stent axis have no gradient"
        )
    return g[0] if single else g


def field_aabb(field: StentField, radius: float, pad: float = 0.0):
    """Conservative box around the radius-level set, inflated by pad (mm).

    Box of all segment endpoints grown by radius + k + pad. A single smooth
    union inflates by at most k/4, but the pairwise fold can compound where
    several blend zones overlap; the total dip below the plain minimum is
    provably under k, so a k margin always contains the level set.
    """
    if radius < 0.0 or pad < 0.0:
        raise ValueError("radius and pad must be >= 0")
    pts = field.axis_points()
    margin = radius + field.smoothing_k + pad
    from .mesh import Aabb

    return Aabb(pts.min(axis=0) - margin, pts.max(axis=0) + margin)
