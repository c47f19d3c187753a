"""Property tests over randomized geometry, complementing the fixed-fixture
suites."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stentkit.centerline import AxisSelection, extract_subpath, resample_arclength
from stentkit.deform import DeploymentParams, deploy
from stentkit.metrics import mis_radius_profile, summarize
from stentkit.sdf import CapsuleSegment, StentField, capsule_sdf, field_eval
from stentkit.synthetic import stenotic_tube


def random_field(seed: int, n_segments: int, k: float) -> StentField:
    rng = np.random.default_rng(seed)
    direction = np.array([0.0, 0.0, 1.0])
    pts = [np.zeros(3)]
    for _ in range(n_segments):
        direction = direction + rng.normal(0, 0.12, 3)
        direction /= np.linalg.norm(direction)
        pts.append(pts[-1] + direction * rng.uniform(1.5, 3.0))
    return StentField.from_polyline(np.array(pts), k, 2.0)


@given(st.integers(0, 2**31 - 1), st.integers(1, 8), st.floats(0.0, 1.5))
@settings(max_examples=60, deadline=None)
def test_field_bounded_by_capsule_minimum(seed, n_segments, k):
    field = random_field(seed, n_segments, k)
    rng = np.random.default_rng(seed + 1)
    pts = rng.uniform(-6, 12, size=(64, 3))
    fold = field.distance_fold(pts)
    per_capsule = np.stack([
        capsule_sdf(pts, seg, 0.0) for seg in field.segments], axis=1)
    naive = per_capsule.min(axis=1)
    assert np.all(fold <= naive + 1e-12)
    # compound inflation never dips more than k below the plain minimum
    assert np.all(fold >= naive - k - 1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(1, 6),
       st.floats(0.0, 2.0), st.floats(0.01, 3.0), st.floats(0.01, 3.0))
@settings(max_examples=60, deadline=None)
def test_level_set_nesting_exact_shift(seed, n_segments, k, r1, r2):
    field = random_field(seed, n_segments, k)
    rng = np.random.default_rng(seed + 2)
    pts = rng.uniform(-6, 12, size=(32, 3))
    v1 = field_eval(field, pts, r1)
    v2 = field_eval(field, pts, r2)
    assert np.allclose(v1 - v2, r2 - r1, atol=1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_k_zero_field_is_plain_minimum(seed, n_segments):
    field = random_field(seed, n_segments, 0.0)
    rng = np.random.default_rng(seed + 3)
    pts = rng.uniform(-6, 12, size=(32, 3))
    fold = field.distance_fold(pts)
    naive = np.min(np.stack([
        capsule_sdf(pts, seg, 0.0) for seg in field.segments], axis=1), axis=1)
    assert np.array_equal(fold, naive)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_capsule_translation_invariance(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-5, 5, 3)
    b = a + rng.uniform(0.5, 4.0, 3)
    p = rng.uniform(-8, 8, 3)
    shift = rng.uniform(-20, 20, 3)
    seg = CapsuleSegment(a, b)
    seg_shifted = CapsuleSegment(a + shift, b + shift)
    d1 = capsule_sdf(p, seg, 1.0)
    d2 = capsule_sdf(p + shift, seg_shifted, 1.0)
    assert d1 == pytest.approx(d2, abs=1e-9)


class TestCoarseStepRobustness:
    """The diameter ceiling and mesh integrity survive a coarse radius
    increment; the final partial step and the capture band do the work."""

    def test_coarse_dr_keeps_ceiling(self):
        mesh, tree = stenotic_tube(n_theta=48, n_z=80)
        axis = resample_arclength(
            extract_subpath(tree, AxisSelection((0, 10.0), (0, 30.0))), 2.5)
        out, rep = deploy(mesh, axis, DeploymentParams(r_target=3.0, dr=0.25, d_con=0.25))
        assert rep.validity.is_clean
        s = summarize(mis_radius_profile(out, axis.points, spacing=0.5))
        assert s.maximum <= 6.0 + 1e-3
        assert s.mean >= 5.7  # coarser steps, slightly wider band

    def test_fine_dr_matches_default_closely(self):
        mesh, tree = stenotic_tube(n_theta=32, n_z=50)
        axis = resample_arclength(
            extract_subpath(tree, AxisSelection((0, 10.0), (0, 30.0))), 2.5)
        out_fine, _ = deploy(mesh, axis, DeploymentParams(r_target=3.0, dr=0.05),
                             validate_result=False)
        out_def, _ = deploy(mesh, axis, DeploymentParams(r_target=3.0),
                            validate_result=False)
        s_fine = summarize(mis_radius_profile(out_fine, axis.points, spacing=0.5))
        s_def = summarize(mis_radius_profile(out_def, axis.points, spacing=0.5))
        assert abs(s_fine.mean - s_def.mean) < 0.05
        assert s_fine.maximum <= 6.0 + 1e-3
