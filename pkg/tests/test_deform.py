import numpy as np
import pytest

from stentkit.centerline import AxisSelection, StentAxis, extract_subpath, resample_arclength
from stentkit.deform import (
    DeploymentParams,
    DeploymentSession,
    alpha_mask,
    base_displacements,
    deploy,
    fall_off,
)
from stentkit.metrics import mis_radius_profile, summarize
from stentkit.sdf import StentField, field_eval, field_grad
from stentkit.synthetic import curved_tube, stenotic_tube


def tube_case(n_theta=48, n_z=80):
    mesh, tree = stenotic_tube(n_theta=n_theta, n_z=n_z)
    axis = resample_arclength(
        extract_subpath(tree, AxisSelection((0, 10.0), (0, 30.0))), 2.5)
    return mesh, axis


@pytest.fixture(scope="module")
def deployed_tube():
    mesh, axis = tube_case()
    out, report = deploy(mesh, axis, DeploymentParams(r_target=3.0))
    return mesh, axis, out, report


class TestFallOff:
    def test_zero_distance(self):
        assert fall_off(0.0, 6.5) == 1.0

    def test_at_influence_radius(self):
        assert fall_off(6.5, 6.5) == 0.0

    def test_half_influence(self):
        assert fall_off(3.25, 6.5) == pytest.approx(0.5625)

    def test_beyond_support(self):
        assert fall_off(10.0, 6.5) == 0.0

    def test_negative_clamped_to_full(self):
        assert fall_off(-0.5, 6.5) == 1.0

    def test_vectorized(self):
        out = fall_off(np.array([0.0, 3.25, 6.5, 9.0]), 6.5)
        assert np.allclose(out, [1.0, 0.5625, 0.0, 0.0])


class TestAlphaMask:
    def test_contact_vertex_full_weight(self):
        positions = np.array([[0, 0, 0], [1, 0, 0], [3.25, 0, 0]], float)
        a = alpha_mask(np.array([0, 1, 2]), np.array([0]), positions, 6.5)
        assert a[0] == 1.0
        assert a[1] == pytest.approx(1.0 - 1.0 / 6.5)
        assert a[2] == pytest.approx(0.5)

    def test_boundary_vertex_zero(self):
        positions = np.array([[0, 0, 0], [6.5, 0, 0]], float)
        a = alpha_mask(np.array([0, 1]), np.array([0]), positions, 6.5)
        assert a[1] == pytest.approx(0.0, abs=1e-12)

    def test_empty_contact_all_zero(self):
        positions = np.random.default_rng(0).uniform(size=(5, 3))
        a = alpha_mask(np.arange(5), np.array([], dtype=np.int64), positions, 6.5)
        assert np.array_equal(a, np.zeros(5))

    def test_nearest_of_several(self):
        positions = np.array([[0, 0, 0], [10, 0, 0], [2.0, 0, 0]], float)
        a = alpha_mask(np.array([2]), np.array([0, 1]), positions, 6.5)
        assert a[0] == pytest.approx(1.0 - 2.0 / 6.5)


class TestBaseDisplacements:
    def test_contact_moves_exactly_dr(self):
        field = StentField.from_polyline(np.array([[0, 0, 0], [0, 0, 10.0]]), 0.0, 2.0,
                                         radius_correction=False)
        positions = np.array([[2.0, 0, 5.0]])  # phi = 0 at r = 2
        u = base_displacements(np.array([0]), field, 2.0, 0.1, 6.5, positions)
        assert np.linalg.norm(u[0]) == pytest.approx(0.1)
        assert np.allclose(u[0] / np.linalg.norm(u[0]), [1, 0, 0])

    def test_beyond_influence_zero(self):
        field = StentField.from_polyline(np.array([[0, 0, 0], [0, 0, 10.0]]), 0.0, 2.0)
        positions = np.array([[2.0 + 6.5 + 0.2, 0, 5.0]])
        u = base_displacements(np.array([0]), field, 0.1, 0.1, 6.5, positions)
        assert np.allclose(u, 0.0)

    def test_matches_compositional_oracle(self, twist_field, rng):
        # dr * fall_off(phi) * unit gradient, assembled from the already
        # tested pieces
        pts = rng.uniform([-2, -2, -1], [2, 2, 7], size=(40, 3))
        keep = twist_field.distance_fold(pts) > 0.05
        pts = pts[keep]
        r, dr, d_infl = 0.8, 0.1, 6.5
        u = base_displacements(np.arange(len(pts)), twist_field, r, dr, d_infl, pts)
        for i, p in enumerate(pts):
            phi = field_eval(twist_field, p, r)
            expect = dr * fall_off(phi, d_infl) * field_grad(twist_field, p)
            assert np.allclose(u[i], expect, atol=1e-12)


class TestDeploymentParams:
    def test_rejects_bad_radii(self):
        with pytest.raises(ValueError):
            DeploymentParams(r_target=1.0, r_init=1.5)
        with pytest.raises(ValueError):
            DeploymentParams(r_target=0.12, r_init=0.1)  # corrected target below r_init
        with pytest.raises(ValueError):
            DeploymentParams(r_target=3.0, dr=0.0)
        with pytest.raises(ValueError):
            DeploymentParams(r_target=3.0, d_con=0.0)


class TestDeploy:
    def test_no_contact_is_bitwise_noop(self):
        mesh, tree = stenotic_tube(n_theta=24, n_z=30)
        axis = resample_arclength(
            extract_subpath(tree, AxisSelection((0, 15.0), (0, 25.0))), 2.5)
        # corrected radius 0.9 mm: strictly inside the 2 mm throat
        out, report = deploy(mesh, axis, DeploymentParams(r_target=1.0),
                             validate_result=False)
        assert out.positions.tobytes() == mesh.positions.tobytes()
        assert all(s.contact_count == 0 for s in report.steps)
        assert report.moved_vertex_count == 0

    def test_diameter_accuracy(self, deployed_tube):
        _, axis, out, _ = deployed_tube
        profile = mis_radius_profile(out, axis.points, spacing=0.5)
        s = summarize(profile)
        assert s.maximum <= 6.0 + 1e-3
        assert 5.80 <= s.mean <= 6.00

    def test_overshoot_without_radius_correction(self):
        mesh, axis = tube_case()
        out, _ = deploy(mesh, axis, DeploymentParams(r_target=3.0, correct_radius=False),
                        validate_result=False)
        profile = mis_radius_profile(out, axis.points, spacing=0.5)
        peak = max(p.mis_radius for p in profile)
        assert peak == pytest.approx(3.0 + 0.1, abs=0.03)

    def test_validity_preserved(self, deployed_tube):
        *_, report = deployed_tube
        assert report.validity.is_watertight
        assert report.validity.self_intersecting_face_pairs == ()

    def test_validity_preserved_curved(self):
        mesh, tree = curved_tube()
        axis = resample_arclength(
            extract_subpath(tree, AxisSelection((0, 8.0), (0, 28.0))), 2.5)
        out, report = deploy(mesh, axis, DeploymentParams(r_target=2.8))
        assert report.validity.is_clean

    def test_locality_bitwise(self, deployed_tube):
        mesh, axis, out, report = deployed_tube
        params = DeploymentParams(r_target=3.0)
        field = StentField.from_polyline(axis.points, params.smoothing_k, 3.0)
        dist = field.distance_fold(mesh.positions) - field.effective_radius
        untouched = dist >= params.d_infl + params.d_con
        assert untouched.any()
        assert np.array_equal(out.positions[untouched], mesh.positions[untouched])
        assert out.positions[untouched].tobytes() == mesh.positions[untouched].tobytes()

    def test_determinism_bytewise(self):
        mesh, axis = tube_case(n_theta=32, n_z=50)
        out1, _ = deploy(mesh, axis, DeploymentParams(r_target=3.0), validate_result=False)
        out2, _ = deploy(mesh, axis, DeploymentParams(r_target=3.0), validate_result=False)
        assert out1.positions.tobytes() == out2.positions.tobytes()

    def test_monotone_outward(self):
        mesh, axis = tube_case(n_theta=32, n_z=50)
        params = DeploymentParams(r_target=3.0)
        out, _ = deploy(mesh, axis, params, validate_result=False)
        field = StentField.from_polyline(axis.points, params.smoothing_k, 3.0)
        r_final = field.effective_radius
        before = field.distance_fold(mesh.positions) - r_final
        after = field.distance_fold(out.positions) - r_final
        assert np.all(after >= before - 1e-6)

    def test_step_displacement_bound(self, deployed_tube):
        # inside smin blend zones |grad fold| >= ~0.92, so a projected vertex
        # can land marginally interior and the next ejection runs dr + |phi|;
        # the geometric bound for the re-projection is dr / min|grad fold|
        *_, report = deployed_tube
        params = DeploymentParams(r_target=3.0)
        for s in report.steps:
            assert s.max_displacement <= params.dr / 0.85

    def test_final_partial_step_reaches_exact_radius(self):
        mesh, axis = tube_case(n_theta=24, n_z=30)
        params = DeploymentParams(r_target=3.0, dr=0.13)
        session = DeploymentSession(mesh, axis, params)
        session.inflate_to(3.0)
        assert session.radius == pytest.approx(2.9, abs=1e-12)
        deltas = [s.radius for s in session.steps]
        assert deltas[-1] == pytest.approx(2.9, abs=1e-12)

    def test_topology_and_point_data_carried(self, deployed_tube):
        mesh, _, out, _ = deployed_tube
        assert np.array_equal(mesh.faces, out.faces)

    def test_moved_subset_of_influence_union(self):
        mesh, axis = tube_case(n_theta=32, n_z=50)
        influenced = set()

        def spy(record, changed, positions):
            influenced.update(int(i) for i in changed)

        out, report = deploy(mesh, axis, DeploymentParams(r_target=3.0),
                             observer=spy, validate_result=False)
        moved = np.flatnonzero(np.any(out.positions != mesh.positions, axis=1))
        assert set(moved.tolist()) <= influenced
        assert report.moved_vertex_count == len(influenced)

    def test_observer_called_every_step(self):
        mesh, axis = tube_case(n_theta=24, n_z=30)
        calls = []

        def spy(record, changed, positions):
            calls.append((record.step_index, len(changed)))
            assert positions.shape == (len(changed), 3)

        _, report = deploy(mesh, axis, DeploymentParams(r_target=3.0),
                           observer=spy, validate_result=False)
        assert len(calls) == len(report.steps)
        assert [c[0] for c in calls] == list(range(len(report.steps)))

    def test_staircase_suppression(self, deployed_tube):
        _, axis, out, _ = deployed_tube
        profile = mis_radius_profile(out, axis.points, spacing=0.5)
        r = np.array([p.mis_radius for p in profile])
        second = np.abs(np.diff(r, 2))
        assert second.max() <= 0.1  # bounded by dr

    def test_axis_outside_mesh_rejected(self):
        mesh, _ = stenotic_tube(n_theta=16, n_z=20)
        far_axis = StentAxis(np.array([[100.0, 0, 0], [100.0, 0, 10.0]]), 10.0)
        with pytest.raises(ValueError, match="outside the mesh"):
            deploy(mesh, far_axis, DeploymentParams(r_target=3.0))

    def test_deep_interior_start_warns(self):
        mesh, axis = tube_case(n_theta=16, n_z=30)
        params = DeploymentParams(r_target=3.0, r_init=2.5)  # already past the throat
        with pytest.warns(UserWarning, match="inside the field"):
            DeploymentSession(mesh, axis, params)


class TestDeploymentSession:
    def test_chunked_inflation_continues(self):
        mesh, axis = tube_case(n_theta=24, n_z=40)
        s = DeploymentSession(mesh, axis, DeploymentParams(r_target=3.0))
        first = s.inflate_to(2.0)
        second = s.inflate_to(3.0)
        assert s.radius == pytest.approx(2.9)
        assert len(first) + len(second) == s.step_index

    def test_inflate_below_current_is_noop(self):
        mesh, axis = tube_case(n_theta=24, n_z=40)
        s = DeploymentSession(mesh, axis, DeploymentParams(r_target=3.0))
        s.inflate_to(2.0)
        positions = s.positions.copy()
        steps = s.inflate_to(1.5)
        assert steps == []
        assert np.array_equal(s.positions, positions)

    def test_reset_restores_bitwise(self):
        mesh, axis = tube_case(n_theta=24, n_z=40)
        s = DeploymentSession(mesh, axis, DeploymentParams(r_target=3.0))
        s.inflate_to(3.0)
        s.reset()
        assert s.positions.tobytes() == mesh.positions.tobytes()
        assert s.radius == 0.1
        assert s.step_index == 0
