import numpy as np
import pytest

from revolve.accumulator import build_accumulator
from revolve.cloud import CANONICAL_AXIS, PointCloud, from_polar, to_polar
from revolve.errors import InvalidArgumentError
from revolve.registration import (
    RigidTransform,
    align_to_canonical,
    axial_rotation,
    default_phis,
    merge_registered,
    registration_matrix,
    rotation_matrix,
)
from revolve.spline import ProfileCurve
from revolve.synth import SceneSpec, SensorSpec, generate_frame, sensor_pose, true_phi, true_turntable
from revolve.turntable import TurntableModel

from conftest import random_unit


def _random_transform(rng):
    return RigidTransform.from_parts(rotation_matrix(random_unit(rng), rng.uniform(-np.pi, np.pi)), rng.uniform(-100, 100, 3))


def test_identity_when_already_canonical():
    u = align_to_canonical(TurntableModel(np.zeros(3), CANONICAL_AXIS, 160.0))
    np.testing.assert_array_equal(u.matrix, np.eye(4))


def test_pure_translation():
    u = align_to_canonical(TurntableModel(np.array([0, 0, 10.0]), CANONICAL_AXIS, 160.0))
    np.testing.assert_allclose(u.rotation, np.eye(3), atol=0)
    np.testing.assert_allclose(u.translation, [0, 0, -10.0], atol=0)


def test_align_random_models_contract(rng):
    for _ in range(1000):
        c = rng.uniform(-500, 500, 3)
        n = random_unit(rng)
        u = align_to_canonical(TurntableModel(c, n, 160.0))
        np.testing.assert_allclose(u.apply(c), 0.0, atol=1e-9)
        np.testing.assert_allclose(u.rotation @ n, CANONICAL_AXIS, atol=1e-9)


def test_align_antiparallel_normal():
    c = np.array([1.0, 2.0, 3.0])
    u = align_to_canonical(TurntableModel(c, -CANONICAL_AXIS, 160.0))
    np.testing.assert_allclose(u.rotation @ -CANONICAL_AXIS, CANONICAL_AXIS, atol=1e-12)
    np.testing.assert_allclose(u.apply(c), 0.0, atol=1e-12)


def test_axial_rotation_examples():
    np.testing.assert_array_equal(axial_rotation(0.0).matrix, np.eye(4))
    twice = axial_rotation(np.pi) @ axial_rotation(np.pi)
    np.testing.assert_allclose(twice.matrix, np.eye(4), atol=1e-12)
    v = axial_rotation(np.pi / 2).apply(np.array([1.0, 0, 0]))
    assert abs(v @ [1.0, 0, 0]) < 1e-12 and abs(v @ CANONICAL_AXIS) < 1e-12
    # Direct evaluation: quarter turn about +y takes +x to -z.
    np.testing.assert_allclose(v, [0, 0, -1.0], atol=1e-12)


def test_axial_rotation_fixes_axis_points(rng):
    for phi in rng.uniform(-10, 10, 50):
        p = np.outer(rng.uniform(-100, 100, 20), CANONICAL_AXIS)
        np.testing.assert_allclose(axial_rotation(phi).apply(p), p, atol=1e-12)


def test_axial_rotation_shifts_theta(rng):
    p = from_polar(rng.uniform(1, 100, 30), rng.uniform(0, 50, 30), rng.uniform(0, 2 * np.pi, 30))
    q = axial_rotation(0.3).apply(p)
    d = np.mod(to_polar(q).theta - to_polar(p).theta, 2 * np.pi)
    np.testing.assert_allclose(d, 0.3, atol=1e-9)


def test_composition_associative_and_orthonormal(rng):
    for _ in range(100):
        a, b, c = (_random_transform(rng) for _ in range(3))
        np.testing.assert_allclose(((a @ b) @ c).matrix, (a @ (b @ c)).matrix, atol=1e-9)
        m = (a @ b @ c).rotation
        np.testing.assert_allclose(m.T @ m, np.eye(3), atol=1e-9)
        assert np.linalg.det(m) > 0
        np.testing.assert_allclose((a @ a.inverse()).matrix, np.eye(4), atol=1e-9)


def test_rigid_transform_validation():
    with pytest.raises(InvalidArgumentError):
        RigidTransform(np.diag([1.0, 1.0, -1.0, 1.0]))
    bad = np.eye(4)
    bad[3, 0] = 1.0
    with pytest.raises(InvalidArgumentError):
        RigidTransform(bad)
    with pytest.raises(InvalidArgumentError):
        RigidTransform(np.eye(3))


def test_registration_is_v_after_u():
    table = TurntableModel(np.array([5.0, -3.0, 400.0]), random_unit(np.random.default_rng(0)), 160.0)
    m = registration_matrix(table, 0.7)
    np.testing.assert_allclose(m.matrix, axial_rotation(0.7).matrix @ align_to_canonical(table).matrix)


def test_default_phis():
    np.testing.assert_allclose(default_phis(4), [0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_merge_examples(rng):
    a = PointCloud(rng.normal(size=(7, 3)))
    b = PointCloud(rng.normal(size=(5, 3)))
    one = merge_registered([a], [RigidTransform.identity()])
    np.testing.assert_array_equal(one.points, a.points)
    assert one.frame_id == "canonical"
    both = merge_registered([a, b], [RigidTransform.identity(), _random_transform(rng)])
    assert len(both) == 12
    np.testing.assert_array_equal(both.points[:7], a.points)
    with pytest.raises(InvalidArgumentError):
        merge_registered([a, b], [RigidTransform.identity()])


def test_merge_two_views_lies_on_surface():
    knots = [[0.0, 90.0], [50.0, 70.0], [80.0, 15.0]]
    spec = SceneSpec(
        keyframes=[(0, knots)],
        sensors=[SensorSpec(0.0, sector=np.pi, noise=1.0), SensorSpec(np.pi, sector=np.pi, noise=1.0)],
    )
    fr = generate_frame(spec, 0, 3)
    transforms = [registration_matrix(true_turntable(s, 160.0), true_phi(s)) for s in spec.sensors]
    merged = merge_registered(fr.clouds, transforms)
    labels = np.concatenate(fr.labels)
    obj = merged.points[labels == 0]
    q = to_polar(obj)
    # Oracle: distance of each (rho, h) to a dense sampling of the profile.
    dense = ProfileCurve(knots).polyline()
    d = np.sqrt(((np.column_stack([q.rho, q.h])[:, None, :] - dense[None]) ** 2).sum(-1)).min(axis=1)
    assert np.percentile(d, 99) <= 3.0 * 1.0  # noise sigma = 1 mm
    # Registration reproduces the generator's canonical coordinates.
    np.testing.assert_allclose(merged.points, np.concatenate(fr.canonical), atol=1e-8)


def test_phi_choice_irrelevant_for_radially_symmetric_clouds(rng):
    """Each sensor's cloud is itself radially symmetric, so the accumulator
    does not depend on the axial angles."""
    rho = rng.uniform(0, 150, 4000)
    h = rng.uniform(0, 150, 4000)
    clouds, tables = [], []
    for k in range(2):
        theta = np.linspace(0, 2 * np.pi, 4000, endpoint=False) + 0.1 * k
        pts_c = from_polar(rho, h, theta)
        pose = _random_transform(rng)
        clouds.append(PointCloud(pose.inverse().apply(pts_c)))
        tables.append(TurntableModel(pose.inverse().apply(np.zeros(3)), pose.inverse().rotation @ CANONICAL_AXIS, 160.0))
    accs = []
    for phis in ((0.0, 0.0), (1.3, -2.1)):
        # phi on top of the pose-specific axial offset
        ms = [axial_rotation(p) @ align_to_canonical(t) for p, t in zip(phis, tables)]
        accs.append(build_accumulator(merge_registered(clouds, ms), 10.0, 160.0))
    np.testing.assert_allclose(accs[0].grid, accs[1].grid, rtol=1e-9, atol=1e-15)


def test_true_phi_recovers_pose(rng):
    for az in rng.uniform(0, 2 * np.pi, 10):
        s = SensorSpec(az)
        m = registration_matrix(true_turntable(s, 160.0), true_phi(s))
        np.testing.assert_allclose(m.matrix, sensor_pose(s).matrix, atol=1e-9)
