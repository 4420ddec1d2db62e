import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from revolve.cloud import TWO_PI, PointCloud, from_polar, reference_frame, to_polar
from revolve.errors import InvalidArgumentError

from conftest import random_unit

coords = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_axis_point_maps_to_origin_with_zero_theta():
    q = to_polar(np.array([3.0, 4.0, 5.0]), axis_origin=[3.0, 4.0, 5.0])
    assert q == (0.0, 0.0, 0.0)


def test_plus_x_is_theta_zero_for_vertical_axis():
    q = to_polar(np.array([160.0, 0.0, 0.0]))
    assert q.rho == pytest.approx(160.0, abs=1e-12)
    assert q.h == pytest.approx(0.0, abs=1e-12)
    assert q.theta == 0.0


def test_on_axis_from_polar():
    p = from_polar(0.0, 5.0, 1.234)
    np.testing.assert_allclose(p, [0.0, 5.0, 0.0], atol=1e-12)


def test_half_turn():
    np.testing.assert_allclose(from_polar(1.0, 0.0, np.pi), [-1.0, 0.0, 0.0], atol=1e-12)


def test_non_unit_axis_rejected():
    with pytest.raises(InvalidArgumentError):
        to_polar(np.zeros(3), axis_dir=[0.0, 2.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        from_polar(1.0, 0.0, 0.0, axis_dir=[0.0, 1.0 + 1e-6, 0.0])


def test_round_trip_1000_random_points(rng):
    for _ in range(5):
        origin = rng.uniform(-100, 100, 3)
        axis = random_unit(rng)
        p = rng.uniform(-500, 500, (1000, 3))
        q = to_polar(p, origin, axis)
        np.testing.assert_allclose(from_polar(q.rho, q.h, q.theta, origin, axis), p, atol=1e-9)


def test_inverse_round_trip_from_polar_first(rng):
    axis = random_unit(rng)
    rho = rng.uniform(0.1, 300, 1000)
    h = rng.uniform(-100, 300, 1000)
    theta = rng.uniform(0, TWO_PI, 1000)
    q = to_polar(from_polar(rho, h, theta, np.zeros(3), axis), np.zeros(3), axis)
    np.testing.assert_allclose(q.rho, rho, atol=1e-9)
    np.testing.assert_allclose(q.h, h, atol=1e-9)
    d = np.mod(q.theta - theta + np.pi, TWO_PI) - np.pi
    assert np.abs(d * rho).max() < 1e-9


@given(arrays(np.float64, (20, 3), elements=coords))
def test_theta_range_and_rho_sign(p):
    q = to_polar(p)
    assert np.all(q.rho >= 0)
    assert np.all((q.theta >= 0) & (q.theta < TWO_PI))


def test_reference_frame_is_orthonormal_and_right_handed(rng):
    for axis in [*random_unit(rng, 50), np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])]:
        e1, e2 = reference_frame(axis)
        assert abs(e1 @ axis) < 1e-12 and abs(e2 @ axis) < 1e-12 and abs(e1 @ e2) < 1e-12
        np.testing.assert_allclose(np.cross(e1, e2), axis, atol=1e-12)


def test_point_cloud_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        PointCloud(np.array([[0.0, np.nan, 0.0]]))
    with pytest.raises(InvalidArgumentError):
        PointCloud(np.zeros((3, 2)))


def test_point_cloud_empty_and_order(rng):
    assert len(PointCloud(np.empty((0, 3)))) == 0
    pts = rng.normal(size=(100, 3))
    a = PointCloud(pts)
    b = PointCloud(pts.copy())
    assert [tuple(p) for p in a] == [tuple(p) for p in b]
    assert not a.points.flags.writeable


def test_point_cloud_transform_and_concat(rng):
    pts = rng.normal(size=(10, 3))
    m = np.eye(4)
    m[:3, 3] = [1, 2, 3]
    c = PointCloud(pts, "sensor0").transformed(m)
    np.testing.assert_allclose(c.points, pts + [1, 2, 3])
    assert c.frame_id == "sensor0"
    merged = PointCloud.concatenate([c, PointCloud(pts)])
    assert len(merged) == 20 and merged.frame_id == "canonical"
