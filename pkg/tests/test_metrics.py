import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revolve.errors import InvalidArgumentError
from revolve.metrics import (
    BRUTE_FORCE_LIMIT,
    METRIC_STEP,
    directed_avg_error,
    directed_hausdorff,
    nearest_distances,
    profile_errors,
    profile_sampling,
    symmetric_avg_error,
    symmetric_hausdorff,
)
from revolve.spline import ProfileCurve


def nn_oracle(a, b):
    out = []
    for p in a:
        best = math.inf
        for q in b:
            dx, dy = p[0] - q[0], p[1] - q[1]
            best = min(best, math.sqrt(dx * dx + dy * dy))
        out.append(best)
    return out


def ae_oracle(a, b):
    d = nn_oracle(a, b)
    return sum(d) / len(d)


def hd_oracle(a, b):
    return max(nn_oracle(a, b))


def test_identity_zero():
    a = np.random.default_rng(0).uniform(0, 100, (50, 2))
    assert directed_avg_error(a, a) == 0.0
    assert symmetric_hausdorff(a, a) == 0.0


def test_single_points():
    assert directed_avg_error([[0.0, 0.0]], [[3.0, 4.0]]) == 5.0
    assert directed_hausdorff([[0.0, 0.0]], [[3.0, 4.0]]) == 5.0


def test_empty_rejected():
    for fn in (directed_avg_error, directed_hausdorff, symmetric_avg_error, symmetric_hausdorff):
        with pytest.raises(InvalidArgumentError):
            fn(np.empty((0, 2)), [[1.0, 1.0]])


def test_against_double_loop_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.uniform(0, 160, (int(rng.integers(1, 120)), 2))
        b = rng.uniform(0, 160, (int(rng.integers(1, 120)), 2))
        assert list(nearest_distances(a, b)) == nn_oracle(a, b)
        assert directed_avg_error(a, b) == pytest.approx(ae_oracle(a, b), rel=1e-12)
        assert directed_hausdorff(a, b) == hd_oracle(a, b)
        assert symmetric_avg_error(a, b) == pytest.approx(0.5 * (ae_oracle(a, b) + ae_oracle(b, a)), rel=1e-12)
        assert symmetric_hausdorff(a, b) == 0.5 * (hd_oracle(a, b) + hd_oracle(b, a))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_symmetry(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(int(rng.integers(1, 60)), 2))
    b = rng.normal(size=(int(rng.integers(1, 60)), 2))
    assert symmetric_avg_error(a, b) == symmetric_avg_error(b, a)
    assert symmetric_hausdorff(a, b) == symmetric_hausdorff(b, a)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_hausdorff_not_below_average(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-50, 50, (int(rng.integers(1, 80)), 2))
    b = rng.uniform(-50, 50, (int(rng.integers(1, 80)), 2))
    assert symmetric_avg_error(a, b) <= symmetric_hausdorff(a, b)


def test_translation_of_straight_segment():
    line = profile_sampling(ProfileCurve([[0.0, 0.0], [50.0, 0.0], [100.0, 0.0]]))
    v = np.array([0.0, 3.0])
    assert symmetric_avg_error(line, line + v) == pytest.approx(3.0, abs=1e-9)
    # Along the segment the shift partly overlaps; error stays below |v|.
    w = np.array([4.0, 3.0])
    assert symmetric_avg_error(line, line + w) <= 5.0 + 1e-12


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.floats(-20, 20), st.floats(-20, 20))
def test_shift_bounded_by_norm(seed, vx, vy):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0, 100, (40, 2))
    v = np.array([vx, vy])
    assert symmetric_avg_error(p, p + v) <= np.hypot(vx, vy) + 1e-9


def test_zero_iff_same_set():
    a = np.random.default_rng(2).uniform(0, 10, (30, 2))
    assert symmetric_avg_error(a, a[::-1]) == 0.0
    b = a.copy()
    b[5] += 1e-6
    assert symmetric_avg_error(a, b) > 0.0


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.floats(-np.pi, np.pi), st.floats(-500, 500), st.floats(-500, 500))
def test_rigid_motion_invariance(seed, angle, tx, ty):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 160, (60, 2))
    b = rng.uniform(0, 160, (45, 2))
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    t = np.array([tx, ty])
    a2, b2 = a @ rot.T + t, b @ rot.T + t
    assert symmetric_avg_error(a2, b2) == pytest.approx(symmetric_avg_error(a, b), abs=1e-9)
    assert symmetric_hausdorff(a2, b2) == pytest.approx(symmetric_hausdorff(a, b), abs=1e-9)


def test_tree_search_matches_brute_force():
    rng = np.random.default_rng(3)
    a = rng.uniform(0, 160, (BRUTE_FORCE_LIMIT + 500, 2))
    b = rng.uniform(0, 160, (3000, 2))
    tree = nearest_distances(a, b)
    brute = np.concatenate([nearest_distances(a[i : i + 5000], b) for i in range(0, len(a), 5000)])
    np.testing.assert_allclose(tree, brute, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize(
    "knots",
    [
        [[0.0, 95.0], [60.0, 78.0], [92.0, 12.0]],
        [[0.0, 120.0], [48.0, 100.0], [78.0, 12.0]],
        [[0.0, 140.0], [70.0, 120.0], [110.0, 30.0]],
        [[0.0, 0.0], [40.0, 50.0], [80.0, 100.0]],
    ],
)
def test_profile_sampling_spacing(knots):
    # Holds for profiles without hairpin turns; a chord across a cusp is
    # necessarily shorter than the arc it cuts.
    pts = profile_sampling(ProfileCurve(knots))
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    np.testing.assert_allclose(gaps[:-1], METRIC_STEP, atol=1e-6)
    assert gaps[-1] <= METRIC_STEP + 1e-9


def test_profile_errors_consistent():
    t = ProfileCurve([[0.0, 95.0], [60.0, 78.0], [92.0, 12.0]])
    p = t.translated([2.0, -1.0])
    ae, hd = profile_errors(t, p)
    a, b = profile_sampling(t), profile_sampling(p)
    assert ae == pytest.approx(symmetric_avg_error(a, b), rel=1e-12)
    assert hd == pytest.approx(symmetric_hausdorff(a, b), rel=1e-12)
    assert ae <= hd <= np.hypot(2.0, 1.0) + 1e-9
