import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divetrack.core import (
    Pose,
    Trajectory,
    quat_error,
    quat_from_rotvec,
    quat_identity,
    quat_mean,
    quat_mul,
    quat_normalize,
    quat_slerp,
    quat_to_matrix,
    quat_to_rotvec,
    rotate_vector,
)

# ---------------------------------------------------------------------------
# independent oracles


def skew(v):
    return np.array(
        [[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]], dtype=float
    )


def rodrigues(r):
    """Rotation matrix straight from the axis-angle formula."""
    r = np.asarray(r, dtype=float)
    th = np.linalg.norm(r)
    if th == 0.0:
        return np.eye(3)
    K = skew(r / th)
    return np.eye(3) + np.sin(th) * K + (1.0 - np.cos(th)) * (K @ K)


def angle_from_trace(Ra, Rb):
    c = (np.trace(Rb.T @ Ra) - 1.0) / 2.0
    return np.arccos(np.clip(c, -1.0, 1.0))


def random_unit_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


rotvecs = st.lists(
    st.floats(-1.8, 1.8, allow_nan=False, allow_infinity=False), min_size=3, max_size=3
)


# ---------------------------------------------------------------------------
# quat_from_rotvec


def test_rotvec_zero_gives_identity():
    np.testing.assert_array_equal(quat_from_rotvec([0, 0, 0]), [1, 0, 0, 0])


def test_rotvec_half_turn_about_x():
    np.testing.assert_allclose(
        quat_from_rotvec([np.pi, 0, 0]), [0, 1, 0, 0], atol=1e-15
    )


def test_rotvec_matches_rodrigues_frozen():
    # oracle: rodrigues([0.1, 0.2, 0.3]) computed independently above
    expected = np.array(
        [
            [0.9357548032779188, -0.28316496056507373, 0.21019170595074288],
            [0.3029327134026371, 0.9505806179060915, -0.06803131640494002],
            [-0.18054007669439776, 0.12733457491763028, 0.9752903089530457],
        ]
    )
    R = quat_to_matrix(quat_from_rotvec([0.1, 0.2, 0.3]))
    np.testing.assert_allclose(R, expected, atol=1e-12)
    np.testing.assert_allclose(R, rodrigues([0.1, 0.2, 0.3]), atol=1e-12)


@given(rotvecs)
@settings(max_examples=200)
def test_rotvec_rodrigues_property(r):
    rng = np.random.default_rng(0)
    v = rng.normal(size=3)
    got = rotate_vector(quat_from_rotvec(r), v)
    np.testing.assert_allclose(got, rodrigues(r) @ v, atol=1e-10)


@given(rotvecs)
@settings(max_examples=200)
def test_quat_producers_unit_norm_and_canonical(r):
    for q in (
        quat_from_rotvec(r),
        quat_mul(quat_from_rotvec(r), quat_from_rotvec([0.3, -0.1, 0.2])),
        quat_slerp(quat_from_rotvec(r), quat_from_rotvec([0.5, 0, 0]), 0.37),
    ):
        assert abs(np.linalg.norm(q) - 1.0) < 1e-9
        assert q[0] >= 0.0


def test_small_angle_rotvec_roundtrip():
    r = np.array([1e-10, -2e-10, 3e-11])
    np.testing.assert_allclose(quat_to_rotvec(quat_from_rotvec(r)), r, rtol=1e-6)


# ---------------------------------------------------------------------------
# rotate_vector


def test_rotate_identity():
    np.testing.assert_array_equal(rotate_vector(quat_identity(), [1, 2, 3]), [1, 2, 3])


def test_rotate_quarter_turn_about_z():
    q = quat_from_rotvec([0, 0, np.pi / 2])
    np.testing.assert_allclose(rotate_vector(q, [1, 0, 0]), [0, 1, 0], atol=1e-15)


def test_rotate_matches_matrix_and_preserves_norm():
    rng = np.random.default_rng(42)
    for _ in range(50):
        q = random_unit_quat(rng)
        v = rng.normal(size=3)
        got = rotate_vector(q, v)
        np.testing.assert_allclose(got, quat_to_matrix(q) @ v, atol=1e-12)
        assert abs(np.linalg.norm(got) - np.linalg.norm(v)) < 1e-12


def test_rotate_rejects_non_unit():
    with pytest.raises(ValueError):
        rotate_vector([1.0, 1.0, 0.0, 0.0], [1, 0, 0])


# ---------------------------------------------------------------------------
# quat_error


def test_error_of_equal_quats_is_zero():
    rng = np.random.default_rng(7)
    q = random_unit_quat(rng)
    assert quat_error(q, q) < 1e-15


def test_error_of_one_degree():
    axis = np.array([1.0, 2.0, -0.5])
    axis /= np.linalg.norm(axis)
    q = quat_from_rotvec(axis * np.pi / 180.0)
    assert abs(quat_error(quat_identity(), q) - np.pi / 180.0) < 1e-9


def test_error_matches_trace_oracle_and_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(50):
        qa, qb = random_unit_quat(rng), random_unit_quat(rng)
        expected = angle_from_trace(quat_to_matrix(qa), quat_to_matrix(qb))
        assert abs(quat_error(qa, qb) - expected) < 1e-9
        assert abs(quat_error(qa, qb) - quat_error(qb, qa)) < 1e-12
        assert 0.0 <= quat_error(qa, qb) <= np.pi


# ---------------------------------------------------------------------------
# quat_mean


def test_quat_mean_of_copies_is_that_quat():
    q = quat_from_rotvec([0.2, 0.1, -0.4])
    got = quat_mean(np.array([q, q, -q]))
    assert quat_error(got, q) < 1e-12


# ---------------------------------------------------------------------------
# Trajectory / sample_at


def line_traj():
    ts = np.array([0.0, 1.0, 2.0])
    ps = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [4.0, 0.0, 0.0]])
    qs = np.array([quat_identity()] * 3)
    return Trajectory(ts, ps, qs)


def test_sample_at_stored_timestamp_is_bit_exact():
    ts = np.array([0.0, 0.1, 0.3])
    ps = np.array([[0.1, 0.2, 0.3], [1.0 / 3.0, -0.7, 2.0], [5.0, 6.0, 7.0]])
    qs = np.array([quat_from_rotvec([0.1 * i, 0, 0.2]) for i in range(3)])
    traj = Trajectory(ts, ps, qs)
    for i, t in enumerate(ts):
        s = traj.sample_at(t)
        assert np.array_equal(s.p, ps[i])
        assert np.array_equal(s.q, qs[i])


def test_sample_at_linear_midpoint():
    s = line_traj().sample_at(0.5)
    np.testing.assert_array_equal(s.p, [1.0, 0.0, 0.0])


def test_sample_at_quarter_point_slerp():
    # oracle: scaling the rotation vector, 0.25 * 90 deg = 22.5 deg about z
    qz = quat_from_rotvec([0, 0, np.pi / 2])
    traj = Trajectory(
        np.array([0.0, 1.0]),
        np.zeros((2, 3)),
        np.array([quat_identity(), qz]),
    )
    got = traj.sample_at(0.25).q
    expected = quat_from_rotvec([0, 0, np.pi / 8])
    assert quat_error(got, expected) < 1e-9


def test_sample_at_out_of_range():
    with pytest.raises(ValueError):
        line_traj().sample_at(-0.1)
    with pytest.raises(ValueError):
        line_traj().sample_at(2.0001)


def test_sample_many_matches_sample_at():
    rng = np.random.default_rng(11)
    ts = np.sort(rng.uniform(0, 10, 20))
    ts[0], ts[-1] = 0.0, 10.0
    ps = rng.normal(size=(20, 3))
    qs = np.array([quat_from_rotvec(rng.normal(scale=0.5, size=3)) for _ in range(20)])
    traj = Trajectory(ts, ps, qs)
    queries = np.concatenate([rng.uniform(0, 10, 30), ts])
    got_p, got_q = traj.sample_many(queries)
    for t, p, q in zip(queries, got_p, got_q):
        s = traj.sample_at(t)
        np.testing.assert_allclose(p, s.p, atol=1e-12)
        assert quat_error(q, s.q) < 1e-9


def test_trajectory_rejects_non_increasing_timestamps():
    with pytest.raises(ValueError):
        Trajectory(
            np.array([0.0, 1.0, 1.0]),
            np.zeros((3, 3)),
            np.array([quat_identity()] * 3),
        )


def test_pose_validation():
    with pytest.raises(ValueError):
        Pose(-1.0, np.zeros(3), quat_identity())
    with pytest.raises(ValueError):
        Pose(0.0, np.zeros(3), [1.0, 0.5, 0.0, 0.0])


def test_csv_roundtrip_is_byte_stable():
    rng = np.random.default_rng(5)
    ts = np.arange(10) / 60.0
    ps = rng.normal(size=(10, 3))
    qs = np.array([quat_from_rotvec(rng.normal(scale=0.3, size=3)) for _ in range(10)])
    traj = Trajectory(ts, ps, qs)
    text1 = traj.to_csv()
    reread = Trajectory.from_csv(io.StringIO(text1))
    text2 = reread.to_csv()
    assert text1 == text2
