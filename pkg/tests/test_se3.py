import math

import numpy as np
import pytest

from canonplace import se3
from canonplace.errors import DegenerateQuaternion, GimbalLock
from canonplace.se3 import EncodingKind, Pose, PoseVector, compose, decode, encode, geodesic_angle_deg, invert

ENCODINGS = [EncodingKind.QUAT, EncodingKind.AXIS_ANGLE, EncodingKind.EULER, EncodingKind.SE3_LOG]


def pose_close(a: Pose, b: Pose, tol=1e-9) -> bool:
    return geodesic_angle_deg(a, b) < math.degrees(tol) and np.linalg.norm(a.trans - b.trans) < tol


def test_compose_identity():
    rng = np.random.default_rng(0)
    p = se3.random_pose(rng)
    assert pose_close(compose(Pose.identity(), p), p, 1e-12)
    assert pose_close(compose(p, Pose.identity()), p, 1e-12)


def test_compose_with_inverse_is_identity():
    rng = np.random.default_rng(1)
    for _ in range(50):
        p = se3.random_pose(rng)
        assert pose_close(compose(p, invert(p)), Pose.identity(), 1e-12)
        assert pose_close(compose(invert(p), p), Pose.identity(), 1e-12)


def test_compose_associativity_random():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, b, c = (se3.random_pose(rng) for _ in range(3))
        left = compose(compose(a, b), c)
        right = compose(a, compose(b, c))
        assert pose_close(left, right, 1e-12)


def test_invert_identity_and_pure_translation():
    assert pose_close(invert(Pose.identity()), Pose.identity(), 1e-15)
    p = Pose(np.array([1.0, 0, 0, 0]), np.array([1.0, 2.0, 3.0]))
    assert np.allclose(invert(p).trans, [-1.0, -2.0, -3.0], atol=1e-15)


def test_double_inversion_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = se3.random_pose(rng)
        assert pose_close(invert(invert(p)), p, 1e-12)


def test_encode_identity_axis_angle_is_zero():
    v = encode(Pose.identity(), EncodingKind.AXIS_ANGLE)
    assert np.allclose(v.values, np.zeros(6), atol=1e-15)


def test_encode_pure_translation_se3_log():
    p = Pose(np.array([1.0, 0, 0, 0]), np.array([1.0, 0.0, 0.0]))
    v = encode(p, EncodingKind.SE3_LOG)
    assert np.allclose(v.values, [1, 0, 0, 0, 0, 0], atol=1e-15)


def test_encode_z_rotation_axis_angle():
    # closed form: rotation pi/2 about z encodes to rotation vector (0, 0, pi/2)
    q = np.array([math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)])
    v = encode(Pose(q, np.zeros(3)), EncodingKind.AXIS_ANGLE)
    assert np.allclose(v.values, [0, 0, 0, 0, 0, math.pi / 2], atol=1e-12)


def test_decode_zero_axis_angle_is_identity():
    p = decode(PoseVector(EncodingKind.AXIS_ANGLE, np.zeros(6)))
    assert pose_close(p, Pose.identity(), 1e-15)


def test_decode_normalizes_quat_block():
    vals = np.array([0.1, 0.2, 0.3, 2.0, 0.0, 0.0, 0.0])
    p = decode(PoseVector(EncodingKind.QUAT, vals))
    assert np.allclose(p.quat, [1, 0, 0, 0], atol=1e-15)


def test_decode_degenerate_quat_block_raises():
    vals = np.zeros(7)
    vals[3] = 1e-9
    with pytest.raises(DegenerateQuaternion):
        decode(PoseVector(EncodingKind.QUAT, vals))


@pytest.mark.parametrize("enc", ENCODINGS)
def test_round_trip_1000_random_poses(enc):
    rng = np.random.default_rng(42)
    worst = 0.0
    n = 0
    while n < 1000:
        p = se3.random_pose(rng, trans_scale=2.0)
        if enc is EncodingKind.EULER:
            pitch = encode_pitch(p)
            if abs(pitch) > math.pi / 2 - 1e-3:
                continue
        back = decode(encode(p, enc))
        worst = max(
            worst,
            math.radians(geodesic_angle_deg(p, back)),
            float(np.linalg.norm(p.trans - back.trans)),
        )
        n += 1
    assert worst < 1e-9


def encode_pitch(p: Pose) -> float:
    angles, _ = se3.quat_to_euler(p.quat[None, :])
    return float(angles[0, 1])


def test_euler_gimbal_lock_raises():
    q = se3.euler_to_quat(np.array([0.3, math.pi / 2, -0.2]))
    with pytest.raises(GimbalLock):
        encode(Pose(q, np.zeros(3)), EncodingKind.EULER)


def test_hemisphere_negated_quaternion_encodes_identically():
    rng = np.random.default_rng(7)
    for _ in range(20):
        q = se3.random_unit_quaternion(rng)
        t = rng.uniform(-1, 1, 3)
        a = encode(Pose(q, t), EncodingKind.QUAT)
        b = encode(Pose(-q, t), EncodingKind.QUAT)
        assert np.array_equal(a.values, b.values)


def test_geodesic_angle_basics():
    rng = np.random.default_rng(8)
    p = se3.random_pose(rng)
    assert geodesic_angle_deg(p, p) < 1e-12
    for axis in np.eye(3):
        q = se3.rotvec_to_quat(axis * math.pi / 2)
        a = Pose(np.array([1.0, 0, 0, 0]), np.zeros(3))
        b = Pose(q, np.zeros(3))
        assert abs(geodesic_angle_deg(a, b) - 90.0) < 1e-9


def test_geodesic_angle_matches_quaternion_dot_oracle():
    rng = np.random.default_rng(9)
    for _ in range(200):
        a, b = se3.random_pose(rng), se3.random_pose(rng)
        dot = abs(float(np.dot(a.quat, b.quat)))
        oracle = math.degrees(2.0 * math.acos(min(1.0, dot)))
        assert abs(geodesic_angle_deg(a, b) - oracle) < 1e-9


def test_geodesic_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(10)
    for _ in range(100):
        a, b, c = (se3.random_pose(rng) for _ in range(3))
        assert abs(geodesic_angle_deg(a, b) - geodesic_angle_deg(b, a)) < 1e-12
        assert geodesic_angle_deg(a, c) <= geodesic_angle_deg(a, b) + geodesic_angle_deg(b, c) + 1e-9


def test_se3_log_tiny_rotation_no_nan():
    rv = np.array([0.0, 0.0, 1e-9])
    p = Pose.from_rotvec(rv, np.array([0.3, -0.2, 0.5]))
    v = encode(p, EncodingKind.SE3_LOG)
    assert np.all(np.isfinite(v.values))
    assert np.allclose(v.values[:3], p.trans, atol=1e-9)


def test_pose_vector_length_validation():
    with pytest.raises(ValueError):
        PoseVector(EncodingKind.AXIS_ANGLE, np.zeros(7))
    with pytest.raises(ValueError):
        PoseVector(EncodingKind.QUAT, np.zeros(6))


def test_quaternion_invariants_after_operations():
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = compose(se3.random_pose(rng), se3.random_pose(rng))
        assert abs(np.linalg.norm(p.quat) - 1.0) < 1e-9
        assert p.quat[0] >= 0.0
