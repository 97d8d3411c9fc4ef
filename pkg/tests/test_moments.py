import numpy as np
import pytest

from canonplace import se3
from canonplace.errors import DegenerateCloud
from canonplace.maps import FeatureCloud, ObjectCategory
from canonplace.moments import estimate_pose_and_scale, moment_frame
from canonplace.se3 import Pose, compose, geodesic_angle_deg

from conftest import box_category, instance_cloud


def reprojection_rms(cloud, pose, cat_map):
    pred = pose.apply(cloud.category.points / cat_map.scales)
    return float(np.sqrt(np.mean(np.sum((cloud.points - pred) ** 2, axis=1))))


def test_untouched_cloud_gives_identity(widget):
    cloud = FeatureCloud(widget, widget.ids, widget.points)
    pose, cat_map, flipped = estimate_pose_and_scale(cloud)
    assert geodesic_angle_deg(pose, Pose.identity()) < 1e-7
    assert np.linalg.norm(pose.trans) < 1e-9
    assert abs(cat_map.scales[0] - 1.0) < 1e-9
    assert not flipped


def test_uniform_scale_and_rigid_motion_recovery(widget):
    rng = np.random.default_rng(21)
    for _ in range(20):
        gt = se3.random_pose(rng)
        cloud = instance_cloud(widget, gt, (0.5, 0.5, 0.5))
        pose, cat_map, _ = estimate_pose_and_scale(cloud)
        assert abs(cat_map.scales[0] - 2.0) < 1e-6
        assert geodesic_angle_deg(pose, gt) < 1e-4
        assert np.linalg.norm(pose.trans - gt.trans) < 1e-6


def test_estimator_equivariance(widget):
    rng = np.random.default_rng(22)
    base = instance_cloud(widget, Pose.identity(), (0.8, 0.8, 0.8))
    pose0, _, _ = estimate_pose_and_scale(base)
    for _ in range(20):
        motion = se3.random_pose(rng, 2.0)
        moved = FeatureCloud(widget, base.ids, motion.apply(base.points))
        pose1, _, _ = estimate_pose_and_scale(moved)
        expected = compose(motion, pose0)
        assert geodesic_angle_deg(pose1, expected) < 1e-6
        assert np.linalg.norm(pose1.trans - expected.trans) < 1e-9


def test_reprojection_rms_noiseless_and_noisy(widget):
    rng = np.random.default_rng(23)
    gt = se3.random_pose(rng)
    clean = instance_cloud(widget, gt, (1.2, 1.2, 1.2))
    pose, cat_map, _ = estimate_pose_and_scale(clean)
    assert reprojection_rms(clean, pose, cat_map) < 1e-9

    sigma = 1e-3
    noisy = instance_cloud(widget, gt, (1.2, 1.2, 1.2), noise=sigma, rng=rng)
    pose, cat_map, _ = estimate_pose_and_scale(noisy)
    assert reprojection_rms(noisy, pose, cat_map) <= 3 * sigma


def flip_prone_category() -> ObjectCategory:
    """Category whose id-weighted asymmetry points along the shortest axis.

    The sign-fixing heuristic then carries no information about the two
    longer axes, so the long-axis end assignment is arbitrary and must be
    corrected by the flip test (a half turn about the shortest axis).
    """
    # consecutive ids (2j, 2j+1) share (x_j, y_j) with z = +-h_j, which makes
    # z an exact principal axis; weighted-sum coefficients per pair:
    coeff = 4.0 * np.arange(6) - 10.0

    def perp(v, *others):
        v = v - v.mean()
        for o in others:
            v = v - o * (o @ v) / (o @ o)
        return v

    x = perp(np.array([-1.2, 0.9, 0.4, -0.5, -0.7, 1.1]), coeff)
    y = perp(np.array([0.35, 0.35, -0.45, -0.4, 0.25, -0.05]), coeff, x)
    y = y / np.std(y) * np.sqrt(0.06)
    h = np.array([0.10, 0.14, 0.18, 0.22, 0.12, 0.20])
    pts = np.zeros((12, 3))
    pts[0::2, 0] = pts[1::2, 0] = x
    pts[0::2, 1] = pts[1::2, 1] = y
    pts[0::2, 2] = h
    pts[1::2, 2] = -h
    return ObjectCategory("flipprone", tuple(range(12)), pts)


def test_flip_test_corrects_half_turn_ambiguity():
    cat = flip_prone_category()
    rng = np.random.default_rng(24)
    saw_flip = 0
    for _ in range(100):
        gt = se3.random_pose(rng)
        cloud = instance_cloud(cat, gt, (1.0, 1.0, 1.0))
        pose, cat_map, flipped = estimate_pose_and_scale(cloud)
        assert geodesic_angle_deg(pose, gt) < 1e-4
        assert np.linalg.norm(pose.trans - gt.trans) < 1e-6
        saw_flip += int(flipped)
        # flag truthfulness: the returned pose reprojects exactly; when a flip
        # was applied the unflipped alternative must have been worse
        assert reprojection_rms(cloud, pose, cat_map) < 1e-9
    assert saw_flip > 0


def test_flip_flag_false_on_strongly_asymmetric_cloud(widget):
    rng = np.random.default_rng(25)
    for _ in range(50):
        gt = se3.random_pose(rng)
        cloud = instance_cloud(widget, gt, (1.0, 1.0, 1.0))
        pose, _, flipped = estimate_pose_and_scale(cloud)
        assert geodesic_angle_deg(pose, gt) < 1e-4
        assert not flipped


def test_degenerate_clouds_raise():
    # symmetric cube: top-two moments equal, axes ambiguous
    cube_pts = np.array(
        [[sx, sy, sz] for sx in (-0.5, 0.5) for sy in (-0.5, 0.5) for sz in (-0.5, 0.5)]
        + [[0.5, 0, 0], [-0.5, 0, 0], [0, 0.5, 0], [0, -0.5, 0]]
    )
    cube = ObjectCategory("cube", tuple(range(12)), cube_pts)
    with pytest.raises(DegenerateCloud):
        estimate_pose_and_scale(FeatureCloud(cube, cube.ids, cube.points))

    line_pts = np.zeros((12, 3))
    line_pts[:, 0] = np.linspace(0, 1, 12)
    line = ObjectCategory("line", tuple(range(12)), np.array([[x, (i % 3) * 0.3, 0] for i, x in enumerate(np.linspace(0, 1, 12))]))
    collinear_cloud = FeatureCloud(line, line.ids, line_pts)
    with pytest.raises(DegenerateCloud):
        estimate_pose_and_scale(collinear_cloud)


def test_moment_frame_is_right_handed(widget):
    frame = moment_frame(widget.points)
    assert abs(np.linalg.det(frame.axes) - 1.0) < 1e-12
    assert frame.moments[0] >= frame.moments[1] >= frame.moments[2] >= 0
