import numpy as np
import pytest

from canonplace import se3
from canonplace.errors import MissingObject
from canonplace.maps import CategoryMap
from canonplace.pairwise import log_density
from canonplace.placement import (
    PlacementModel,
    Variant,
    fit_placement_model,
    joint_log_score,
    reverse_log_density_at,
)
from canonplace.scene import SceneObject, SceneState
from canonplace.se3 import EncodingKind, Pose, PoseVector, compose, decode

from conftest import box_category

CAT = box_category("part")


def chain_scene(rng, jitter=0.0, distractor=False) -> SceneState:
    """anchor (static) -> a -> b chain with optional jitter and distractor."""

    def jit():
        if jitter == 0.0:
            return Pose.identity()
        return Pose.from_rotvec(rng.normal(0, jitter, 3), rng.normal(0, jitter, 3))

    anchor_pose = se3.random_pose(rng, 0.5)
    a_pose = compose(anchor_pose, compose(Pose(np.array([1.0, 0, 0, 0]), np.array([0.4, 0.0, 0.0])), jit()))
    b_pose = compose(a_pose, compose(Pose(np.array([1.0, 0, 0, 0]), np.array([0.0, 0.3, 0.0])), jit()))
    objects = [
        SceneObject("anchor", CAT, anchor_pose, CategoryMap.identity(), static=True),
        SceneObject("a", CAT, a_pose, CategoryMap.identity()),
        SceneObject("b", CAT, b_pose, CategoryMap.identity()),
    ]
    if distractor:
        objects.append(
            SceneObject("junk", CAT, se3.random_pose(rng, 2.0), CategoryMap.identity(), distractor=True)
        )
    return SceneState(tuple(objects), ("a", "b"))


def test_single_reference_model_has_one_relation():
    rng = np.random.default_rng(50)
    scenes = [chain_scene(rng) for _ in range(3)]
    model = fit_placement_model(scenes, "a", Variant.UNIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    assert len(model.relations) == 1
    assert model.relations[0].reference == "anchor"
    assert model.active_set == {"anchor"}
    assert model.step_index == 0


def test_bidirectional_model_carries_both_directions():
    rng = np.random.default_rng(51)
    scenes = [chain_scene(rng, jitter=0.01) for _ in range(5)]
    model = fit_placement_model(scenes, "b", Variant.BIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    assert {r.reference for r in model.relations} == {"anchor", "a"}
    assert all(r.reverse is not None for r in model.relations)


def test_distractor_appears_in_relations_before_minimization():
    rng = np.random.default_rng(52)
    scenes = [chain_scene(rng, jitter=0.01, distractor=True) for _ in range(5)]
    model = fit_placement_model(scenes, "b", Variant.UNIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    assert "junk" in {r.reference for r in model.relations}
    assert "junk" in model.active_set


def test_score_at_decoded_mean_equals_gaussian_peak():
    rng = np.random.default_rng(53)
    scenes = [chain_scene(rng) for _ in range(5)]
    model = fit_placement_model(scenes, "a", Variant.UNIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    dist = model.relations[0].forward
    scene = scenes[0]
    anchor = scene.get("anchor")
    mean_rel = decode(PoseVector(dist.encoding, dist.gaussian.mean))
    candidate = compose(anchor.pose, mean_rel)
    score = joint_log_score(model, scene, candidate)
    assert abs(score - log_density(dist.gaussian, dist.gaussian.mean)) < 1e-6


def test_bidirectional_score_is_log_additive():
    rng = np.random.default_rng(54)
    scenes = [chain_scene(rng, jitter=0.02) for _ in range(5)]
    uni = fit_placement_model(scenes, "b", Variant.UNIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    bi = fit_placement_model(scenes, "b", Variant.BIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    scene = scenes[0]
    placed = scene.get("b")
    for _ in range(20):
        candidate = compose(scene.get("b").pose, Pose.from_rotvec(rng.normal(0, 0.1, 3), rng.normal(0, 0.05, 3)))
        fwd = joint_log_score(uni, scene, candidate)
        rev = 0.0
        for rel in bi.active_relations():
            rev += float(
                reverse_log_density_at(
                    rel.reverse, scene.get(rel.reference), placed, candidate.quat[None, :], candidate.trans[None, :]
                )[0]
            )
        total = joint_log_score(bi, scene, candidate)
        assert abs(total - (fwd + rev)) < 1e-9 * max(1.0, abs(total))


def test_ground_truth_beats_random_perturbations():
    rng = np.random.default_rng(55)
    scenes = [chain_scene(rng) for _ in range(5)]  # no jitter: delta-like model
    model = fit_placement_model(scenes, "b", Variant.UNIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    scene = scenes[0]
    gt = scene.get("b").pose
    gt_score = joint_log_score(model, scene, gt)
    from canonplace.placement import score_candidates
    from canonplace.se3 import quat_mul, quat_rotate, rotvec_to_quat

    rotvecs = rng.normal(0, 0.2, (10_000, 3))
    offsets = rng.normal(0, 0.1, (10_000, 3))
    quats = quat_mul(gt.quat[None, :], rotvec_to_quat(rotvecs))
    trans = gt.trans + quat_rotate(gt.quat[None, :], offsets)
    perturbed_scores = score_candidates(model, scene, quats, trans)
    assert gt_score >= float(np.max(perturbed_scores))


def test_global_rigid_invariance():
    rng = np.random.default_rng(56)
    scenes = [chain_scene(rng, jitter=0.02) for _ in range(5)]
    model = fit_placement_model(scenes, "b", Variant.BIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    scene = scenes[0]
    candidate = scene.get("b").pose
    base = joint_log_score(model, scene, candidate)
    for _ in range(10):
        g = se3.random_pose(rng, 3.0)
        moved = SceneState(
            tuple(
                SceneObject(o.id, o.category, compose(g, o.pose), o.map, static=o.static, distractor=o.distractor)
                for o in scene.objects
            ),
            scene.placement_order,
        )
        assert abs(joint_log_score(model, moved, compose(g, candidate)) - base) < 1e-9


def test_removing_reference_changes_score_by_its_term():
    rng = np.random.default_rng(57)
    scenes = [chain_scene(rng, jitter=0.02) for _ in range(5)]
    model = fit_placement_model(scenes, "b", Variant.UNIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    scene = scenes[0]
    candidate = scene.get("b").pose
    full = joint_log_score(model, scene, candidate)
    only_anchor = model.with_active_set(frozenset({"anchor"}))
    only_a = model.with_active_set(frozenset({"a"}))
    assert abs(full - (joint_log_score(only_anchor, scene, candidate) + joint_log_score(only_a, scene, candidate))) < 1e-9


def test_symmetric_fixture_reverse_mirrors_forward():
    # pure-translation relations with identity rotations: the reverse samples
    # are exact mirrors of the forward ones, so each reverse term equals its
    # forward term and the bidirectional score doubles the unidirectional one
    rng = np.random.default_rng(58)
    scenes = []
    for _ in range(5):
        offset = np.array([0.5, 0.0, 0.0]) + rng.normal(0, 0.02, 3)
        objects = (
            SceneObject("ref", CAT, Pose.identity(), CategoryMap.identity(), static=True),
            SceneObject("obj", CAT, Pose(np.array([1.0, 0, 0, 0]), offset), CategoryMap.identity()),
        )
        scenes.append(SceneState(objects, ("obj",)))
    uni = fit_placement_model(scenes, "obj", Variant.UNIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    bi = fit_placement_model(scenes, "obj", Variant.BIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    for _ in range(20):
        candidate = Pose(np.array([1.0, 0, 0, 0]), np.array([0.5, 0, 0]) + rng.normal(0, 0.05, 3))
        u = joint_log_score(uni, scenes[0], candidate)
        b = joint_log_score(bi, scenes[0], candidate)
        assert abs(b - 2.0 * u) < 1e-9


def test_missing_object_raises():
    rng = np.random.default_rng(59)
    scenes = [chain_scene(rng) for _ in range(3)]
    model = fit_placement_model(scenes, "b", Variant.UNIDIRECTIONAL, EncodingKind.AXIS_ANGLE)
    bare = SceneState((scenes[0].objects[0], scenes[0].objects[2]), ("b",))
    with pytest.raises(MissingObject):
        joint_log_score(model, bare, Pose.identity())
