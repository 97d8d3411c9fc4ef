"""Monte Carlo pose inference: sample candidates from the pairwise
distributions, score them jointly, and refine around the elite set.

The refinement loop draws a large initial batch, fits a diagonal Gaussian
over the top-k candidates (position plus rotation vector in the tangent
space of the current best sample), redraws a smaller batch from it, and
repeats until the best score stops improving. The best raw sample ever
seen is retained as a fallback, so the final answer never scores below the
initial round's best.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .placement import PlacementModel, score_candidates
from .scene import SceneState
from .se3 import (
    EncodingKind,
    Pose,
    decode_batch,
    quat_conj,
    quat_mul,
    quat_rotate,
    quat_to_rotvec,
    rotvec_to_quat,
)

_VARIANCE_FLOOR = 1e-10


@dataclass(frozen=True)
class InferenceParams:
    """Sampling budget and stop rule of the refinement loop."""

    initial_samples: int = 100_000
    refine_samples: int = 1_000
    top_k: int = 10
    max_rounds: int = 20
    rel_improvement_stop: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.top_k <= self.refine_samples <= self.initial_samples):
            raise ValueError("need top_k <= refine_samples <= initial_samples, all >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")


@dataclass(frozen=True)
class InferenceResult:
    pose: Pose
    log_score: float
    rounds_used: int
    score_trace: tuple[float, ...]


def _round_rng(seed: int, round_index: int) -> np.random.Generator:
    # per-round counter-keyed substream: deterministic regardless of how many
    # draws earlier rounds consumed
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(round_index,)))


def _draw_batch(
    model: PlacementModel, scene: SceneState, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Sample candidate world poses: pick a reference uniformly, draw from its
    forward Gaussian, decode, de-canonicalize, compose into world frame."""
    relations = model.active_relations()
    choice = rng.integers(len(relations), size=n)
    quats = np.empty((n, 4))
    trans = np.empty((n, 3))
    for idx, rel in enumerate(relations):
        mask = choice == idx
        count = int(mask.sum())
        if count == 0:
            continue
        vecs = rel.forward.gaussian.sample(count, rng)
        if rel.forward.encoding is EncodingKind.QUAT:
            # a sampled rotation block can in principle collapse; fall back to
            # the identity rotation instead of failing the whole draw
            norms = np.linalg.norm(vecs[:, 3:7], axis=1)
            bad = norms < 1e-6
            if np.any(bad):
                vecs[bad, 3:7] = (1.0, 0.0, 0.0, 0.0)
        rel_q, rel_t = decode_batch(vecs, rel.forward.encoding)
        ref = scene.get(rel.reference)
        rel_t = rel_t / ref.map.scales
        quats[mask] = quat_mul(ref.pose.quat[None, :], rel_q)
        trans[mask] = ref.pose.trans + quat_rotate(ref.pose.quat[None, :], rel_t)
    return quats, trans


def draw_candidates(model: PlacementModel, scene: SceneState, n: int, rng: np.random.Generator) -> list[Pose]:
    quats, trans = _draw_batch(model, scene, n, rng)
    return [Pose(q, t) for q, t in zip(quats, trans)]


def _top_k(scores: np.ndarray, k: int) -> np.ndarray:
    order = np.argsort(-scores, kind="stable")
    return order[:k]


def _elite_stats(quats, trans, scores, elite_idx):
    """Mean and per-coordinate variance of the elite 6-vectors, in the
    tangent space of the best elite sample."""
    q_best = quats[elite_idx[0]]
    rel = quat_mul(quat_conj(q_best)[None, :], quats[elite_idx])
    rotvecs = quat_to_rotvec(rel)
    six = np.concatenate([trans[elite_idx], rotvecs], axis=1)
    mean = six.mean(axis=0)
    var = np.maximum(six.var(axis=0), _VARIANCE_FLOOR)
    return q_best, mean, var


def _mean_pose(q_best, mean) -> tuple[np.ndarray, np.ndarray]:
    q = quat_mul(q_best, rotvec_to_quat(mean[3:]))
    return q, mean[:3]


def infer_pose(model: PlacementModel, scene: SceneState, params: InferenceParams) -> InferenceResult:
    """Sample, score, and refine; returns the mean-of-top-k pose of the final
    round unless the best raw sample seen scores higher."""
    quats, trans = _draw_batch(model, scene, params.initial_samples, _round_rng(params.seed, 0))
    scores = score_candidates(model, scene, quats, trans)
    elite = _top_k(scores, params.top_k)
    best_idx = elite[0]
    best_raw = (quats[best_idx].copy(), trans[best_idx].copy(), float(scores[best_idx]))

    running_best = best_raw[2]
    trace = [running_best]
    rounds_used = 1

    while rounds_used < params.max_rounds:
        q_anchor, mean, var = _elite_stats(quats, trans, scores, elite)
        rng = _round_rng(params.seed, rounds_used)
        draws = mean + rng.standard_normal((params.refine_samples, 6)) * np.sqrt(var)
        quats = quat_mul(q_anchor[None, :], rotvec_to_quat(draws[:, 3:]))
        trans = draws[:, :3]
        scores = score_candidates(model, scene, quats, trans)
        elite = _top_k(scores, params.top_k)
        round_best = float(scores[elite[0]])
        if round_best > best_raw[2]:
            best_raw = (quats[elite[0]].copy(), trans[elite[0]].copy(), round_best)

        previous = running_best
        running_best = max(running_best, round_best)
        trace.append(running_best)
        rounds_used += 1
        improvement = (running_best - previous) / max(abs(previous), 1e-12)
        if improvement < params.rel_improvement_stop:
            break

    q_anchor, mean, _ = _elite_stats(quats, trans, scores, elite)
    q_mean, t_mean = _mean_pose(q_anchor, mean)
    mean_score = float(score_candidates(model, scene, q_mean[None, :], t_mean[None, :])[0])
    if mean_score >= best_raw[2]:
        final_pose, final_score = Pose(q_mean, t_mean), mean_score
    else:
        final_pose, final_score = Pose(best_raw[0], best_raw[1]), best_raw[2]
    trace.append(final_score)
    return InferenceResult(pose=final_pose, log_score=final_score, rounds_used=rounds_used, score_trace=tuple(trace))


def top_k_mean_property_check(
    model: PlacementModel,
    scene: SceneState,
    rng: np.random.Generator,
    n: int = 100_000,
    top_k: int = 10,
) -> bool:
    """Whether the mean of the top-k samples scores at least as well as each
    individual top-k sample."""
    quats, trans = _draw_batch(model, scene, n, rng)
    scores = score_candidates(model, scene, quats, trans)
    elite = _top_k(scores, top_k)
    q_anchor, mean, _ = _elite_stats(quats, trans, scores, elite)
    q_mean, t_mean = _mean_pose(q_anchor, mean)
    mean_score = float(score_candidates(model, scene, q_mean[None, :], t_mean[None, :])[0])
    return mean_score >= float(scores[elite[0]])
