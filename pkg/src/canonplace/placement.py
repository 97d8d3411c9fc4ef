"""Per-step placement models: pairwise distributions combined into one joint
score over candidate world poses.

The unidirectional variant multiplies reference -> placed densities; the
bidirectional variant also multiplies the reverse densities, which brings
the placed object's own category map into the score. Scores live in log
space throughout: products of up to ~20 densities over 1e5 candidates
underflow in linear space.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import InsufficientScenes, MissingObject
from .pairwise import Direction, RelativePoseDistribution, fit_pairwise, log_density
from .scene import SceneObject, SceneState
from .se3 import EncodingKind, Pose, encode_batch, quat_conj, quat_mul, quat_rotate


class Variant(Enum):
    UNIDIRECTIONAL = "uni"
    BIDIRECTIONAL = "bi"


@dataclass(frozen=True)
class Relation:
    """Distributions tied to one reference object."""

    reference: str
    forward: RelativePoseDistribution
    reverse: RelativePoseDistribution | None = None


@dataclass(frozen=True)
class PlacementModel:
    """Joint placement model of a single step in the placement order."""

    placed_object: str
    placed_category: str
    step_index: int
    variant: Variant
    relations: tuple[Relation, ...]
    active_set: frozenset[str]
    minimized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "active_set", frozenset(self.active_set))
        ids = {r.reference for r in self.relations}
        if not self.active_set:
            raise ValueError("active_set must not be empty")
        if not self.active_set <= ids:
            raise ValueError("active_set contains ids without relations")
        if self.variant is Variant.BIDIRECTIONAL and any(r.reverse is None for r in self.relations):
            raise ValueError("bidirectional model requires reverse distributions")

    def relation_for(self, reference: str) -> Relation:
        for r in self.relations:
            if r.reference == reference:
                return r
        raise MissingObject(f"no relation for reference {reference!r}")

    def active_relations(self) -> tuple[Relation, ...]:
        return tuple(r for r in self.relations if r.reference in self.active_set)

    def with_active_set(self, active: frozenset[str], minimized: bool = True) -> "PlacementModel":
        return replace(self, active_set=frozenset(active), minimized=minimized)


def fit_placement_model(
    train_scenes: list[SceneState],
    placed: str,
    variant: Variant,
    encoding: EncodingKind,
) -> PlacementModel:
    """Fit one relation per object already in the scene at the placed
    object's step, in every training scene."""
    if len(train_scenes) < 2:
        raise InsufficientScenes("placement fitting needs at least 2 scenes")
    first = train_scenes[0]
    step = first.step_of(placed)
    references = first.references_at(step)
    for scene in train_scenes:
        if scene.placement_order != first.placement_order:
            raise ValueError("training scenes disagree on placement order")
        for oid in references + (placed,):
            if oid not in scene:
                raise MissingObject(f"object {oid!r} missing from a training scene")

    relations = []
    for ref in references:
        forward = fit_pairwise(train_scenes, ref, placed, Direction.REFERENCE_TO_PLACED, encoding)
        reverse = None
        if variant is Variant.BIDIRECTIONAL:
            reverse = fit_pairwise(train_scenes, ref, placed, Direction.PLACED_TO_REFERENCE, encoding)
        relations.append(Relation(ref, forward, reverse))
    return PlacementModel(
        placed_object=placed,
        placed_category=first.get(placed).category.name,
        step_index=step,
        variant=variant,
        relations=tuple(relations),
        active_set=frozenset(references),
    )


def _masked_log_density(dist: RelativePoseDistribution, quats, trans, scales) -> np.ndarray:
    """Log densities of encoded, canonicalized relative poses; -inf where the
    encoding is singular (Euler gimbal band)."""
    vecs, valid = encode_batch(quats, trans * scales, dist.encoding)
    out = np.asarray(log_density(dist.gaussian, vecs), dtype=float)
    if not np.all(valid):
        out = np.where(valid, out, -np.inf)
    return out


def forward_log_density_at(
    dist: RelativePoseDistribution, ref_obj: SceneObject, quats: np.ndarray, trans: np.ndarray
) -> np.ndarray:
    """Forward term for a batch of candidate world poses of the placed object."""
    qc = quat_conj(ref_obj.pose.quat)
    rel_q = quat_mul(qc[None, :], quats)
    rel_t = quat_rotate(qc[None, :], trans - ref_obj.pose.trans)
    return _masked_log_density(dist, rel_q, rel_t, ref_obj.map.scales)


def reverse_log_density_at(
    dist: RelativePoseDistribution,
    ref_obj: SceneObject,
    placed_obj: SceneObject,
    quats: np.ndarray,
    trans: np.ndarray,
) -> np.ndarray:
    """Reverse term: the reference seen from the candidate placed frame,
    canonicalized by the placed object's map."""
    qc = quat_conj(quats)
    rel_q = quat_mul(qc, ref_obj.pose.quat[None, :])
    rel_t = quat_rotate(qc, ref_obj.pose.trans[None, :] - trans)
    return _masked_log_density(dist, rel_q, rel_t, placed_obj.map.scales)


def score_candidates(
    model: PlacementModel, scene: SceneState, quats: np.ndarray, trans: np.ndarray
) -> np.ndarray:
    """Joint log score of (n,) candidate world poses under the model."""
    placed_obj = scene.get(model.placed_object)
    total = np.zeros(quats.shape[0])
    for rel in model.active_relations():
        ref_obj = scene.get(rel.reference)
        total = total + forward_log_density_at(rel.forward, ref_obj, quats, trans)
        if model.variant is Variant.BIDIRECTIONAL:
            total = total + reverse_log_density_at(rel.reverse, ref_obj, placed_obj, quats, trans)
    return total


def joint_log_score(model: PlacementModel, scene: SceneState, candidate: Pose) -> float:
    """Sum of the active references' log densities at one candidate pose."""
    return float(score_candidates(model, scene, candidate.quat[None, :], candidate.trans[None, :])[0])
