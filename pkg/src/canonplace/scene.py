"""Scene state: objects with world poses, category maps, and placement order."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import MissingObject
from .maps import CategoryMap, FeatureCloud, ObjectCategory
from .se3 import Pose


@dataclass(frozen=True)
class SceneObject:
    """One object instance: identity, category, world pose, and its map.

    ``scales`` are the generative per-axis instance scales (canonical
    points are multiplied by them before the rigid move); they stay None
    for objects observed without ground truth.
    """

    id: str
    category: ObjectCategory
    pose: Pose
    map: CategoryMap
    scales: np.ndarray | None = None
    static: bool = False
    distractor: bool = False
    causal_parents: tuple[str, ...] = ()

    def __post_init__(self):
        if self.scales is not None:
            s = np.asarray(self.scales, dtype=float).reshape(3).copy()
            s.setflags(write=False)
            object.__setattr__(self, "scales", s)
        object.__setattr__(self, "causal_parents", tuple(self.causal_parents))

    def feature_cloud(self) -> FeatureCloud:
        """Observed cloud: canonical points scaled by the instance scales,
        then rigidly moved by the instance pose."""
        if self.scales is None:
            raise ValueError(f"object {self.id!r} carries no ground-truth scales")
        pts = self.pose.apply(self.category.points * self.scales)
        return FeatureCloud(self.category, self.category.ids, pts)


@dataclass(frozen=True)
class SceneState:
    """Objects of one scene plus the placement-order metadata.

    ``placement_order`` lists the non-static objects in the order they are
    placed; the reference set of step t is the statics plus the first t
    placed objects.
    """

    objects: tuple[SceneObject, ...]
    placement_order: tuple[str, ...]

    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "placement_order", tuple(self.placement_order))
        by_id = {}
        for obj in self.objects:
            if obj.id in by_id:
                raise ValueError(f"duplicate object id {obj.id!r}")
            by_id[obj.id] = obj
        object.__setattr__(self, "_by_id", by_id)
        for oid in self.placement_order:
            if oid not in by_id:
                raise ValueError(f"placement order references unknown object {oid!r}")

    @property
    def static_ids(self) -> tuple[str, ...]:
        return tuple(o.id for o in self.objects if o.static)

    def get(self, object_id: str) -> SceneObject:
        try:
            return self._by_id[object_id]
        except KeyError:
            raise MissingObject(f"object {object_id!r} not in scene") from None

    def __contains__(self, object_id: str) -> bool:
        return object_id in self._by_id

    def references_at(self, step: int) -> tuple[str, ...]:
        """Ids conditioning the placement at ``step`` (0-based): statics,
        previously placed objects, and any distractors."""
        placed_later = set(self.placement_order[step:])
        return tuple(o.id for o in self.objects if o.id not in placed_later)

    def step_of(self, object_id: str) -> int:
        try:
            return self.placement_order.index(object_id)
        except ValueError:
            raise MissingObject(f"object {object_id!r} is not a placed object") from None

    def with_pose(self, object_id: str, pose: Pose) -> "SceneState":
        objs = tuple(replace(o, pose=pose) if o.id == object_id else o for o in self.objects)
        if object_id not in self._by_id:
            raise MissingObject(f"object {object_id!r} not in scene")
        return SceneState(objs, self.placement_order)

    def with_maps(self, maps: dict[str, CategoryMap]) -> "SceneState":
        objs = tuple(replace(o, map=maps.get(o.id, o.map)) for o in self.objects)
        return SceneState(objs, self.placement_order)
