"""Synthetic scene-set generation and the persistent dataset format.

Templates describe object roles with anchor-relative placement rules. A
rule's translation has a component scaled by the anchor instance's per-axis
scales (a bigger plate pushes the fork further out) and a component scaled
by the object's own scales (a taller cup sits higher), plus Gaussian
jitter. Instance scales combine a per-scene factor, a per-object factor,
and per-axis factors, so scenes vary globally while objects also deform
non-uniformly.

Feature clouds are the category's 12 canonical points scaled by the
instance's ground-truth scales and rigidly moved by its pose; the point
layout (box corners plus four asymmetric interior markers) keeps the
principal moments distinct and the id-weighted asymmetry informative.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidTemplate, IoError, SchemaVersionMismatch
from .maps import CategoryMap, MapKind, ObjectCategory
from .scene import SceneObject, SceneState
from .se3 import Pose, compose, pose_from_dict, pose_to_dict, random_unit_quaternion, rotvec_to_quat

SCHEMA_VERSION = 1

TEMPLATE_NAMES = ("dinner", "bread", "desk", "living_room", "tv")


def canonical_box_points(extents) -> np.ndarray:
    """12 deterministic feature points: 8 box corners plus 4 interior
    markers that break every reflection symmetry."""
    ex, ey, ez = np.asarray(extents, dtype=float)
    corners = np.array(
        [[sx * ex, sy * ey, sz * ez] for sx in (-0.5, 0.5) for sy in (-0.5, 0.5) for sz in (-0.5, 0.5)]
    )
    markers = np.array(
        [
            [0.50 * ex, 0.0, 0.0],
            [0.0, 0.35 * ey, 0.0],
            [0.0, 0.0, 0.25 * ez],
            [-0.30 * ex, -0.20 * ey, 0.10 * ez],
        ]
    )
    return np.vstack([corners, markers])


@dataclass(frozen=True)
class CategorySpec:
    """Named category: nominal extents plus an optional symmetry tag."""

    name: str
    extents: tuple[float, float, float]
    symmetry: str | None = None

    def build(self) -> ObjectCategory:
        return ObjectCategory(self.name, tuple(range(12)), canonical_box_points(self.extents), symmetry=self.symmetry)


@dataclass(frozen=True)
class PlacementRule:
    """How one role is posed relative to its anchor.

    translation = offset_anchor * anchor.scales + offset_self * own.scales
    + N(0, pos_jitter^2), applied in the anchor's frame; rotation =
    rotation_offset followed by a rotation-vector jitter N(0, rot_jitter^2).
    The root static has anchor None and is posed in world coordinates.
    """

    role: str
    category: str
    anchor: str | None
    offset_anchor: tuple[float, float, float] = (0.0, 0.0, 0.0)
    offset_self: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    pos_jitter: float = 0.01
    rot_jitter: float = 0.04
    static: bool = False


@dataclass(frozen=True)
class SceneTemplate:
    name: str
    categories: tuple[CategorySpec, ...]
    rules: tuple[PlacementRule, ...]
    placement_order: tuple[str, ...]
    scene_scale_range: tuple[float, float] = (0.75, 1.35)
    object_scale_range: tuple[float, float] = (0.92, 1.08)
    axis_scale_range: tuple[float, float] = (0.95, 1.05)
    distractor_scale_range: tuple[float, float] = (0.6, 1.6)
    distractor_category: str = "clutter"

    def __post_init__(self):
        roles = [r.role for r in self.rules]
        if len(set(roles)) != len(roles):
            raise InvalidTemplate(f"template {self.name!r} has duplicate roles")
        by_role = {r.role: r for r in self.rules}
        cats = {c.name for c in self.categories}
        seen: set[str] = set()
        for rule in self.rules:
            if rule.category not in cats:
                raise InvalidTemplate(f"role {rule.role!r} uses unknown category {rule.category!r}")
            if rule.anchor is None:
                if not rule.static:
                    raise InvalidTemplate(f"anchorless role {rule.role!r} must be static")
            else:
                if rule.anchor not in seen:
                    raise InvalidTemplate(f"role {rule.role!r} anchored to {rule.anchor!r} before it exists")
            seen.add(rule.role)
        statics = {r.role for r in self.rules if r.static}
        if not statics:
            raise InvalidTemplate("template needs at least one static root")
        if set(self.placement_order) != set(roles) - statics:
            raise InvalidTemplate("placement order must cover exactly the non-static roles")
        placed_positions = {role: i for i, role in enumerate(self.placement_order)}
        for rule in self.rules:
            if rule.static or rule.anchor is None:
                continue
            anchor_rule = by_role[rule.anchor]
            if not anchor_rule.static and placed_positions[rule.anchor] >= placed_positions[rule.role]:
                raise InvalidTemplate(f"role {rule.role!r} is placed before its anchor {rule.anchor!r}")
        lo = self.scene_scale_range[0] * self.object_scale_range[0] * self.axis_scale_range[0]
        hi = self.scene_scale_range[1] * self.object_scale_range[1] * self.axis_scale_range[1]
        if lo <= 0.2 or hi >= 5.0:
            raise InvalidTemplate(f"combined scale range ({lo:.3f}, {hi:.3f}) outside (0.2, 5.0)")

    def category(self, name: str) -> CategorySpec:
        for c in self.categories:
            if c.name == name:
                return c
        raise InvalidTemplate(f"unknown category {name!r}")


@dataclass(frozen=True)
class SceneSet:
    """Generated scenes with ground truth, plus the train/test split."""

    template: str
    categories: dict[str, ObjectCategory]
    scenes: tuple[SceneState, ...]
    train_ids: tuple[int, ...]
    test_ids: tuple[int, ...]
    placement_order: tuple[str, ...]
    distractors: int
    seed: int

    @property
    def train_scenes(self) -> list[SceneState]:
        return [self.scenes[i] for i in self.train_ids]

    @property
    def test_scenes(self) -> list[SceneState]:
        return [self.scenes[i] for i in self.test_ids]


def generate_dataset(template: SceneTemplate | str, n_variations: int, d: int, seed: int) -> SceneSet:
    """Realize a template: deterministic given (template, n_variations, d, seed)."""
    if isinstance(template, str):
        template = builtin_template(template)
    if n_variations < 2:
        raise ValueError("need at least 2 variations")
    if not (0 <= d <= 5):
        raise ValueError("distractor count must be in [0, 5]")

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    categories = {c.name: c.build() for c in template.categories}
    scenes = []
    for _ in range(n_variations):
        g = rng.uniform(*template.scene_scale_range)
        objects: list[SceneObject] = []
        realized: dict[str, SceneObject] = {}
        for rule in template.rules:
            u = rng.uniform(*template.object_scale_range)
            v = rng.uniform(*template.axis_scale_range, size=3)
            scales = g * u * v
            own_jitter = compose(
                Pose(rotvec_to_quat(np.asarray(rule.rotation_offset, dtype=float)), np.zeros(3)),
                Pose(rotvec_to_quat(rng.normal(0.0, rule.rot_jitter, 3)), np.zeros(3)),
            )
            if rule.anchor is None:
                trans = np.asarray(rule.offset_anchor, dtype=float) + rng.normal(0.0, rule.pos_jitter, 3)
                pose = Pose(own_jitter.quat, trans)
            else:
                anchor = realized[rule.anchor]
                local_t = (
                    np.asarray(rule.offset_anchor, dtype=float) * anchor.scales
                    + np.asarray(rule.offset_self, dtype=float) * scales
                    + rng.normal(0.0, rule.pos_jitter, 3)
                )
                pose = compose(anchor.pose, Pose(own_jitter.quat, local_t))
            obj = SceneObject(
                id=rule.role,
                category=categories[rule.category],
                pose=pose,
                map=CategoryMap(MapKind.ORTHOGONAL, 1.0 / scales),
                scales=scales,
                static=rule.static,
                distractor=False,
                causal_parents=(rule.anchor,) if rule.anchor is not None else (),
            )
            realized[rule.role] = obj
            objects.append(obj)

        origins = np.stack([o.pose.trans for o in objects])
        center = 0.5 * (origins.min(axis=0) + origins.max(axis=0))
        half = 0.5 * (origins.max(axis=0) - origins.min(axis=0)) * 1.5  # 50% margin per axis
        for i in range(d):
            scales = rng.uniform(*template.distractor_scale_range, size=3)
            pose = Pose(random_unit_quaternion(rng), rng.uniform(center - half, center + half))
            objects.append(
                SceneObject(
                    id=f"distractor_{i}",
                    category=categories[template.distractor_category],
                    pose=pose,
                    map=CategoryMap(MapKind.ORTHOGONAL, 1.0 / scales),
                    scales=scales,
                    static=False,
                    distractor=True,
                    causal_parents=(),
                )
            )
        scenes.append(SceneState(tuple(objects), template.placement_order))

    n_train = n_variations // 2
    return SceneSet(
        template=template.name,
        categories=categories,
        scenes=tuple(scenes),
        train_ids=tuple(range(n_train)),
        test_ids=tuple(range(n_train, n_variations)),
        placement_order=template.placement_order,
        distractors=d,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _category_to_dict(cat: ObjectCategory) -> dict:
    return {
        "symmetry": cat.symmetry,
        "points": [{"id": i, "position": p.tolist()} for i, p in zip(cat.ids, cat.points)],
    }


def _category_from_dict(name: str, d: dict) -> ObjectCategory:
    ids = tuple(int(p["id"]) for p in d["points"])
    pts = np.array([p["position"] for p in d["points"]], dtype=float)
    return ObjectCategory(name, ids, pts, symmetry=d.get("symmetry"))


def _object_to_dict(obj: SceneObject) -> dict:
    return {
        "id": obj.id,
        "category": obj.category.name,
        "pose": pose_to_dict(obj.pose),
        "scales": obj.scales.tolist() if obj.scales is not None else None,
        "map": {"kind": obj.map.kind.value, "scales": obj.map.scales.tolist()},
        "static": obj.static,
        "distractor": obj.distractor,
        "causal_parents": list(obj.causal_parents),
    }


def _object_from_dict(d: dict, categories: dict[str, ObjectCategory]) -> SceneObject:
    return SceneObject(
        id=d["id"],
        category=categories[d["category"]],
        pose=pose_from_dict(d["pose"]),
        map=CategoryMap(MapKind(d["map"]["kind"]), np.asarray(d["map"]["scales"], dtype=float)),
        scales=None if d["scales"] is None else np.asarray(d["scales"], dtype=float),
        static=d["static"],
        distractor=d["distractor"],
        causal_parents=tuple(d["causal_parents"]),
    )


def dataset_to_dict(ds: SceneSet) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "scene_dataset",
        "template": ds.template,
        "distractors": ds.distractors,
        "seed": ds.seed,
        "placement_order": list(ds.placement_order),
        "split": {"train": list(ds.train_ids), "test": list(ds.test_ids)},
        "categories": {name: _category_to_dict(cat) for name, cat in sorted(ds.categories.items())},
        "scenes": [{"objects": [_object_to_dict(o) for o in s.objects]} for s in ds.scenes],
    }


def dataset_from_dict(data: dict) -> SceneSet:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"dataset schema {version!r}, expected {SCHEMA_VERSION}")
    categories = {name: _category_from_dict(name, d) for name, d in data["categories"].items()}
    order = tuple(data["placement_order"])
    scenes = tuple(
        SceneState(tuple(_object_from_dict(o, categories) for o in s["objects"]), order)
        for s in data["scenes"]
    )
    return SceneSet(
        template=data["template"],
        categories=categories,
        scenes=scenes,
        train_ids=tuple(data["split"]["train"]),
        test_ids=tuple(data["split"]["test"]),
        placement_order=order,
        distractors=data["distractors"],
        seed=data["seed"],
    )


def save_dataset(ds: SceneSet, path: str) -> None:
    try:
        with open(path, "w") as f:
            json.dump(dataset_to_dict(ds), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise IoError(str(e)) from e


def load_dataset(path: str) -> SceneSet:
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise IoError(str(e)) from e
    return dataset_from_dict(data)


# ---------------------------------------------------------------------------
# built-in templates (hand-crafted approximations of five household scenarios)
# ---------------------------------------------------------------------------

def _dinner_template() -> SceneTemplate:
    categories = (
        CategorySpec("table", (1.6, 0.9, 0.05)),
        CategorySpec("plate", (0.28, 0.23, 0.03), symmetry="z_revolution"),
        CategorySpec("fork", (0.035, 0.19, 0.015)),
        CategorySpec("knife", (0.03, 0.22, 0.012)),
        CategorySpec("spoon", (0.045, 0.17, 0.018)),
        CategorySpec("cup", (0.10, 0.08, 0.135), symmetry="z_revolution"),
        CategorySpec("napkin", (0.16, 0.13, 0.008)),
        CategorySpec("candle", (0.075, 0.058, 0.19), symmetry="z_revolution"),
        CategorySpec("clutter", (0.16, 0.12, 0.09)),
    )

    def setting(side: str, sign: float, yaw: float):
        plate = f"plate_{side}"
        return (
            PlacementRule(plate, "plate", "table", (sign * 0.20, 0.0, 0.04), rotation_offset=(0, 0, yaw), pos_jitter=0.015, rot_jitter=0.05),
            PlacementRule(f"fork_{side}", "fork", plate, (-0.62, 0.02, -0.2), (0.0, -0.05, 0.0), pos_jitter=0.008, rot_jitter=0.05),
            PlacementRule(f"knife_{side}", "knife", plate, (0.60, 0.0, -0.2), (0.0, -0.04, 0.0), pos_jitter=0.008, rot_jitter=0.05),
            PlacementRule(f"spoon_{side}", "spoon", plate, (0.80, -0.02, -0.2), pos_jitter=0.008, rot_jitter=0.06),
            PlacementRule(f"cup_{side}", "cup", plate, (0.55, 0.65, -0.5), (0.0, 0.0, 0.5), pos_jitter=0.012, rot_jitter=0.08),
            PlacementRule(f"napkin_{side}", "napkin", plate, (-1.0, -0.1, -0.4), pos_jitter=0.012, rot_jitter=0.06),
        )

    rules = (
        PlacementRule("table", "table", None, pos_jitter=0.02, rot_jitter=0.05, static=True),
        *setting("a", -1.0, 0.0),
        *setting("b", 1.0, math.pi / 2),
        PlacementRule("candle", "candle", "table", (0.0, 0.12, 0.5), (0.0, 0.0, 0.5), pos_jitter=0.015, rot_jitter=0.08),
    )
    order = tuple(
        f"{what}_{side}" for side in ("a", "b") for what in ("plate", "fork", "knife", "spoon", "cup", "napkin")
    ) + ("candle",)
    return SceneTemplate("dinner", categories, rules, order)


def _bread_template() -> SceneTemplate:
    categories = (
        CategorySpec("table", (1.2, 0.8, 0.05)),
        CategorySpec("board", (0.45, 0.3, 0.03)),
        CategorySpec("loaf", (0.14, 0.3, 0.11)),
        CategorySpec("knife", (0.03, 0.26, 0.013)),
        CategorySpec("jar", (0.095, 0.078, 0.125), symmetry="z_revolution"),
        CategorySpec("basket", (0.32, 0.24, 0.12)),
        CategorySpec("plate", (0.26, 0.22, 0.03), symmetry="z_revolution"),
        CategorySpec("clutter", (0.16, 0.12, 0.09)),
    )
    rules = (
        PlacementRule("table", "table", None, pos_jitter=0.02, rot_jitter=0.05, static=True),
        PlacementRule("board", "board", "table", (-0.08, 0.05, 0.5), pos_jitter=0.015, rot_jitter=0.05),
        PlacementRule("loaf", "loaf", "board", (-0.25, 0.0, 0.0), (0.0, 0.0, 0.55), pos_jitter=0.01, rot_jitter=0.05),
        PlacementRule("bread_knife", "knife", "board", (0.4, -0.35, 0.3), rotation_offset=(0, 0, 0.3), pos_jitter=0.008, rot_jitter=0.05),
        PlacementRule("jar", "jar", "table", (0.28, 0.22, 0.5), (0.0, 0.0, 0.5), pos_jitter=0.015, rot_jitter=0.08),
        PlacementRule("basket", "basket", "table", (-0.35, 0.22, 0.5), (0, 0, 0.4), pos_jitter=0.02, rot_jitter=0.06),
        PlacementRule("side_plate", "plate", "table", (0.3, -0.2, 0.5), pos_jitter=0.015, rot_jitter=0.06),
    )
    order = ("board", "loaf", "bread_knife", "jar", "basket", "side_plate")
    return SceneTemplate("bread", categories, rules, order)


def _desk_template() -> SceneTemplate:
    categories = (
        CategorySpec("desk", (1.4, 0.7, 0.04)),
        CategorySpec("monitor", (0.55, 0.09, 0.35)),
        CategorySpec("keyboard", (0.44, 0.15, 0.03)),
        CategorySpec("mouse", (0.06, 0.1, 0.035)),
        CategorySpec("lamp", (0.16, 0.125, 0.4)),
        CategorySpec("mug", (0.09, 0.075, 0.125), symmetry="z_revolution"),
        CategorySpec("notebook", (0.15, 0.21, 0.02)),
        CategorySpec("clutter", (0.16, 0.12, 0.09)),
    )
    rules = (
        PlacementRule("desk", "desk", None, pos_jitter=0.02, rot_jitter=0.05, static=True),
        PlacementRule("monitor", "monitor", "desk", (0.0, 0.3, 0.5), (0.0, 0.0, 0.5), pos_jitter=0.02, rot_jitter=0.04),
        PlacementRule("keyboard", "keyboard", "monitor", (0.0, -2.8, 0.0), (0.0, 0.0, 0.0), pos_jitter=0.015, rot_jitter=0.04),
        PlacementRule("mouse", "mouse", "keyboard", (0.75, 0.0, 0.0), pos_jitter=0.012, rot_jitter=0.08),
        PlacementRule("lamp", "lamp", "desk", (-0.4, 0.25, 0.5), (0, 0, 0.45), pos_jitter=0.02, rot_jitter=0.08),
        PlacementRule("mug", "mug", "desk", (0.4, 0.15, 0.5), (0.0, 0.0, 0.5), pos_jitter=0.02, rot_jitter=0.08),
        PlacementRule("notebook", "notebook", "keyboard", (-0.9, 0.1, 0.0), pos_jitter=0.015, rot_jitter=0.06),
    )
    order = ("monitor", "keyboard", "mouse", "lamp", "mug", "notebook")
    return SceneTemplate("desk", categories, rules, order)


def _living_room_template() -> SceneTemplate:
    categories = (
        CategorySpec("sofa", (2.0, 0.95, 0.75)),
        CategorySpec("coffee_table", (1.1, 0.6, 0.45)),
        CategorySpec("tv_stand", (1.5, 0.42, 0.52)),
        CategorySpec("tv", (1.2, 0.08, 0.7)),
        CategorySpec("armchair", (0.95, 0.78, 0.65)),
        CategorySpec("lamp", (0.36, 0.29, 1.5)),
        CategorySpec("plant", (0.42, 0.33, 0.9)),
        CategorySpec("clutter", (0.4, 0.3, 0.25)),
    )
    rules = (
        PlacementRule("sofa", "sofa", None, pos_jitter=0.03, rot_jitter=0.05, static=True),
        PlacementRule("coffee_table", "coffee_table", "sofa", (0.0, 1.1, 0.0), pos_jitter=0.05, rot_jitter=0.05),
        PlacementRule("tv_stand", "tv_stand", "sofa", (0.0, 2.6, 0.0), pos_jitter=0.06, rot_jitter=0.04),
        PlacementRule("tv", "tv", "tv_stand", (0.0, 0.0, 0.55), (0.0, 0.0, 0.5), pos_jitter=0.02, rot_jitter=0.03),
        PlacementRule("armchair", "armchair", "sofa", (0.85, 0.9, 0.0), rotation_offset=(0, 0, -0.6), pos_jitter=0.06, rot_jitter=0.08),
        PlacementRule("floor_lamp", "lamp", "sofa", (-0.7, 0.35, 0.0), pos_jitter=0.05, rot_jitter=0.1),
        PlacementRule("plant", "plant", "tv_stand", (0.65, 0.1, 0.0), pos_jitter=0.05, rot_jitter=0.1),
    )
    order = ("coffee_table", "tv_stand", "tv", "armchair", "floor_lamp", "plant")
    return SceneTemplate(
        "living_room",
        categories,
        rules,
        order,
        distractor_scale_range=(0.7, 1.4),
    )


def _tv_template() -> SceneTemplate:
    categories = (
        CategorySpec("cabinet", (1.6, 0.48, 0.58)),
        CategorySpec("tv", (1.25, 0.08, 0.72)),
        CategorySpec("soundbar", (0.9, 0.1, 0.06)),
        CategorySpec("console", (0.31, 0.25, 0.06)),
        CategorySpec("speaker", (0.15, 0.19, 0.28)),
        CategorySpec("remote", (0.05, 0.17, 0.02)),
        CategorySpec("clutter", (0.2, 0.15, 0.1)),
    )
    rules = (
        PlacementRule("cabinet", "cabinet", None, pos_jitter=0.02, rot_jitter=0.04, static=True),
        PlacementRule("tv", "tv", "cabinet", (0.0, -0.05, 0.5), (0.0, 0.0, 0.5), pos_jitter=0.02, rot_jitter=0.03),
        PlacementRule("soundbar", "soundbar", "cabinet", (0.0, 0.3, 0.5), (0.0, 0.0, 0.5), pos_jitter=0.015, rot_jitter=0.03),
        PlacementRule("console", "console", "cabinet", (-0.37, 0.25, 0.5), (0, 0, 0.5), pos_jitter=0.02, rot_jitter=0.05),
        PlacementRule("speaker_l", "speaker", "cabinet", (-0.55, -0.02, 0.5), (0, 0, 0.5), pos_jitter=0.02, rot_jitter=0.05),
        PlacementRule("speaker_r", "speaker", "cabinet", (0.55, -0.02, 0.5), (0, 0, 0.5), pos_jitter=0.02, rot_jitter=0.05),
        PlacementRule("remote", "remote", "soundbar", (0.35, 1.2, 0.0), pos_jitter=0.015, rot_jitter=0.08),
    )
    order = ("tv", "soundbar", "console", "speaker_l", "speaker_r", "remote")
    return SceneTemplate("tv", categories, rules, order)


_BUILDERS = {
    "dinner": _dinner_template,
    "bread": _bread_template,
    "desk": _desk_template,
    "living_room": _living_room_template,
    "tv": _tv_template,
}


def builtin_template(name: str) -> SceneTemplate:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise InvalidTemplate(f"unknown template {name!r}; choose one of {TEMPLATE_NAMES}") from None


# template files reuse the same JSON conventions as datasets

def template_to_dict(t: SceneTemplate) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "scene_template",
        "name": t.name,
        "categories": [
            {"name": c.name, "extents": list(c.extents), "symmetry": c.symmetry} for c in t.categories
        ],
        "rules": [
            {
                "role": r.role,
                "category": r.category,
                "anchor": r.anchor,
                "offset_anchor": list(r.offset_anchor),
                "offset_self": list(r.offset_self),
                "rotation_offset": list(r.rotation_offset),
                "pos_jitter": r.pos_jitter,
                "rot_jitter": r.rot_jitter,
                "static": r.static,
            }
            for r in t.rules
        ],
        "placement_order": list(t.placement_order),
        "scene_scale_range": list(t.scene_scale_range),
        "object_scale_range": list(t.object_scale_range),
        "axis_scale_range": list(t.axis_scale_range),
        "distractor_scale_range": list(t.distractor_scale_range),
        "distractor_category": t.distractor_category,
    }


def template_from_dict(data: dict) -> SceneTemplate:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"template schema {version!r}, expected {SCHEMA_VERSION}")
    return SceneTemplate(
        name=data["name"],
        categories=tuple(
            CategorySpec(c["name"], tuple(c["extents"]), c.get("symmetry")) for c in data["categories"]
        ),
        rules=tuple(
            PlacementRule(
                role=r["role"],
                category=r["category"],
                anchor=r["anchor"],
                offset_anchor=tuple(r["offset_anchor"]),
                offset_self=tuple(r["offset_self"]),
                rotation_offset=tuple(r["rotation_offset"]),
                pos_jitter=r["pos_jitter"],
                rot_jitter=r["rot_jitter"],
                static=r["static"],
            )
            for r in data["rules"]
        ),
        placement_order=tuple(data["placement_order"]),
        scene_scale_range=tuple(data["scene_scale_range"]),
        object_scale_range=tuple(data["object_scale_range"]),
        axis_scale_range=tuple(data["axis_scale_range"]),
        distractor_scale_range=tuple(data["distractor_scale_range"]),
        distractor_category=data["distractor_category"],
    )


def load_template(source: str) -> SceneTemplate:
    """Resolve a built-in template name or a template JSON file path."""
    if source in _BUILDERS:
        return builtin_template(source)
    if os.path.exists(source):
        try:
            with open(source) as f:
                return template_from_dict(json.load(f))
        except (OSError, json.JSONDecodeError) as e:
            raise IoError(str(e)) from e
    raise InvalidTemplate(f"{source!r} is neither a built-in template nor a file")
