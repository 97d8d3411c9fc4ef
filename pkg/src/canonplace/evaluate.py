"""n-step inference evaluation, error metrics, and sweep reports.

A sweep condition is one combination of category-map kind, pose encoding,
model variant, minimization flag, and training-sample count. Every
condition is evaluated on every test scene; rows carry per-step error
traces so prefix means over the first t steps can be aggregated afterward.

Position errors are normalized by the scene extent, defined here as the
maximum pairwise distance between ground-truth origins of non-distractor
objects, and recorded per row for auditability.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .errors import DegenerateCloud, IoError, MissingModel
from .inference import InferenceParams, infer_pose
from .maps import CategoryMap, MapKind, fit_orthogonal, fit_uniform
from .minimize import MinimizationParams, assemble_active_set
from .moments import estimate_pose_and_scale
from .pairwise import encode_pose_set
from .placement import PlacementModel, Variant, fit_placement_model
from .scene import SceneState
from .dataset import SceneSet
from .se3 import (
    EncodingKind,
    Pose,
    compose,
    geodesic_angle_deg,
    invert,
    quat_conj,
    quat_mul,
    quat_to_rotvec,
    rotvec_to_quat,
)

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EvalConfig:
    """Sweep grid plus the sampling budget used for every inference call.

    n_steps = 0 runs the 0-step protocol (each object placed with all
    others at ground truth); n_steps > 0 runs one sequential inference over
    the last n_steps + 1 placement steps, feeding predictions forward.
    """

    n_steps: int = 0
    map_kinds: tuple[MapKind, ...] = (MapKind.ORTHOGONAL,)
    encodings: tuple[EncodingKind, ...] = (EncodingKind.AXIS_ANGLE,)
    variants: tuple[Variant, ...] = (Variant.BIDIRECTIONAL,)
    minimized: tuple[bool, ...] = (False,)
    train_counts: tuple[int, ...] = (5,)
    seed: int = 0
    inference: InferenceParams = field(default_factory=InferenceParams)
    min_alpha: float = 0.1
    min_restarts: int = 16

    def conditions(self):
        return tuple(
            product(self.map_kinds, self.encodings, self.variants, self.minimized, self.train_counts)
        )


@dataclass(frozen=True)
class StepError:
    step_index: int
    object_id: str
    position_error_pct: float
    angular_error_deg: float


@dataclass(frozen=True)
class EvalRow:
    template: str
    distractors: int
    map_kind: MapKind
    encoding: EncodingKind
    variant: Variant
    minimized: bool
    train_count: int
    n_steps: int
    scene_index: int
    extent_m: float
    steps: tuple[StepError, ...]

    @property
    def mean_position_error_pct(self) -> float:
        return float(np.mean([s.position_error_pct for s in self.steps]))

    @property
    def mean_angular_error_deg(self) -> float:
        return float(np.mean([s.angular_error_deg for s in self.steps]))


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]

    def mean_position_error(self, max_step: int | None = None, **filters) -> float:
        errs = self._step_values("position_error_pct", max_step, filters)
        return float(np.mean(errs))

    def mean_angular_error(self, max_step: int | None = None, **filters) -> float:
        errs = self._step_values("angular_error_deg", max_step, filters)
        return float(np.mean(errs))

    def _step_values(self, attr: str, max_step, filters) -> list[float]:
        out = []
        for row in self.rows:
            if any(getattr(row, key) != val for key, val in filters.items()):
                continue
            for s in row.steps:
                if max_step is None or s.step_index < max_step:
                    out.append(getattr(s, attr))
        if not out:
            raise ValueError("no rows match the filter")
        return out


# ---------------------------------------------------------------------------
# error metrics
# ---------------------------------------------------------------------------

def scene_extent(scene: SceneState) -> float:
    """Max pairwise distance between non-distractor ground-truth origins."""
    origins = np.stack([o.pose.trans for o in scene.objects if not o.distractor])
    diffs = origins[:, None, :] - origins[None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=-1)).max())


def position_error_pct(pred: Pose, gt: Pose, extent: float) -> float:
    if extent <= 0:
        raise ValueError("extent must be positive")
    return 100.0 * float(np.linalg.norm(pred.trans - gt.trans)) / extent


def angular_error_deg(pred: Pose, gt: Pose, symmetry: str | None = None) -> float:
    """Geodesic angle; for z-revolution symmetry the twist about the local z
    axis is quotiented out via the swing-twist decomposition."""
    if symmetry is None:
        return geodesic_angle_deg(pred, gt)
    if symmetry != "z_revolution":
        raise ValueError(f"unknown symmetry {symmetry!r}")
    rel = quat_mul(quat_conj(gt.quat), pred.quat)
    w, z = float(rel[0]), float(rel[3])
    n = math.hypot(w, z)
    if n < 1e-12:
        return 180.0
    twist = np.array([w / n, 0.0, 0.0, z / n])
    swing = quat_mul(rel, quat_conj(twist))
    sin_half = float(np.linalg.norm(swing[1:]))
    cos_half = abs(float(swing[0]))
    return math.degrees(2.0 * math.atan2(sin_half, cos_half))


# ---------------------------------------------------------------------------
# map fitting per condition
# ---------------------------------------------------------------------------

def fit_condition_map(obj, kind: MapKind) -> CategoryMap:
    if kind is MapKind.IDENTITY:
        return CategoryMap.identity()
    cloud = obj.feature_cloud()
    if kind is MapKind.UNIFORM:
        return fit_uniform(cloud)
    try:
        init, _, _ = estimate_pose_and_scale(cloud)
    except DegenerateCloud:
        init = None
    return fit_orthogonal(cloud, init=init).map


def scene_states_for(dataset: SceneSet, kind: MapKind) -> list[SceneState]:
    """Scenes with per-object category maps refitted for the condition."""
    out = []
    for scene in dataset.scenes:
        maps = {o.id: fit_condition_map(o, kind) for o in scene.objects}
        out.append(scene.with_maps(maps))
    return out


# ---------------------------------------------------------------------------
# protocols
# ---------------------------------------------------------------------------

def n_step_inference(
    models: dict[str, PlacementModel],
    scene: SceneState,
    n: int,
    params: InferenceParams,
    final_step: int | None = None,
) -> list[tuple[str, Pose]]:
    """Re-place the last n+1 objects ending at ``final_step`` in placement
    order, feeding each prediction into the next step's conditioning set.
    Objects before the window keep their ground-truth poses."""
    order = scene.placement_order
    last = len(order) - 1 if final_step is None else final_step
    if not (0 <= last < len(order)):
        raise ValueError("final_step outside placement order")
    first = max(0, last - n)
    working = scene
    predictions: list[tuple[str, Pose]] = []
    for step in range(first, last + 1):
        placed = order[step]
        if placed not in models:
            raise MissingModel(f"no model for placement step of {placed!r}")
        step_params = replace(params, seed=params.seed + step)
        result = infer_pose(models[placed], working, step_params)
        predictions.append((placed, result.pose))
        working = working.with_pose(placed, result.pose)
    return predictions


def fit_models_for_condition(
    train_scenes: list[SceneState],
    placement_order: tuple[str, ...],
    variant: Variant,
    encoding: EncodingKind,
    minimized: bool,
    min_params: MinimizationParams | None = None,
) -> dict[str, PlacementModel]:
    models = {}
    for placed in placement_order:
        model = fit_placement_model(train_scenes, placed, variant, encoding)
        if minimized:
            model = assemble_active_set(model, train_scenes, min_params or MinimizationParams())
        models[placed] = model
    return models


def run_sweep(config: EvalConfig, dataset: SceneSet) -> EvalReport:
    """Evaluate every grid condition on every test scene; deterministic
    given the config seed."""
    states_by_kind = {kind: scene_states_for(dataset, kind) for kind in config.map_kinds}
    symmetry = {name: cat.symmetry for name, cat in dataset.categories.items()}
    order = dataset.placement_order
    rows = []
    for cond_idx, (map_kind, encoding, variant, minimized, k) in enumerate(config.conditions()):
        states = states_by_kind[map_kind]
        train = [states[i] for i in dataset.train_ids[:k]]
        if len(train) < 2:
            raise ValueError(f"train_count {k} leaves fewer than 2 scenes")
        min_params = MinimizationParams(
            alpha=config.min_alpha, restarts=config.min_restarts, seed=config.seed * 7919 + cond_idx
        )
        models = fit_models_for_condition(train, order, variant, encoding, minimized, min_params)
        for scene_pos, scene_idx in enumerate(dataset.test_ids):
            scene = states[scene_idx]
            extent = scene_extent(scene)
            base_seed = (config.seed * 1_000_003 + cond_idx) * 131 + scene_pos
            params = replace(config.inference, seed=base_seed * 1009)
            if config.n_steps == 0:
                predictions = []
                for t in range(len(order)):
                    step_params = replace(params, seed=params.seed + 7 * t)
                    predictions.extend(n_step_inference(models, scene, 0, step_params, final_step=t))
            else:
                n = min(config.n_steps, len(order) - 1)
                predictions = n_step_inference(models, scene, n, params)
            steps = []
            for placed, pred in predictions:
                gt_obj = scene.get(placed)
                steps.append(
                    StepError(
                        step_index=scene.step_of(placed),
                        object_id=placed,
                        position_error_pct=position_error_pct(pred, gt_obj.pose, extent),
                        angular_error_deg=angular_error_deg(pred, gt_obj.pose, symmetry[gt_obj.category.name]),
                    )
                )
            rows.append(
                EvalRow(
                    template=dataset.template,
                    distractors=dataset.distractors,
                    map_kind=map_kind,
                    encoding=encoding,
                    variant=variant,
                    minimized=minimized,
                    train_count=k,
                    n_steps=config.n_steps,
                    scene_index=scene_idx,
                    extent_m=extent,
                    steps=tuple(steps),
                )
            )
    return EvalReport(tuple(rows))


def mean_pose_baseline(
    train_scenes: list[SceneState], test_scene: SceneState, placed: str, root: str
) -> Pose:
    """Trivial baseline: tangent-space average of the placed object's
    training pose relative to the root object, composed onto the test
    scene's root."""
    rels = [compose(invert(s.get(root).pose), s.get(placed).pose) for s in train_scenes]
    vecs, _ = encode_pose_set(rels, EncodingKind.AXIS_ANGLE)
    anchor = rels[0].quat
    rotvecs = quat_to_rotvec(quat_mul(quat_conj(anchor)[None, :], np.stack([r.quat for r in rels])))
    mean_rel = Pose(quat_mul(anchor, rotvec_to_quat(rotvecs.mean(axis=0))), vecs[:, :3].mean(axis=0))
    return compose(test_scene.get(root).pose, mean_rel)


# ---------------------------------------------------------------------------
# report output
# ---------------------------------------------------------------------------

_CSV_COLUMNS = (
    "template",
    "distractors",
    "map",
    "encoding",
    "variant",
    "minimized",
    "train_count",
    "n_steps",
    "scene",
    "extent_m",
    "num_steps",
    "mean_pos_err_pct",
    "mean_ang_err_deg",
)


def report_to_csv(report: EvalReport, path: str) -> None:
    """One CSV row per condition x test scene."""
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(_CSV_COLUMNS)
            for r in report.rows:
                writer.writerow(
                    [
                        r.template,
                        r.distractors,
                        r.map_kind.value,
                        r.encoding.value,
                        r.variant.value,
                        int(r.minimized),
                        r.train_count,
                        r.n_steps,
                        r.scene_index,
                        repr(r.extent_m),
                        len(r.steps),
                        repr(r.mean_position_error_pct),
                        repr(r.mean_angular_error_deg),
                    ]
                )
    except OSError as e:
        raise IoError(str(e)) from e


def report_to_dict(report: EvalReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "eval_report",
        "rows": [
            {
                "template": r.template,
                "distractors": r.distractors,
                "map": r.map_kind.value,
                "encoding": r.encoding.value,
                "variant": r.variant.value,
                "minimized": r.minimized,
                "train_count": r.train_count,
                "n_steps": r.n_steps,
                "scene": r.scene_index,
                "extent_m": r.extent_m,
                "mean_pos_err_pct": r.mean_position_error_pct,
                "mean_ang_err_deg": r.mean_angular_error_deg,
                "steps": [
                    {
                        "step": s.step_index,
                        "object": s.object_id,
                        "pos_err_pct": s.position_error_pct,
                        "ang_err_deg": s.angular_error_deg,
                    }
                    for s in r.steps
                ],
            }
            for r in report.rows
        ],
    }


def report_to_json(report: EvalReport, path: str) -> None:
    try:
        with open(path, "w") as f:
            json.dump(report_to_dict(report), f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise IoError(str(e)) from e
