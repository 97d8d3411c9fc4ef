"""Category maps: diagonal scalings that deform an observed object instance
onto its category's canonical frame.

Three kinds are supported: identity (no scaling), uniform (one factor), and
orthogonal (one factor per axis). Scaling acts on the translation component
of relative poses only; applying a diagonal map to the full 4x4 transform
would shear the rotation block and break the pose encodings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateCloud
from .se3 import Pose, matrix_to_quat

SCALE_BOUNDS = (1e-4, 1e4)


class MapKind(Enum):
    IDENTITY = "identity"
    UNIFORM = "uniform"
    ORTHOGONAL = "ortho"


@dataclass(frozen=True)
class ObjectCategory:
    """Category with id-matched canonical feature points.

    symmetry is either None or "z_revolution" (invariant under rotations
    about the local z axis); it only affects angular error metrics.
    """

    name: str
    ids: tuple[int, ...]
    points: np.ndarray = field(repr=False)  # (m, 3) canonical positions
    symmetry: str | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(len(self.ids), 3).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        if len(set(self.ids)) != len(self.ids):
            raise ValueError(f"category {self.name!r} has duplicate point ids")


@dataclass(frozen=True)
class FeatureCloud:
    """Observed world-space feature points, id-matched to a category."""

    category: ObjectCategory
    ids: tuple[int, ...]
    points: np.ndarray = field(repr=False)  # (m, 3) observed positions

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(len(self.ids), 3).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        missing = set(self.ids) - set(self.category.ids)
        if missing:
            raise ValueError(f"cloud ids {sorted(missing)} not in category {self.category.name!r}")


def matched_points(cloud: FeatureCloud) -> tuple[np.ndarray, np.ndarray]:
    """Observed and canonical positions aligned by id, sorted by id."""
    canon_by_id = {i: p for i, p in zip(cloud.category.ids, cloud.category.points)}
    order = np.argsort(cloud.ids)
    obs = cloud.points[order]
    canon = np.array([canon_by_id[cloud.ids[i]] for i in order])
    return obs, canon


@dataclass(frozen=True)
class CategoryMap:
    """Diagonal scaling taking observed coordinates to canonical ones."""

    kind: MapKind
    scales: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.scales, dtype=float).reshape(3).copy()
        s.setflags(write=False)
        object.__setattr__(self, "scales", s)
        if np.any(s <= SCALE_BOUNDS[0]) or np.any(s >= SCALE_BOUNDS[1]):
            raise ValueError(f"scales {s.tolist()} outside {SCALE_BOUNDS}")
        if self.kind is MapKind.IDENTITY and not np.all(s == 1.0):
            raise ValueError("identity map must have unit scales")
        if self.kind is MapKind.UNIFORM and not (s[0] == s[1] == s[2]):
            raise ValueError("uniform map must have equal scales")

    @staticmethod
    def identity() -> "CategoryMap":
        return CategoryMap(MapKind.IDENTITY, np.ones(3))

    @staticmethod
    def uniform(s: float) -> "CategoryMap":
        return CategoryMap(MapKind.UNIFORM, np.full(3, float(s)))

    @staticmethod
    def orthogonal(scales) -> "CategoryMap":
        return CategoryMap(MapKind.ORTHOGONAL, np.asarray(scales, dtype=float))

    def inverse(self) -> "CategoryMap":
        if self.kind is MapKind.IDENTITY:
            return self
        return CategoryMap(self.kind, 1.0 / self.scales)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CategoryMap):
            return NotImplemented
        return self.kind is other.kind and np.array_equal(self.scales, other.scales)


def _clamp_scale(s: float) -> tuple[float, bool]:
    lo, hi = 1e-4 * (1 + 1e-9), 1e4 * (1 - 1e-9)
    if not np.isfinite(s) or s <= 0:
        return hi, True
    if s < lo:
        return lo, True
    if s > hi:
        return hi, True
    return float(s), False


def fit_uniform(observed: FeatureCloud, category: ObjectCategory | None = None) -> CategoryMap:
    """Uniform scale from the mean ratio of canonical to observed pair distances.

    The mean runs over ordered pairs i != j (the diagonal is excluded, and
    pairs whose observed distance is below 1e-9 are skipped because their
    ratio is undefined). Rigid motions of the observed cloud leave the
    result unchanged.
    """
    if category is not None and category is not observed.category:
        observed = FeatureCloud(category, observed.ids, observed.points)
    obs, canon = matched_points(observed)
    if obs.shape[0] < 2:
        raise DegenerateCloud("uniform fit needs at least 2 matched points")
    d_obs = np.linalg.norm(obs[:, None, :] - obs[None, :, :], axis=-1)
    d_can = np.linalg.norm(canon[:, None, :] - canon[None, :, :], axis=-1)
    iu = np.triu_indices(obs.shape[0], k=1)
    usable = d_obs[iu] > 1e-9
    if not np.any(usable):
        raise DegenerateCloud("all observed pairwise distances below 1e-9")
    s = float(np.mean(d_can[iu][usable] / d_obs[iu][usable]))
    s, _ = _clamp_scale(s)
    return CategoryMap.uniform(s)


def rigid_fit(source: np.ndarray, target: np.ndarray) -> Pose:
    """Closed-form least-squares rigid alignment (SVD): target ~ R source + t.

    Reflections are resolved by forcing det(R) = +1.
    """
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    mu_s = source.mean(axis=0)
    mu_t = target.mean(axis=0)
    H = (target - mu_t).T @ (source - mu_s)
    U, _, Vt = np.linalg.svd(H)
    D = np.eye(3)
    if np.linalg.det(U @ Vt) < 0:
        D[2, 2] = -1.0
    R = U @ D @ Vt
    t = mu_t - R @ mu_s
    return Pose(matrix_to_quat(R), t)


@dataclass(frozen=True)
class OrthogonalFit:
    """Result of the alternating per-axis scale / rigid-pose optimization."""

    pose: Pose
    map: CategoryMap
    objective: float
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...]


def _coplanarity_check(points: np.ndarray, label: str) -> None:
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] < 1e-9 * max(1.0, sv[0]):
        raise DegenerateCloud(f"{label} points are coplanar; per-axis fit is underdetermined")


def fit_orthogonal(
    observed: FeatureCloud,
    category: ObjectCategory | None = None,
    init: Pose | None = None,
    max_iterations: int = 100,
    min_decrease: float = 1e-10,
) -> OrthogonalFit:
    """Jointly fit pose and per-axis scales by alternating closed-form steps.

    Models observed_i = R (canon_i / s) + t with s the map scales taking
    observed coordinates back to canonical ones. Each iteration solves the
    rigid alignment for fixed scales (SVD least squares) and then the
    per-axis scales for fixed pose (scalar least squares), so the squared
    residual objective is non-increasing. Stops when the decrease drops
    below ``min_decrease`` or after ``max_iterations``; hitting the step
    limit with a decrease still above 1e-6 of the initial objective, or
    clamping a scale into bounds, clears the ``converged`` flag.
    """
    if category is not None and category is not observed.category:
        observed = FeatureCloud(category, observed.ids, observed.points)
    obs, canon = matched_points(observed)
    if obs.shape[0] < 4:
        raise DegenerateCloud("orthogonal fit needs at least 4 matched points")
    _coplanarity_check(canon, "canonical")
    _coplanarity_check(obs, "observed")

    scales = fit_uniform(observed).scales.copy()
    pose = init if init is not None else rigid_fit(canon / scales, obs)

    def objective(p: Pose, s: np.ndarray) -> float:
        pred = p.apply(canon / s)
        return float(np.sum((obs - pred) ** 2))

    clamped = False
    trace = [objective(pose, scales)]
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        pose = rigid_fit(canon / scales, obs)
        local = (obs - pose.trans) @ pose.rotation_matrix()  # R^T (obs - t)
        new_scales = np.empty(3)
        for axis in range(3):
            num = float(np.dot(canon[:, axis], canon[:, axis]))
            den = float(np.dot(local[:, axis], canon[:, axis]))
            s_axis = num / den if den > 0 else np.inf
            s_axis, was_clamped = _clamp_scale(s_axis)
            clamped = clamped or was_clamped
            new_scales[axis] = s_axis
        scales = new_scales
        trace.append(objective(pose, scales))
        if trace[-2] - trace[-1] < min_decrease:
            break

    final = trace[-1]
    hit_limit = iterations == max_iterations and (trace[-2] - trace[-1]) > 1e-6 * max(trace[0], 1e-300)
    converged = not (hit_limit or clamped)
    return OrthogonalFit(
        pose=pose,
        map=CategoryMap.orthogonal(scales),
        objective=final,
        iterations=iterations,
        converged=converged,
        objective_trace=tuple(trace),
    )


def canonicalize_relative_pose(map: CategoryMap, rel: Pose) -> Pose:
    """Scale a relative pose's translation into the canonical frame.

    The rotation is left untouched: scaling the full transform would shear
    the rotation block and the result could no longer be encoded.
    """
    if map.kind is MapKind.IDENTITY:
        return rel
    return Pose(rel.quat, rel.trans * map.scales)


def decanonicalize_pose(map: CategoryMap, canonical_rel: Pose) -> Pose:
    """Exact inverse of :func:`canonicalize_relative_pose`."""
    if map.kind is MapKind.IDENTITY:
        return canonical_rel
    return Pose(canonical_rel.quat, canonical_rel.trans / map.scales)
