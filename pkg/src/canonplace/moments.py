"""Pose and uniform-scale estimation from feature-point moments.

The estimator aligns the principal frames of the observed and canonical
clouds, resolves axis signs by the id-weighted asymmetry of the points, and
settles the remaining 180-degree ambiguity with a flip test: residuals of
the id-matched points at the extremes of the longest axis are compared,
current pose against the pose rotated pi about the shortest moment axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCloud
from .maps import CategoryMap, FeatureCloud, ObjectCategory, matched_points
from .se3 import Pose, matrix_to_quat

# Top-two moment ratios below this leave the principal axes ambiguous.
AXIS_AMBIGUITY_RATIO = 1.05


@dataclass(frozen=True)
class MomentFrame:
    """Centroid plus right-handed principal axes ordered by decreasing moment."""

    centroid: np.ndarray
    axes: np.ndarray = field(repr=False)  # (3, 3), columns are principal directions
    moments: np.ndarray = field(repr=False)  # (3,) descending

    def __post_init__(self):
        for name, arr, shape in (("centroid", self.centroid, (3,)), ("axes", self.axes, (3, 3)), ("moments", self.moments, (3,))):
            a = np.asarray(arr, dtype=float).reshape(shape).copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def moment_frame(points: np.ndarray) -> MomentFrame:
    """Principal frame of a point set, sign-fixed by id-weighted asymmetry.

    Points must be ordered by id; the weight of point i is i + 1, so the
    same rule applied to the canonical and observed clouds picks matching
    axis signs. Only the two axes that align most strongly with the
    asymmetry vector are oriented by it; the third is derived from the
    right-handedness constraint. A proper rotation can only realize an
    even number of sign flips, so orienting the weakest-aligned axis
    independently could demand an impossible pattern; leaving it to
    handedness is the closest proper frame, and any leftover half-turn
    ambiguity sits exactly where the flip test can correct it.
    """
    pts = np.asarray(points, dtype=float)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / pts.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    moments = eigvals[order]
    axes = eigvecs[:, order]
    weights = np.arange(1, pts.shape[0] + 1, dtype=float)
    asym = (weights[:, None] * centered).sum(axis=0)
    dots = axes.T @ asym
    strongest = np.argsort(-np.abs(dots), kind="stable")
    for j in strongest[:2]:
        if dots[j] < 0.0:
            axes[:, j] *= -1.0
    derived = int(strongest[2])
    j, k = (derived + 1) % 3, (derived + 2) % 3
    axes[:, derived] = np.cross(axes[:, j], axes[:, k])
    return MomentFrame(centroid, axes, np.maximum(moments, 0.0))


def _flip_rotation(axis: np.ndarray) -> np.ndarray:
    """Rotation matrix for a half turn about a unit axis: 2 u u^T - I."""
    u = axis / np.linalg.norm(axis)
    return 2.0 * np.outer(u, u) - np.eye(3)


def estimate_pose_and_scale(
    observed: FeatureCloud, category: ObjectCategory | None = None
) -> tuple[Pose, CategoryMap, bool]:
    """Estimate world pose, uniform category map, and whether a flip was applied.

    The returned pose and map satisfy observed_i ~ pose.apply(canonical_i /
    s). The uniform scale is the mean of the square-rooted canonical to
    observed moment ratios.

    Raises DegenerateCloud for fewer than 4 points, collinear clouds, or a
    top-two moment ratio under 1.05 (ambiguous principal axis); callers may
    then fall back to fit_orthogonal with several initializations.
    """
    if category is not None and category is not observed.category:
        observed = FeatureCloud(category, observed.ids, observed.points)
    obs, canon = matched_points(observed)
    if obs.shape[0] < 4:
        raise DegenerateCloud("moments estimator needs at least 4 points")

    frame_obs = moment_frame(obs)
    frame_can = moment_frame(canon)
    if frame_obs.moments[1] < 1e-12 * max(frame_obs.moments[0], 1e-300):
        raise DegenerateCloud("observed points are collinear")
    for fr, label in ((frame_obs, "observed"), (frame_can, "canonical")):
        if fr.moments[0] < AXIS_AMBIGUITY_RATIO * fr.moments[1]:
            raise DegenerateCloud(f"{label} top-two moment ratio below {AXIS_AMBIGUITY_RATIO}; axes ambiguous")

    ratios = np.sqrt(frame_can.moments / np.maximum(frame_obs.moments, 1e-300))
    s = float(np.mean(ratios[np.isfinite(ratios)]))

    R0 = frame_obs.axes @ frame_can.axes.T

    def build_pose(R: np.ndarray) -> Pose:
        t = frame_obs.centroid - R @ (frame_can.centroid / s)
        return Pose(matrix_to_quat(R), t)

    # flip candidate: half turn about the shortest canonical moment axis,
    # which swaps the long-axis extremes
    flip = _flip_rotation(frame_can.axes[:, 2])
    pose0 = build_pose(R0)
    pose1 = build_pose(R0 @ flip)

    proj = (canon - frame_can.centroid) @ frame_can.axes[:, 0]
    extremes = [int(np.argmin(proj)), int(np.argmax(proj))]

    def extreme_error(p: Pose) -> float:
        pred = p.apply(canon[extremes] / s)
        return float(np.sum((obs[extremes] - pred) ** 2))

    err0, err1 = extreme_error(pose0), extreme_error(pose1)
    flipped = err1 < err0
    return (pose1 if flipped else pose0), CategoryMap.uniform(s), flipped
