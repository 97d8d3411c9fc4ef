"""Gaussian models over encoded relative poses, entropy-based encoding choice.

Relative poses between a reference and a placed object are canonicalized by
the frame-owning object's category map, encoded into a vector space, and
fitted with a multivariate normal. Entropy comparisons across encodings use
the per-dimension value H/k, which removes the k-dependence of the
(2*pi*e)^k term when 6- and 7-dimensional encodings compete.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, GimbalLock, InsufficientScenes, MissingObject, NoViableEncoding
from .maps import canonicalize_relative_pose
from .scene import SceneState
from .se3 import CONCRETE_ENCODINGS, EncodingKind, Pose, compose, encode_batch, invert

LOG_2PI = math.log(2.0 * math.pi)

# Relative ridge on the sample covariance; with 5 samples in 6-7 dimensions
# the raw covariance is singular, and the ridge keeps densities finite and
# entropies comparable without distorting well-spread data.
RIDGE_RELATIVE = 1e-6
RIDGE_FLOOR = 1e-12


class Direction(Enum):
    REFERENCE_TO_PLACED = "ref_to_placed"
    PLACED_TO_REFERENCE = "placed_to_ref"


@dataclass(frozen=True)
class GaussianModel:
    """Multivariate normal with a cached Cholesky factorization."""

    mean: np.ndarray
    covariance: np.ndarray = field(repr=False)
    ridge: float = 0.0

    _chol: np.ndarray = field(init=False, repr=False, compare=False)
    _chol_inv: np.ndarray = field(init=False, repr=False, compare=False)
    _log_det: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1).copy()
        cov = np.asarray(self.covariance, dtype=float)
        k = mean.shape[0]
        cov = cov.reshape(k, k).copy()
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValueError("covariance not symmetric within 1e-12")
        cov = 0.5 * (cov + cov.T)
        chol = np.linalg.cholesky(cov)  # raises LinAlgError if not PD
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_chol_inv", np.linalg.inv(chol))
        object.__setattr__(self, "_log_det", 2.0 * float(np.sum(np.log(np.diag(chol)))))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self._chol.T


def fit_gaussian(samples) -> GaussianModel:
    """Sample mean and (n-1)-normalized covariance plus a relative ridge.

    ridge = max(1e-6 * trace / k, 1e-12), which guarantees a positive
    definite covariance even for fewer samples than dimensions.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 samples of uniform dimension")
    k = x.shape[1]
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (x.shape[0] - 1)
    ridge = max(RIDGE_RELATIVE * float(np.trace(cov)) / k, RIDGE_FLOOR)
    return GaussianModel(mean, cov + ridge * np.eye(k), ridge=ridge)


def log_density(model: GaussianModel, v) -> float | np.ndarray:
    """Multivariate normal log-pdf at one vector or a stack of vectors."""
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    if v.shape[-1] != model.dim:
        raise DimensionMismatch(f"expected dimension {model.dim}, got {v.shape[-1]}")
    z = (v - model.mean) @ model._chol_inv.T
    quad = np.sum(z * z, axis=-1)
    out = -0.5 * (model.dim * LOG_2PI + model._log_det + quad)
    return float(out) if single else out


def entropy(model: GaussianModel) -> float:
    """Differential entropy 0.5 * ln((2*pi*e)^k * det(cov)) in nats."""
    return 0.5 * (model.dim * (1.0 + LOG_2PI) + model._log_det)


def encode_pose_set(poses: list[Pose], enc: EncodingKind) -> tuple[np.ndarray, np.ndarray]:
    """Encode a sample set jointly; returns (vectors, valid mask).

    For the quaternion encoding all samples are hemisphere-aligned to the
    first one so a cluster straddling w = 0 stays unimodal.
    """
    quats = np.stack([p.quat for p in poses])
    trans = np.stack([p.trans for p in poses])
    vecs, valid = encode_batch(quats, trans, enc)
    if enc is EncodingKind.QUAT and len(poses) > 1:
        flip = vecs[:, 3:7] @ vecs[0, 3:7] < 0.0
        vecs[flip, 3:7] *= -1.0
    return vecs, valid


def select_encoding(
    rel_poses: list[Pose],
    candidates: tuple[EncodingKind, ...] = CONCRETE_ENCODINGS,
) -> EncodingKind:
    """Pick the encoding whose fitted Gaussian has minimal per-dimension entropy.

    Candidates that hit the Euler singularity are skipped. Scores within
    1e-9 of the minimum count as tied and resolve in the fixed order
    AxisAngle, Se3Log, Euler, Quat.
    """
    if len(rel_poses) < 2:
        raise ValueError("need at least 2 poses to select an encoding")
    if not candidates or EncodingKind.MIX in candidates:
        raise ValueError("candidates must be non-empty concrete encodings")
    scores: dict[EncodingKind, float] = {}
    for enc in candidates:
        vecs, valid = encode_pose_set(rel_poses, enc)
        if not np.all(valid):
            continue
        model = fit_gaussian(vecs)
        scores[enc] = entropy(model) / model.dim
    if not scores:
        raise NoViableEncoding("all candidate encodings degenerate on this sample set")
    best = min(scores.values())
    tied = [enc for enc, s in scores.items() if s <= best + 1e-9]
    return min(tied, key=CONCRETE_ENCODINGS.index)


@dataclass(frozen=True)
class RelativePoseDistribution:
    """Fitted Gaussian over encoded relative poses of one object pair."""

    reference_category: str
    placed_category: str
    direction: Direction
    encoding: EncodingKind
    gaussian: GaussianModel
    sample_count: int

    def __post_init__(self):
        if self.encoding is EncodingKind.MIX:
            raise ValueError("stored distributions must carry a resolved encoding")
        if self.sample_count < 2:
            raise ValueError("sample_count must be >= 2")


def relative_pose(scene: SceneState, reference: str, placed: str, direction: Direction) -> Pose:
    """Canonicalized relative pose of one pair in one scene.

    Forward (reference -> placed) expresses the placed object in the
    reference frame and scales with the reference object's map; the
    reverse direction swaps the roles and uses the placed object's map.
    """
    ref = scene.get(reference)
    plc = scene.get(placed)
    if direction is Direction.REFERENCE_TO_PLACED:
        rel = compose(invert(ref.pose), plc.pose)
        return canonicalize_relative_pose(ref.map, rel)
    rel = compose(invert(plc.pose), ref.pose)
    return canonicalize_relative_pose(plc.map, rel)


def fit_pairwise(
    scenes: list[SceneState],
    reference: str,
    placed: str,
    direction: Direction,
    encoding: EncodingKind,
) -> RelativePoseDistribution:
    """Fit the Gaussian of one (reference, placed, direction) triple.

    MIX resolves once per triple via :func:`select_encoding`; an explicitly
    requested Euler encoding propagates GimbalLock if any sample is
    singular.
    """
    if len(scenes) < 2:
        raise InsufficientScenes("pairwise fitting needs at least 2 scenes")
    for scene in scenes:
        if reference not in scene or placed not in scene:
            raise MissingObject(f"pair ({reference!r}, {placed!r}) missing from a training scene")
    rels = [relative_pose(s, reference, placed, direction) for s in scenes]
    enc = select_encoding(rels) if encoding is EncodingKind.MIX else encoding
    vecs, valid = encode_pose_set(rels, enc)
    if not np.all(valid):
        raise GimbalLock(f"{enc.value} encoding singular on a training sample")
    ref_cat = scenes[0].get(reference).category.name
    plc_cat = scenes[0].get(placed).category.name
    return RelativePoseDistribution(
        reference_category=ref_cat,
        placed_category=plc_cat,
        direction=direction,
        encoding=enc,
        gaussian=fit_gaussian(vecs),
        sample_count=len(rels),
    )
