import numpy as np
import pytest

from canonplace.dataset import canonical_box_points
from canonplace.maps import FeatureCloud, ObjectCategory
from canonplace.se3 import Pose


def box_category(name="widget", extents=(1.0, 0.6, 0.3), symmetry=None) -> ObjectCategory:
    """12-point category: 8 box corners plus 4 asymmetric interior markers."""
    return ObjectCategory(name, tuple(range(12)), canonical_box_points(extents), symmetry=symmetry)


def instance_cloud(category: ObjectCategory, pose: Pose, instance_scales, noise=0.0, rng=None) -> FeatureCloud:
    """Observed cloud: canonical points scaled per axis, then rigidly moved."""
    pts = pose.apply(category.points * np.asarray(instance_scales, dtype=float))
    if noise > 0.0:
        pts = pts + rng.normal(0.0, noise, pts.shape)
    return FeatureCloud(category, category.ids, pts)


@pytest.fixture
def widget():
    return box_category()
