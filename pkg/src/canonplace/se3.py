"""Rigid-transform algebra and invertible pose encodings.

Poses are unit quaternions (w, x, y, z) plus translations in meters.
Quaternions are kept on the w >= 0 hemisphere so that encoded sample sets
are unimodal instead of double-covered. All array helpers broadcast over a
leading batch dimension; the scalar :class:`Pose` API wraps them.

Encodings lay out vectors as [translation, rotation-block]:

* ``quat``  -> [tx, ty, tz, qw, qx, qy, qz]   (k = 7)
* ``aa``    -> [tx, ty, tz, rx, ry, rz]        rotation vector, k = 6
* ``euler`` -> [tx, ty, tz, roll, pitch, yaw]  intrinsic XYZ, k = 6
* ``se3``   -> [rho_x, rho_y, rho_z, wx, wy, wz]  se(3) log coordinates, k = 6

The Euler convention is intrinsic XYZ (roll about x, pitch about the new y,
yaw about the newest z); pitch within 1e-6 of +-pi/2 raises GimbalLock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateQuaternion, GimbalLock

# Below this rotation angle the axis is numerically unrecoverable and the
# log/exp maps use their pure-translation / small-angle limits.
TINY_ANGLE = 1e-8
# The trigonometric coefficients of the se(3) V-matrix cancel catastrophically
# well above TINY_ANGLE; series expansions take over below this threshold.
_SERIES_ANGLE = 1e-3

_EULER_PITCH_GUARD = 1e-6


class EncodingKind(Enum):
    """Pose-vector encodings. MIX resolves to a concrete kind at fit time."""

    QUAT = "quat"
    AXIS_ANGLE = "aa"
    EULER = "euler"
    SE3_LOG = "se3"
    MIX = "mix"

    @property
    def dim(self) -> int:
        if self is EncodingKind.MIX:
            raise ValueError("MIX has no fixed dimension; resolve it first")
        return 7 if self is EncodingKind.QUAT else 6


#: Concrete encodings in the fixed tie-break order used by encoding selection.
CONCRETE_ENCODINGS = (
    EncodingKind.AXIS_ANGLE,
    EncodingKind.SE3_LOG,
    EncodingKind.EULER,
    EncodingKind.QUAT,
)


# ---------------------------------------------------------------------------
# quaternion array helpers (batch-friendly, w first)
# ---------------------------------------------------------------------------

def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm < 1e-6):
        raise DegenerateQuaternion("quaternion norm below 1e-6")
    # skip the division for already-unit input so serialization round trips
    # stay bit-exact; 1e-12 is far inside the 1e-9 norm invariant
    if np.all(np.abs(norm - 1.0) < 1e-12):
        return q
    return q / norm


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Flip quaternions onto the w >= 0 hemisphere.

    For w == 0 the first nonzero component is made positive so the
    canonical form stays deterministic.
    """
    q = np.array(q, dtype=float, copy=True)
    flat = q.reshape(-1, 4)
    for row in flat:
        if row[0] < 0.0:
            row *= -1.0
        elif row[0] == 0.0:
            for c in row[1:]:
                if c != 0.0:
                    if c < 0.0:
                        row *= -1.0
                    break
    return flat.reshape(q.shape)


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product, broadcasting over leading dimensions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vectors by unit quaternions: v' = q v q*."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    u = q[..., 1:]
    w = q[..., 0:1]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def rotvec_to_quat(rv: np.ndarray) -> np.ndarray:
    rv = np.asarray(rv, dtype=float)
    angle = np.linalg.norm(rv, axis=-1, keepdims=True)
    half = 0.5 * angle
    # sin(t/2)/t -> 1/2 - t^2/48 for small t
    small = angle < TINY_ANGLE
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(small, 0.5 - angle * angle / 48.0, np.sin(half) / np.where(small, 1.0, angle))
    w = np.cos(half)
    return np.concatenate([w, factor * rv], axis=-1)


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi]."""
    q = quat_canonical(np.asarray(q, dtype=float))
    vec = q[..., 1:]
    w = q[..., 0:1]
    sin_half = np.linalg.norm(vec, axis=-1, keepdims=True)
    angle = 2.0 * np.arctan2(sin_half, w)
    small = sin_half < TINY_ANGLE
    with np.errstate(invalid="ignore", divide="ignore"):
        # angle/sin(angle/2) -> 2/w * (1 + sin^2/ (6 w^2)) as sin -> 0
        safe_w = np.where(np.abs(w) < 1e-12, 1.0, w)
        factor = np.where(
            small,
            2.0 / safe_w * (1.0 + sin_half * sin_half / (6.0 * safe_w * safe_w)),
            angle / np.where(small, 1.0, sin_half),
        )
    return factor * vec


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(R: np.ndarray) -> np.ndarray:
    """Shepperd-style rotation matrix to quaternion conversion."""
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(R)))
        if i == 0:
            s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
            q = np.array(
                [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
            )
        elif i == 1:
            s = math.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2]) * 2.0
            q = np.array(
                [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
            )
        else:
            s = math.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2]) * 2.0
            q = np.array(
                [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
            )
    return quat_canonical(quat_normalize(q))


def euler_to_quat(angles: np.ndarray) -> np.ndarray:
    """Intrinsic XYZ angles (roll, pitch, yaw) to quaternion, batched."""
    angles = np.asarray(angles, dtype=float)
    half = 0.5 * angles
    cr, cp, cy = np.cos(half[..., 0]), np.cos(half[..., 1]), np.cos(half[..., 2])
    sr, sp, sy = np.sin(half[..., 0]), np.sin(half[..., 1]), np.sin(half[..., 2])
    # q = qx(roll) * qy(pitch) * qz(yaw)
    return np.stack(
        [
            cr * cp * cy - sr * sp * sy,
            sr * cp * cy + cr * sp * sy,
            cr * sp * cy - sr * cp * sy,
            cr * cp * sy + sr * sp * cy,
        ],
        axis=-1,
    )


def quat_to_euler(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Intrinsic XYZ angles of unit quaternions.

    Returns (angles, valid). Entries with |pitch| within 1e-6 of pi/2 are
    flagged invalid; their angle rows are filled with the singular limit
    (roll = 0) so callers can mask rather than crash.
    """
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    # rotation matrix entries needed for intrinsic XYZ extraction
    r02 = 2.0 * (x * z + w * y)
    r12 = 2.0 * (y * z - w * x)
    r22 = 1.0 - 2.0 * (x * x + y * y)
    r01 = 2.0 * (x * y - w * z)
    r00 = 1.0 - 2.0 * (y * y + z * z)
    s = np.clip(r02, -1.0, 1.0)
    pitch = np.arcsin(s)
    valid = np.abs(np.abs(pitch) - 0.5 * np.pi) >= _EULER_PITCH_GUARD
    roll = np.where(valid, np.arctan2(-r12, r22), 0.0)
    # In the singular limit only roll +- yaw is determined; pin roll = 0.
    r10 = 2.0 * (x * y + w * z)
    r11 = 1.0 - 2.0 * (x * x + z * z)
    yaw = np.where(valid, np.arctan2(-r01, r00), np.arctan2(r10, r11))
    return np.stack([roll, pitch, yaw], axis=-1), valid


def _v_coefficients(angle: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (a, b) of V = I + a*hat(w) + b*hat(w)^2 for se(3) exp."""
    small = angle < _SERIES_ANGLE
    t2 = angle * angle
    safe = np.where(small, 1.0, angle)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(safe)) / (safe * safe))
        b = np.where(small, 1.0 / 6.0 - t2 / 120.0, (safe - np.sin(safe)) / (safe * safe * safe))
    return a, b


def _v_inv_coefficient(angle: np.ndarray) -> np.ndarray:
    """Coefficient c of V^-1 = I - hat(w)/2 + c*hat(w)^2."""
    small = angle < _SERIES_ANGLE
    t2 = angle * angle
    safe = np.where(small, 1.0, angle)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(
            small,
            1.0 / 12.0 + t2 / 720.0,
            (1.0 - 0.5 * safe * np.sin(safe) / (1.0 - np.cos(safe))) / (safe * safe),
        )
    return c


def se3_exp(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """se(3) exponential: 6-vectors [rho, omega] -> (quat, translation)."""
    v = np.asarray(v, dtype=float)
    rho = v[..., :3]
    omega = v[..., 3:]
    angle = np.linalg.norm(omega, axis=-1, keepdims=True)
    a, b = _v_coefficients(angle)
    wxr = np.cross(omega, rho)
    t = rho + a * wxr + b * np.cross(omega, wxr)
    return rotvec_to_quat(omega), t


def se3_log(q: np.ndarray, t: np.ndarray) -> np.ndarray:
    """se(3) logarithm: pose -> 6-vector [rho, omega].

    Falls back to the pure-translation limit (rho = t) for rotation angles
    below TINY_ANGLE without producing NaN.
    """
    omega = quat_to_rotvec(q)
    t = np.asarray(t, dtype=float)
    angle = np.linalg.norm(omega, axis=-1, keepdims=True)
    c = _v_inv_coefficient(angle)
    wxt = np.cross(omega, t)
    rho = t - 0.5 * wxt + c * np.cross(omega, wxt)
    return np.concatenate([rho, omega], axis=-1)


def random_unit_quaternion(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform random rotations, hemisphere-canonicalized."""
    n = 1 if size is None else size
    q = rng.standard_normal((n, 4))
    q = quat_canonical(q / np.linalg.norm(q, axis=-1, keepdims=True))
    return q[0] if size is None else q


# ---------------------------------------------------------------------------
# scalar pose API
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: unit quaternion (w, x, y, z) plus translation in meters.

    The quaternion is normalized and flipped to w >= 0 at construction, so
    equal rotations always compare equal componentwise.
    """

    quat: np.ndarray
    trans: np.ndarray

    def __post_init__(self):
        q = quat_canonical(quat_normalize(np.asarray(self.quat, dtype=float).reshape(4)))
        t = np.asarray(self.trans, dtype=float).reshape(3).copy()
        q.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "quat", q)
        object.__setattr__(self, "trans", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @staticmethod
    def from_matrix(R: np.ndarray, t: np.ndarray) -> "Pose":
        return Pose(matrix_to_quat(R), t)

    @staticmethod
    def from_rotvec(rv: np.ndarray, t: np.ndarray) -> "Pose":
        return Pose(rotvec_to_quat(np.asarray(rv, dtype=float)), t)

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.quat)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one point or an (n, 3) array of points."""
        return quat_rotate(self.quat, np.asarray(points, dtype=float)) + self.trans

    def compose(self, other: "Pose") -> "Pose":
        return compose(self, other)

    def inverse(self) -> "Pose":
        return invert(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.quat, other.quat) and np.array_equal(self.trans, other.trans)

    def __repr__(self) -> str:
        return f"Pose(quat={np.round(self.quat, 6).tolist()}, trans={np.round(self.trans, 6).tolist()})"


@dataclass(frozen=True)
class PoseVector:
    """Encoded pose: concrete encoding kind plus its value vector."""

    encoding: EncodingKind
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.shape[0] != self.encoding.dim:
            raise ValueError(f"{self.encoding.value} encoding expects length {self.encoding.dim}, got {v.shape[0]}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def compose(a: Pose, b: Pose) -> Pose:
    """Chained transform a then b applied in a's frame: result = a o b."""
    q = quat_mul(a.quat, b.quat)
    t = a.trans + quat_rotate(a.quat, b.trans)
    return Pose(q, t)


def invert(p: Pose) -> Pose:
    qc = quat_conj(p.quat)
    return Pose(qc, -quat_rotate(qc, p.trans))


def random_pose(rng: np.random.Generator, trans_scale: float = 1.0) -> Pose:
    return Pose(random_unit_quaternion(rng), rng.uniform(-trans_scale, trans_scale, 3))


# ---------------------------------------------------------------------------
# encode / decode
# ---------------------------------------------------------------------------

def encode_batch(quats: np.ndarray, trans: np.ndarray, enc: EncodingKind) -> tuple[np.ndarray, np.ndarray]:
    """Encode (n, 4) quaternions and (n, 3) translations into (n, k) vectors.

    Returns (vectors, valid). Only the Euler encoding can flag samples
    invalid; their rows still carry the singular-limit angles.
    """
    quats = np.asarray(quats, dtype=float)
    trans = np.asarray(trans, dtype=float)
    n = quats.shape[0]
    valid = np.ones(n, dtype=bool)
    if enc is EncodingKind.QUAT:
        vec = np.concatenate([trans, quat_canonical(quats)], axis=-1)
    elif enc is EncodingKind.AXIS_ANGLE:
        vec = np.concatenate([trans, quat_to_rotvec(quats)], axis=-1)
    elif enc is EncodingKind.EULER:
        angles, valid = quat_to_euler(quats)
        vec = np.concatenate([trans, angles], axis=-1)
    elif enc is EncodingKind.SE3_LOG:
        vec = se3_log(quats, trans)
    else:
        raise ValueError("MIX cannot be encoded directly; resolve it first")
    return vec, valid


def decode_batch(values: np.ndarray, enc: EncodingKind) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`encode_batch`; returns ((n, 4) quats, (n, 3) trans)."""
    values = np.asarray(values, dtype=float)
    if enc is EncodingKind.QUAT:
        q = values[..., 3:7]
        norm = np.linalg.norm(q, axis=-1, keepdims=True)
        if np.any(norm < 1e-6):
            raise DegenerateQuaternion("quat encoding carries a near-zero rotation block")
        return quat_canonical(q / norm), values[..., :3].copy()
    if enc is EncodingKind.AXIS_ANGLE:
        return rotvec_to_quat(values[..., 3:]), values[..., :3].copy()
    if enc is EncodingKind.EULER:
        return euler_to_quat(values[..., 3:]), values[..., :3].copy()
    if enc is EncodingKind.SE3_LOG:
        return se3_exp(values)
    raise ValueError("MIX cannot be decoded")


def encode(p: Pose, enc: EncodingKind) -> PoseVector:
    """Encode a pose; raises GimbalLock for Euler near singular pitch."""
    vec, valid = encode_batch(p.quat[None, :], p.trans[None, :], enc)
    if not valid[0]:
        raise GimbalLock("pitch within 1e-6 of +-pi/2; Euler encoding unusable here")
    return PoseVector(enc, vec[0])


def decode(v: PoseVector) -> Pose:
    q, t = decode_batch(v.values[None, :], v.encoding)
    return Pose(q[0], t[0])


def geodesic_angle_deg(a: Pose, b: Pose) -> float:
    """Rotation angle between two poses in degrees, in [0, 180].

    Computed from the relative quaternion via atan2, which stays accurate
    for tiny angles where the acos-of-dot-product form loses digits.
    """
    rel = quat_mul(quat_conj(a.quat), b.quat)
    sin_half = float(np.linalg.norm(rel[1:]))
    cos_half = abs(float(rel[0]))
    return math.degrees(2.0 * math.atan2(sin_half, cos_half))


def pose_to_dict(p: Pose) -> dict:
    """Serialization form used in dataset and model files."""
    return {"translation": p.trans.tolist(), "quaternion": p.quat.tolist()}


def pose_from_dict(d: dict) -> Pose:
    return Pose(np.asarray(d["quaternion"], dtype=float), np.asarray(d["translation"], dtype=float))
