"""Frames, rigid transforms and the pinhole projection chain.

Conventions
-----------
- Quaternions are stored as ``(x, y, z, w)`` everywhere, including files.
- Camera frame (robot style): x forward, y left, z up.
- Sensor/optical frame: z forward, x right, y down.
- A :class:`Pose` maps camera coordinates into the world frame
  (``p_world = R @ p_cam + t``).
- Image frame: origin top-left, u right, v down, in pixels.

Vectorised helpers accept arrays of shape ``(..., 3)``.  They are written
as plain element-wise arithmetic (no BLAS calls) so that the value computed
for one point never depends on how many other points are in the batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import BehindCamera, InvalidFov, ValidationError


@dataclass(frozen=True)
class Quaternion:
    x: float
    y: float
    z: float
    w: float

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(0.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_xyzw(cls, q: Sequence[float]) -> "Quaternion":
        """Build from a 4-sequence and normalise; rejects zero or non-finite input."""
        arr = np.asarray(q, dtype=float)
        if arr.shape != (4,) or not np.all(np.isfinite(arr)):
            raise ValidationError("quaternion_xyzw", "expected 4 finite numbers")
        n = float(np.sqrt(np.sum(arr * arr)))
        if n < 1e-12:
            raise ValidationError("quaternion_xyzw", "zero-norm quaternion")
        # already-unit input is kept bit-exact so save/load round trips are stable
        if abs(n - 1.0) > 4 * np.finfo(float).eps:
            arr = arr / n
        return cls(*(float(c) for c in arr))

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle_rad: float) -> "Quaternion":
        a = np.asarray(axis, dtype=float)
        a = a / np.linalg.norm(a)
        s = math.sin(0.5 * angle_rad)
        return cls(a[0] * s, a[1] * s, a[2] * s, math.cos(0.5 * angle_rad))

    @classmethod
    def from_matrix(cls, m) -> "Quaternion":
        """Rotation matrix to quaternion (Shepperd's branch selection)."""
        m = np.asarray(m, dtype=float)
        tr = m[0, 0] + m[1, 1] + m[2, 2]
        if tr > 0.0:
            s = 2.0 * math.sqrt(tr + 1.0)
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] > m[2, 2]:
            s = 2.0 * math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2])
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = 2.0 * math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1])
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        return cls.from_xyzw((x, y, z, w))

    def as_xyzw(self) -> Tuple[float, float, float, float]:
        return (self.x, self.y, self.z, self.w)

    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2 + self.w**2)

    def conjugate(self) -> "Quaternion":
        return Quaternion(-self.x, -self.y, -self.z, self.w)

    def to_matrix(self) -> np.ndarray:
        x, y, z, w = self.x, self.y, self.z, self.w
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
                [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
                [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
            ]
        )


# Orientation of the optical frame expressed in the camera frame.
SENSOR_IN_CAMERA = Quaternion(-0.5, 0.5, -0.5, 0.5)


@dataclass(frozen=True)
class Pose:
    """Camera placement in the world frame (world <- camera)."""

    translation: Tuple[float, float, float]
    rotation: Quaternion

    def __post_init__(self):
        t = tuple(float(c) for c in self.translation)
        if len(t) != 3 or not all(math.isfinite(c) for c in t):
            raise ValidationError("translation_m", "expected 3 finite numbers")
        object.__setattr__(self, "translation", t)
        if abs(self.rotation.norm() - 1.0) > 1e-9:
            object.__setattr__(self, "rotation", Quaternion.from_xyzw(self.rotation.as_xyzw()))

    @classmethod
    def identity(cls) -> "Pose":
        return cls((0.0, 0.0, 0.0), Quaternion.identity())

    @property
    def matrix(self) -> np.ndarray:
        return self.rotation.to_matrix()

    @property
    def position(self) -> np.ndarray:
        return np.array(self.translation)

    def forward(self) -> np.ndarray:
        """World direction of the camera's +x (viewing) axis."""
        return self.matrix[:, 0].copy()


def look_at(position, target, up=(0.0, 0.0, 1.0)) -> Pose:
    """Pose at ``position`` whose forward (+x) axis points at ``target``."""
    p = np.asarray(position, dtype=float)
    fwd = np.asarray(target, dtype=float) - p
    fwd /= np.linalg.norm(fwd)
    left = np.cross(np.asarray(up, dtype=float), fwd)
    if np.linalg.norm(left) < 1e-9:
        raise ValueError("up vector is parallel to the viewing direction")
    left /= np.linalg.norm(left)
    upv = np.cross(fwd, left)
    rot = np.column_stack([fwd, left, upv])
    return Pose(tuple(p), Quaternion.from_matrix(rot))


def _apply(m: np.ndarray, p: np.ndarray) -> np.ndarray:
    # explicit 3x3 product; keeps per-point results independent of batch size
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    out = np.empty(np.broadcast(x, y, z).shape + (3,))
    out[..., 0] = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
    out[..., 1] = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
    out[..., 2] = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
    return out


def world_to_camera(p, pose: Pose) -> np.ndarray:
    """Express world points in the camera frame: ``R^T (p - t)``."""
    p = np.asarray(p, dtype=float)
    d = p - np.asarray(pose.translation)
    return _apply(pose.matrix.T, d)


def camera_to_world(p, pose: Pose) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return _apply(pose.matrix, p) + np.asarray(pose.translation)


def camera_to_sensor(p) -> np.ndarray:
    """Camera (x fwd, y left, z up) to optical frame: ``(-y, -z, x)``.

    This is the inverse of the rotation :data:`SENSOR_IN_CAMERA`; the
    components are permuted directly, so the result is exact.
    """
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape)
    out[..., 0] = -p[..., 1]
    out[..., 1] = -p[..., 2]
    out[..., 2] = p[..., 0]
    return out


def sensor_to_camera(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape)
    out[..., 0] = p[..., 2]
    out[..., 1] = -p[..., 0]
    out[..., 2] = -p[..., 1]
    return out


def focal_from_hfov(width: float, hfov_deg: float) -> float:
    if not (0.0 < hfov_deg < 180.0):
        raise InvalidFov(f"hfov must lie in (0, 180) degrees, got {hfov_deg}")
    return 0.5 * width / math.tan(0.5 * hfov_deg * math.pi / 180.0)


@dataclass(frozen=True)
class CameraModel:
    """Ideal pinhole camera; principal point defaults to the image centre."""

    width: int
    height: int
    hfov_deg: float
    cx: Optional[float] = None
    cy: Optional[float] = None

    def __post_init__(self):
        if int(self.width) != self.width or self.width < 1:
            raise ValidationError("camera.width", "must be an integer >= 1")
        if int(self.height) != self.height or self.height < 1:
            raise ValidationError("camera.height", "must be an integer >= 1")
        if not (0.0 < self.hfov_deg < 180.0):
            raise ValidationError("camera.hfov_deg", "must lie in (0, 180)")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def focal(self) -> float:
        return focal_from_hfov(self.width, self.hfov_deg)

    @property
    def principal_point(self) -> Tuple[float, float]:
        cx = self.width / 2 if self.cx is None else self.cx
        cy = self.height / 2 if self.cy is None else self.cy
        return cx, cy

    def intrinsics(self) -> np.ndarray:
        cx, cy = self.principal_point
        f = self.focal
        return np.array([[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]])

    def in_image(self, u, v):
        """Closed-rectangle test ``0 <= u <= w`` and ``0 <= v <= h``."""
        return (u >= 0) & (u <= self.width) & (v >= 0) & (v <= self.height)


def project(p, cam: CameraModel) -> Tuple[float, float]:
    """Project one sensor-frame point to pixel coordinates."""
    x, y, z = (float(c) for c in p)
    if not z > 0.0:
        raise BehindCamera(f"point has non-positive depth z={z}")
    f = cam.focal
    cx, cy = cam.principal_point
    return f * (x / z) + cx, f * (y / z) + cy


def project_points(p, cam: CameraModel):
    """Vectorised :func:`project`.

    Returns ``(u, v, in_front)``; ``u``/``v`` are NaN where the depth is not
    positive.
    """
    p = np.asarray(p, dtype=float)
    z = p[..., 2]
    in_front = z > 0.0
    safe_z = np.where(in_front, z, np.nan)
    f = cam.focal
    cx, cy = cam.principal_point
    u = f * (p[..., 0] / safe_z) + cx
    v = f * (p[..., 1] / safe_z) + cy
    return u, v, in_front


def world_to_pixels(points, pose: Pose, cam: CameraModel):
    """Full chain world -> camera -> sensor -> image for an array of points."""
    return project_points(camera_to_sensor(world_to_camera(points, pose)), cam)
