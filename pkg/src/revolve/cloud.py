"""Point-cloud container and polar coordinates around a revolution axis.

All lengths are millimetres. The canonical frame puts the turntable center at
the origin with the revolution axis along +y.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgumentError

TWO_PI = 2.0 * np.pi
CANONICAL_ORIGIN = np.zeros(3)
CANONICAL_AXIS = np.array([0.0, 1.0, 0.0])

_UNIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered set of finite 3D points tagged with the frame they live in."""

    points: np.ndarray
    frame_id: str = "canonical"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidArgumentError(f"points must have shape (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("point cloud contains non-finite coordinates")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)

    def subset(self, index) -> "PointCloud":
        return PointCloud(self.points[index], self.frame_id)

    def transformed(self, matrix: np.ndarray, frame_id: str | None = None) -> "PointCloud":
        """Apply a 4x4 homogeneous transform (column-vector convention)."""
        m = np.asarray(matrix, dtype=np.float64)
        pts = self.points @ m[:3, :3].T + m[:3, 3]
        return PointCloud(pts, self.frame_id if frame_id is None else frame_id)

    @classmethod
    def concatenate(cls, clouds: Sequence["PointCloud"], frame_id: str = "canonical") -> "PointCloud":
        if not clouds:
            return cls(np.empty((0, 3)), frame_id)
        return cls(np.concatenate([c.points for c in clouds], axis=0), frame_id)


class PolarPoint(NamedTuple):
    rho: float | np.ndarray
    h: float | np.ndarray
    theta: float | np.ndarray


def _unit_axis(axis_dir) -> np.ndarray:
    a = np.asarray(axis_dir, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(a)) or abs(np.linalg.norm(a) - 1.0) > _UNIT_TOL:
        raise InvalidArgumentError(f"axis direction must be a unit vector, got {a}")
    return a


def reference_frame(axis_dir) -> tuple[np.ndarray, np.ndarray]:
    """Return the (e1, e2) pair spanning the plane orthogonal to the axis.

    e1 is global +x with its axial component removed (global +z if the axis is
    along x); e2 = axis x e1, so theta grows right-handedly about the axis.
    """
    a = _unit_axis(axis_dir)
    ref = np.array([1.0, 0.0, 0.0])
    e1 = ref - (ref @ a) * a
    if np.linalg.norm(e1) < 1e-6:
        ref = np.array([0.0, 0.0, 1.0])
        e1 = ref - (ref @ a) * a
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return e1, e2


def to_polar(points, axis_origin=CANONICAL_ORIGIN, axis_dir=CANONICAL_AXIS) -> PolarPoint:
    """Convert points of shape (3,) or (N, 3) to (rho, h, theta).

    Points on the axis get theta = 0.
    """
    a = _unit_axis(axis_dir)
    e1, e2 = reference_frame(a)
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    d = p - np.asarray(axis_origin, dtype=np.float64)
    h = d @ a
    u = d @ e1
    v = d @ e2
    rho = np.hypot(u, v)
    theta = np.mod(np.arctan2(v, u), TWO_PI)
    theta[(theta >= TWO_PI) | (rho == 0.0)] = 0.0
    if single:
        return PolarPoint(float(rho[0]), float(h[0]), float(theta[0]))
    return PolarPoint(rho, h, theta)


def from_polar(rho, h, theta, axis_origin=CANONICAL_ORIGIN, axis_dir=CANONICAL_AXIS) -> np.ndarray:
    a = _unit_axis(axis_dir)
    e1, e2 = reference_frame(a)
    rho = np.asarray(rho, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    out = (
        np.asarray(axis_origin, dtype=np.float64)
        + h[..., None] * a
        + (rho * np.cos(theta))[..., None] * e1
        + (rho * np.sin(theta))[..., None] * e2
    )
    return out
