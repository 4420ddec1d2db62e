"""Rigid registration of each sensor into the canonical turntable frame.

Transforms use the column-vector convention p' = R p + t. The per-sensor
registration applies the turntable alignment U first and the axial rotation
V second, i.e. M = V @ U (the row-vector product U.V written the other way).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cloud import CANONICAL_AXIS, CANONICAL_ORIGIN, PointCloud
from .errors import InvalidArgumentError
from .turntable import TurntableModel

_ORTHO_TOL = 1e-9


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis (right-handed)."""
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


@dataclass(frozen=True, eq=False)
class RigidTransform:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise InvalidArgumentError("rigid transform must be 4x4")
        r = m[:3, :3]
        if not np.allclose(r.T @ r, np.eye(3), atol=_ORTHO_TOL, rtol=0) or np.linalg.det(r) <= 0:
            raise InvalidArgumentError("rotation block is not a proper rotation")
        if not np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0]):
            raise InvalidArgumentError("last row must be (0, 0, 0, 1)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(4))

    @classmethod
    def from_parts(cls, rotation, translation) -> "RigidTransform":
        m = np.eye(4)
        m[:3, :3] = rotation
        m[:3, 3] = translation
        return cls(m)

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(self.matrix @ other.matrix)

    def inverse(self) -> "RigidTransform":
        r = self.rotation
        return RigidTransform.from_parts(r.T, -r.T @ self.translation)

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation


def align_to_canonical(table: TurntableModel) -> RigidTransform:
    """U: maps the plate center to the origin and the plate normal to +y."""
    n = table.normal / np.linalg.norm(table.normal)
    axis = np.cross(n, CANONICAL_AXIS)
    s = np.linalg.norm(axis)
    c = float(n @ CANONICAL_AXIS)
    if s < 1e-12:
        if c > 0:
            rot = np.eye(3)
        else:
            rot = rotation_matrix([1.0, 0.0, 0.0], np.pi)
    else:
        rot = rotation_matrix(axis / s, np.arctan2(s, c))
    t = CANONICAL_ORIGIN - rot @ table.center
    return RigidTransform.from_parts(rot, t)


def axial_rotation(phi: float) -> RigidTransform:
    """V: rotation by ``phi`` about the canonical axis, no translation."""
    return RigidTransform.from_parts(rotation_matrix(CANONICAL_AXIS, phi), np.zeros(3))


def registration_matrix(table: TurntableModel, phi: float) -> RigidTransform:
    return axial_rotation(phi) @ align_to_canonical(table)


def default_phis(n_sensors: int) -> list[float]:
    return [2.0 * np.pi * i / n_sensors for i in range(n_sensors)]


def merge_registered(clouds: Sequence[PointCloud], transforms: Sequence[RigidTransform]) -> PointCloud:
    """Concatenate every cloud mapped into the canonical frame, in sensor order."""
    if len(clouds) != len(transforms):
        raise InvalidArgumentError(
            f"got {len(clouds)} clouds but {len(transforms)} transforms"
        )
    parts = [PointCloud(m.apply(c.points)) if len(c) else PointCloud(np.empty((0, 3))) for c, m in zip(clouds, transforms)]
    return PointCloud.concatenate(parts, frame_id="canonical")
