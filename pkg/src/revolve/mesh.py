"""Surface-of-revolution meshes written as Wavefront OBJ text."""

from __future__ import annotations

import numpy as np

from .cloud import CANONICAL_AXIS, CANONICAL_ORIGIN, TWO_PI, from_polar
from .errors import DegenerateInputError, InvalidArgumentError
from .spline import ProfileCurve, sample_equidistant


def revolve_polyline(polyline, segments: int, axis_origin=CANONICAL_ORIGIN, axis_dir=CANONICAL_AXIS):
    """Revolve (M, 2) (rho, h) samples into a triangle surface.

    Returns (vertices (M * segments, 3), faces (F, 3) 0-based). On-axis
    samples still get one vertex per segment so the index layout stays
    regular; their triangles that collapse to a line are dropped.
    """
    if segments < 3:
        raise InvalidArgumentError("a revolved mesh needs at least 3 segments")
    prof = np.asarray(polyline, dtype=np.float64)
    if prof.ndim != 2 or prof.shape[1] != 2 or prof.shape[0] < 2:
        raise DegenerateInputError("profile needs at least two samples")
    if np.allclose(prof, prof[0]):
        raise DegenerateInputError("profile has zero length")
    m = prof.shape[0]
    theta = np.arange(segments) * (TWO_PI / segments)
    rho = np.repeat(prof[:, 0], segments)
    h = np.repeat(prof[:, 1], segments)
    verts = from_polar(rho, h, np.tile(theta, m), axis_origin, axis_dir)

    faces = []
    for i in range(m - 1):
        a0 = i * segments
        b0 = (i + 1) * segments
        for j in range(segments):
            j1 = (j + 1) % segments
            a, a1, b, b1 = a0 + j, a0 + j1, b0 + j, b0 + j1
            if prof[i, 0] > 0:
                faces.append((a, a1, b1))
            if prof[i + 1, 0] > 0:
                faces.append((a, b1, b))
    return verts, np.asarray(faces, dtype=np.int64).reshape(-1, 3)


def mesh_to_obj(vertices: np.ndarray, faces: np.ndarray) -> str:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces.tolist()]
    return "\n".join(lines) + "\n"


def export_mesh(profile: ProfileCurve, path, segments: int = 64, step: float = 1.0,
                axis_origin=CANONICAL_ORIGIN, axis_dir=CANONICAL_AXIS) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``profile`` every ``step`` mm, revolve it and write an OBJ file."""
    if segments < 3:
        raise InvalidArgumentError("a revolved mesh needs at least 3 segments")
    verts, faces = revolve_polyline(sample_equidistant(profile, step), segments, axis_origin, axis_dir)
    with open(path, "w") as fh:
        fh.write(mesh_to_obj(verts, faces))
    return verts, faces
