"""On-disk formats: PLY point clouds in, CSV / text grid / JSON lines out.

Layout of a sensor input: one directory per sensor, one ``.ply`` file per
frame, frames taken in lexicographic file-name order.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from plyfile import PlyData, PlyElement, PlyParseError

from .cloud import PointCloud
from .errors import InputError
from .spline import ProfileCurve

PROFILE_COLUMNS = ("rho_mm", "h_mm")
METRIC_FIELDS = ("frame", "ae_mm", "hd_mm", "runtime_ms")


def read_ply(path, frame_id: str = "sensor") -> PointCloud:
    path = Path(path)
    try:
        ply = PlyData.read(str(path))
        v = ply["vertex"]
        pts = np.column_stack([np.asarray(v[c], dtype=np.float64) for c in ("x", "y", "z")])
    except (OSError, KeyError, ValueError, PlyParseError) as e:
        raise InputError(f"cannot read point cloud {path}: {e}") from e
    if pts.size == 0:
        pts = np.empty((0, 3))
    if not np.all(np.isfinite(pts)):
        raise InputError(f"non-finite coordinates in {path}")
    return PointCloud(pts, frame_id=frame_id)


def write_ply(path, cloud: PointCloud | np.ndarray, binary: bool = True) -> None:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    vert = np.empty(pts.shape[0], dtype=[("x", "<f8"), ("y", "<f8"), ("z", "<f8")])
    vert["x"], vert["y"], vert["z"] = pts[:, 0], pts[:, 1], pts[:, 2]
    el = PlyElement.describe(vert, "vertex")
    PlyData([el], text=not binary, byte_order="<").write(str(path))


def list_frames(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise InputError(f"sensor directory {d} does not exist")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".ply")
    if not files:
        raise InputError(f"no .ply frames in {d}")
    return files


class SensorSequence:
    """Lazily reads the frames of several sensor directories in lockstep."""

    def __init__(self, directories: Sequence):
        self.directories = [Path(d) for d in directories]
        self.files = [list_frames(d) for d in self.directories]
        self.n_frames = min(len(f) for f in self.files)

    def __len__(self) -> int:
        return self.n_frames

    def __call__(self, t: int) -> list[PointCloud]:
        if not 0 <= t < self.n_frames:
            raise IndexError(t)
        return [read_ply(f[t], frame_id=f"sensor{i}") for i, f in enumerate(self.files)]


def write_profile_csv(path, points) -> None:
    """Rows of (rho_mm, h_mm): the three free knots or a sampled polyline."""
    pts = points.knots if isinstance(points, ProfileCurve) else np.asarray(points, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_COLUMNS)
        for rho, h in pts:
            w.writerow((repr(float(rho)), repr(float(h))))


def read_profile_csv(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise InputError(f"cannot read profile {path}: {e}") from e
    if not rows or tuple(rows[0]) != PROFILE_COLUMNS:
        raise InputError(f"{path}: expected header {','.join(PROFILE_COLUMNS)}")
    try:
        return np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=np.float64).reshape(-1, 2)
    except ValueError as e:
        raise InputError(f"{path}: {e}") from e


def read_knots_csv(path) -> ProfileCurve:
    k = read_profile_csv(path)
    if k.shape != (3, 2):
        raise InputError(f"{path}: expected 3 knots, got {k.shape[0]}")
    return ProfileCurve(k)


class TruthSequence:
    """Ground-truth knots, one CSV per frame in lexicographic order."""

    def __init__(self, directory):
        d = Path(directory)
        if not d.is_dir():
            raise InputError(f"ground-truth directory {d} does not exist")
        self.files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".csv")
        self._cache: dict[int, ProfileCurve] = {}

    def __len__(self) -> int:
        return len(self.files)

    def __call__(self, t: int) -> ProfileCurve:
        if t not in self._cache:
            self._cache[t] = read_knots_csv(self.files[t])
        return self._cache[t]


def metric_record(frame: int, ae_mm, hd_mm, runtime_ms) -> dict:
    f = lambda v: None if v is None else float(v)
    return {"frame": int(frame), "ae_mm": f(ae_mm), "hd_mm": f(hd_mm), "runtime_ms": f(runtime_ms)}


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=False) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def frame_name(t: int, suffix: str) -> str:
    return f"frame_{t:05d}{suffix}"


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
