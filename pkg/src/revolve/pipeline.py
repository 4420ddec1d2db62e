"""End-to-end reconstruction: turntable lock, registration, then per frame
merge -> accumulator -> particle filter step -> best profile."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .accumulator import RadialAccumulator, build_accumulator
from .cloud import PointCloud, to_polar
from .metrics import profile_errors
from .particles import FilterConfig, ParticleFilter
from .registration import RigidTransform, default_phis, merge_registered, registration_matrix
from .spline import ProfileCurve
from .turntable import PlaneFitConfig, SensorIntrinsics, TurntableDetection, detect_turntable_stable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    radius: float = 160.0
    cell: float = 10.0
    h_max: float | None = None
    enhanced: bool = True
    filter: FilterConfig = FilterConfig()
    plane: PlaneFitConfig = PlaneFitConfig()
    sigma_c: float = 5.0
    max_normal_angle_deg: float = 2.0
    kernel_bandwidth: float | None = None
    convergence_eps: float = 3.0
    # Points closer than this to the plate plane are dropped before accumulation.
    plate_clearance: float = 5.0
    phis: tuple[float, ...] | None = None
    seed: int = 0

    @property
    def extent_h(self) -> float:
        return self.radius if self.h_max is None else self.h_max


@dataclass
class FrameResult:
    frame: int
    best: ProfileCurve
    best_score: float
    mean_score: float
    status: str
    accumulator: RadialAccumulator
    runtime_ms: float
    ae_mm: float | None = None
    hd_mm: float | None = None


@dataclass
class Reconstruction:
    frames: list[FrameResult]
    detections: list[TurntableDetection]
    transforms: list[RigidTransform]

    @property
    def mean_ae(self) -> float:
        return float(np.mean([f.ae_mm for f in self.frames]))

    @property
    def mean_hd(self) -> float:
        return float(np.mean([f.hd_mm for f in self.frames]))


class Reconstructor:
    """Holds the registration and the particle filter across frames."""

    def __init__(self, cfg: PipelineConfig, transforms: Sequence[RigidTransform]):
        self.cfg = cfg
        self.transforms = list(transforms)
        self.filter = ParticleFilter(cfg.filter, cfg.radius, cfg.extent_h, seed=cfg.seed)

    def accumulate(self, clouds: Sequence[PointCloud]) -> RadialAccumulator:
        merged = merge_registered(clouds, self.transforms)
        pts = merged.points
        if self.cfg.plate_clearance > 0 and len(pts):
            pts = pts[to_polar(pts).h >= self.cfg.plate_clearance]
        return build_accumulator(pts, self.cfg.cell, self.cfg.radius, self.cfg.extent_h, self.cfg.enhanced)

    def process(self, frame: int, clouds: Sequence[PointCloud]) -> FrameResult:
        t0 = time.perf_counter()
        acc = self.accumulate(clouds)
        res = self.filter.step(acc)
        ms = (time.perf_counter() - t0) * 1e3
        return FrameResult(frame, res.best, res.best_score, res.mean_score, res.status, acc, ms)


def detect_all(
    frame_source: Callable[[int], Sequence[PointCloud]],
    n_frames: int,
    n_sensors: int,
    cfg: PipelineConfig,
    intrinsics: Sequence[SensorIntrinsics | None] | None = None,
) -> list[TurntableDetection]:
    """Lock the turntable independently in every sensor stream."""
    intrinsics = intrinsics or [None] * n_sensors
    out = []
    for i in range(n_sensors):
        stream = (frame_source(t)[i] for t in range(n_frames))
        out.append(
            detect_turntable_stable(
                stream,
                cfg.plane,
                cfg.sigma_c,
                cfg.radius,
                max_normal_angle_deg=cfg.max_normal_angle_deg,
                sensor=intrinsics[i],
                kernel_bandwidth=cfg.kernel_bandwidth,
                convergence_eps=cfg.convergence_eps,
                seed=int(np.random.SeedSequence([cfg.seed, 7919, i]).generate_state(1)[0]),
            )
        )
    return out


def reconstruct(
    frame_source: Callable[[int], Sequence[PointCloud]],
    n_frames: int,
    cfg: PipelineConfig,
    intrinsics: Sequence[SensorIntrinsics | None] | None = None,
    truth: Callable[[int], ProfileCurve] | None = None,
    on_frame: Callable[[FrameResult], None] | None = None,
    detections: Sequence[TurntableDetection] | None = None,
) -> Reconstruction:
    """Run the whole pipeline over ``n_frames`` frames.

    ``frame_source(t)`` returns the per-sensor clouds of frame ``t``. The
    turntable lock consumes a prefix of the stream; reconstruction then runs
    over every frame from the first one. Pass ``detections`` to reuse an
    earlier turntable lock.
    """
    first = frame_source(0)
    n_sensors = len(first)
    if detections is None:
        detections = detect_all(frame_source, n_frames, n_sensors, cfg, intrinsics)
    detections = list(detections)
    phis = cfg.phis if cfg.phis is not None else default_phis(n_sensors)
    transforms = [registration_matrix(d.model, phi) for d, phi in zip(detections, phis)]
    rec = Reconstructor(cfg, transforms)
    results = []
    for t in range(n_frames):
        res = rec.process(t, first if t == 0 else frame_source(t))
        if truth is not None:
            res.ae_mm, res.hd_mm = profile_errors(truth(t), res.best)
        if on_frame is not None:
            on_frame(res)
        results.append(res)
    return Reconstruction(results, detections, transforms)
