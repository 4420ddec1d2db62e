"""Turntable detection: mSAC plane fit with LO/WLS polishing, then a
projection-weighted mean shift for the plate center."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .cloud import PointCloud
from .errors import (
    DegenerateInputError,
    DetectionFailedError,
    InsufficientDataError,
    InvalidArgumentError,
    NoConvergenceError,
)

logger = logging.getLogger(__name__)

REFINE_LOCAL = "local"
REFINE_WLS = "wlst"
GRAZING_EPS = 0.1


@dataclass(frozen=True)
class TurntableModel:
    center: np.ndarray
    normal: np.ndarray
    radius: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise InvalidArgumentError("turntable normal must have unit length")
        if not self.radius > 0:
            raise InvalidArgumentError("turntable radius must be positive")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64).reshape(3))


@dataclass(frozen=True)
class PlaneFitConfig:
    inlier_threshold: float = 5.0
    max_iterations: int = 1000
    confidence: float = 0.99
    expected_inlier_ratio: float = 0.3
    refine: tuple[str, ...] = (REFINE_LOCAL, REFINE_WLS)

    def __post_init__(self):
        if not self.inlier_threshold > 0:
            raise InvalidArgumentError("inlier_threshold must be > 0")
        if not 0 < self.confidence < 1:
            raise InvalidArgumentError("confidence must lie in (0, 1)")
        if not 0 < self.expected_inlier_ratio < 1:
            raise InvalidArgumentError("expected_inlier_ratio must lie in (0, 1)")
        if self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be >= 1")
        unknown = set(self.refine) - {REFINE_LOCAL, REFINE_WLS}
        if unknown:
            raise InvalidArgumentError(f"unknown refinement flags {sorted(unknown)}")
        object.__setattr__(self, "refine", tuple(self.refine))


@dataclass(frozen=True)
class SensorIntrinsics:
    focal_length: float
    pixel_pitch: float = 1.0
    principal_point: tuple[float, float] = (0.0, 0.0)
    image_size: tuple[int, int] = (160, 120)

    def __post_init__(self):
        if not self.focal_length > 0:
            raise InvalidArgumentError("focal_length must be > 0")


@dataclass
class PlaneFit:
    """Best plane n.x + offset = 0, with inliers and the mSAC cost before and
    after refinement."""

    normal: np.ndarray
    offset: float
    inliers: np.ndarray
    cost: float
    raw_cost: float
    iterations: int

    def distances(self, points) -> np.ndarray:
        return np.abs(np.asarray(points) @ self.normal + self.offset)


def _points_of(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    return np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


def msac_cost(points: np.ndarray, normal: np.ndarray, offset: float, threshold: float) -> float:
    d2 = (points @ normal + offset) ** 2
    return float(np.minimum(d2, threshold * threshold).sum())


def _ls_plane(points: np.ndarray, weights: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    if weights is None:
        centroid = points.mean(axis=0)
        centered = points - centroid
    else:
        w = weights / weights.sum()
        centroid = w @ points
        centered = (points - centroid) * np.sqrt(w)[:, None]
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    return normal, float(-normal @ centroid)


def _orient(normal: np.ndarray, offset: float, scale: float) -> tuple[np.ndarray, float]:
    # Face the frame origin (the sensor); fall back to the dominant component
    # when the origin lies on the plane.
    if abs(offset) > 1e-9 * max(scale, 1.0):
        flip = offset < 0
    else:
        k = int(np.argmax(np.abs(normal)))
        flip = normal[k] < 0
    if flip:
        return -normal, -offset
    return normal, offset


def _required_iterations(inlier_ratio: float, confidence: float, cap: int) -> int:
    w3 = inlier_ratio**3
    if w3 >= 1.0:
        return 1
    if w3 <= 0.0:
        return cap
    k = math.log(1.0 - confidence) / math.log(1.0 - w3)
    return int(min(cap, max(1, math.ceil(k))))


def fit_plane_msac(cloud, cfg: PlaneFitConfig = PlaneFitConfig(), rng_seed: int = 0) -> PlaneFit:
    """Robust plane fit with the truncated-quadratic (mSAC) loss.

    Raw hypotheses come from minimal 3-point samples; the iteration budget
    follows k = log(1 - confidence) / log(1 - w^3) where w is the larger of
    the best hypothesis' inlier ratio and ``cfg.expected_inlier_ratio``.
    Refinement steps are only kept when they lower the cost.
    """
    pts = _points_of(cloud)
    n = pts.shape[0]
    if n < 3:
        raise InsufficientDataError(f"plane fit needs at least 3 points, got {n}")
    scale = float(np.abs(pts).max()) if n else 1.0
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateInputError("all points are collinear")

    t = cfg.inlier_threshold
    t2 = t * t
    rng = np.random.default_rng(rng_seed)

    best_cost = np.inf
    best = None
    budget = _required_iterations(cfg.expected_inlier_ratio, cfg.confidence, cfg.max_iterations)
    it = 0
    while it < budget:
        it += 1
        i, j, k = rng.choice(n, size=3, replace=False)
        nrm = np.cross(pts[j] - pts[i], pts[k] - pts[i])
        nn = np.linalg.norm(nrm)
        if nn <= 1e-12 * max(scale, 1.0) ** 2:
            continue
        nrm = nrm / nn
        off = -float(nrm @ pts[i])
        d2 = (pts @ nrm + off) ** 2
        cost = float(np.minimum(d2, t2).sum())
        if cost < best_cost:
            best_cost = cost
            best = (nrm, off)
            ratio = np.count_nonzero(d2 < t2) / n
            budget = max(
                it,
                _required_iterations(max(ratio, cfg.expected_inlier_ratio), cfg.confidence, cfg.max_iterations),
            )
    if best is None:
        raise DegenerateInputError("no non-degenerate sample found")

    raw_cost = best_cost
    normal, offset = best
    cost = best_cost

    if REFINE_LOCAL in cfg.refine:
        inl = np.abs(pts @ normal + offset) < t
        for _ in range(10):
            if np.count_nonzero(inl) < 3:
                break
            cand_n, cand_off = _ls_plane(pts[inl])
            cand_cost = msac_cost(pts, cand_n, cand_off, t)
            if cand_cost > cost:
                break
            normal, offset, cost = cand_n, cand_off, cand_cost
            new_inl = np.abs(pts @ normal + offset) < t
            if np.array_equal(new_inl, inl):
                break
            inl = new_inl

    if REFINE_WLS in cfg.refine:
        d2 = (pts @ normal + offset) ** 2
        w = np.clip(1.0 - d2 / t2, 0.0, 1.0)
        if np.count_nonzero(w > 0) >= 3:
            cand_n, cand_off = _ls_plane(pts[w > 0], w[w > 0])
            cand_cost = msac_cost(pts, cand_n, cand_off, t)
            if cand_cost <= cost:
                normal, offset, cost = cand_n, cand_off, cand_cost

    normal = normal / np.linalg.norm(normal)
    normal, offset = _orient(normal, offset, scale)
    inliers = np.flatnonzero(np.abs(pts @ normal + offset) < t)
    return PlaneFit(normal, float(offset), inliers, float(cost), float(raw_cost), it)


def projection_weight(
    points,
    plane_normal,
    sensor: SensorIntrinsics,
    sensor_origin=(0.0, 0.0, 0.0),
    optical_axis=(0.0, 0.0, 1.0),
):
    """Pixel footprint of each point on the imaged plane: (z/f)^2 * pitch^2 / cos(alpha).

    ``cos(alpha)`` is clamped at 0.1 to stay finite at grazing incidence.
    Accepts a single point or an (N, 3) array.
    """
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    ray = p - np.asarray(sensor_origin, dtype=np.float64)
    z = ray @ np.asarray(optical_axis, dtype=np.float64)
    if np.any(z <= 0):
        raise InvalidArgumentError("points must lie in front of the sensor")
    cos_a = np.abs(ray @ np.asarray(plane_normal, dtype=np.float64)) / np.linalg.norm(ray, axis=1)
    w = (z / sensor.focal_length) ** 2 * sensor.pixel_pitch**2 / np.maximum(cos_a, GRAZING_EPS)
    return float(w[0]) if single else w


def meanshift_center(
    inliers,
    weights=None,
    kernel_bandwidth: float = 320.0,
    convergence_eps: float = 3.0,
    rng_seed: int = 0,
    plane: tuple[np.ndarray, float] | None = None,
    max_iterations: int = 200,
    max_restarts: int = 10,
) -> np.ndarray:
    """Weighted mean shift with a flat ball kernel, started at a random inlier.

    If ``plane`` = (normal, offset) is given the result is projected onto it.
    """
    pts = _points_of(inliers)
    m = pts.shape[0]
    if m == 0:
        raise InsufficientDataError("mean shift needs at least one point")
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (m,):
        raise InvalidArgumentError("weights must match the number of inliers")
    if not kernel_bandwidth > 0:
        raise InvalidArgumentError("kernel_bandwidth must be > 0")

    rng = np.random.default_rng(rng_seed)
    bw2 = kernel_bandwidth**2
    for _ in range(max_restarts + 1):
        x = pts[rng.integers(m)].copy()
        empty = False
        for _ in range(max_iterations):
            in_ball = ((pts - x) ** 2).sum(axis=1) <= bw2
            total = w[in_ball].sum()
            if total <= 0:
                empty = True
                break
            x_new = w[in_ball] @ pts[in_ball] / total
            shift = np.linalg.norm(x_new - x)
            x = x_new
            if shift < convergence_eps:
                break
        if not empty:
            break
    else:
        raise NoConvergenceError("mean shift found no weighted mass after restarts")

    if plane is not None:
        nrm, off = plane
        x = x - (x @ nrm + off) * nrm
    return x


def estimate_turntable(
    cloud,
    cfg: PlaneFitConfig,
    radius: float,
    rng_seed: int = 0,
    sensor: SensorIntrinsics | None = None,
    kernel_bandwidth: float | None = None,
    convergence_eps: float = 3.0,
) -> tuple[TurntableModel, PlaneFit]:
    """Plane + plate center for one frame of one sensor (sensor at the origin)."""
    pts = _points_of(cloud)
    ss = np.random.SeedSequence(rng_seed)
    plane_seed, shift_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    fit = fit_plane_msac(pts, cfg, plane_seed)
    inl = pts[fit.inliers]
    if sensor is not None:
        weights = projection_weight(inl, fit.normal, sensor)
    else:
        weights = None
    center = meanshift_center(
        inl,
        weights,
        # A ball of radius 2r around any plate point covers the whole plate.
        kernel_bandwidth=2.0 * radius if kernel_bandwidth is None else kernel_bandwidth,
        convergence_eps=convergence_eps,
        rng_seed=shift_seed,
        plane=(fit.normal, fit.offset),
    )
    return TurntableModel(center, fit.normal, radius), fit


@dataclass
class TurntableDetection:
    model: TurntableModel
    frame_index: int
    history: list[TurntableModel] = field(default_factory=list)


def detect_turntable_stable(
    frames: Iterable,
    cfg: PlaneFitConfig,
    sigma_c: float = 5.0,
    known_radius: float = 160.0,
    *,
    max_normal_angle_deg: float = 2.0,
    sensor: SensorIntrinsics | None = None,
    kernel_bandwidth: float | None = None,
    convergence_eps: float = 3.0,
    seed: int = 0,
) -> TurntableDetection:
    """Estimate the turntable frame by frame until two consecutive estimates
    agree: normal angle <= ``max_normal_angle_deg`` and center distance <= ``sigma_c``.

    ``frame_index`` of the result is the second frame of the first stable pair.
    """
    prev = None
    history = []
    for t, cloud in enumerate(frames):
        try:
            model, _ = estimate_turntable(
                cloud,
                cfg,
                known_radius,
                rng_seed=np.random.SeedSequence([seed, t]).generate_state(1)[0],
                sensor=sensor,
                kernel_bandwidth=kernel_bandwidth,
                convergence_eps=convergence_eps,
            )
        except (InsufficientDataError, DegenerateInputError, NoConvergenceError) as exc:
            logger.debug("frame %d: turntable estimate failed (%s)", t, exc)
            prev = None
            continue
        history.append(model)
        if prev is not None:
            cos = float(np.clip(model.normal @ prev.normal, -1.0, 1.0))
            angle = math.degrees(math.acos(cos))
            shift = float(np.linalg.norm(model.center - prev.center))
            if angle <= max_normal_angle_deg and shift <= sigma_c:
                return TurntableDetection(model, t, history)
        prev = model
    raise DetectionFailedError("frame stream ended before the turntable estimate stabilised")
