"""Synthetic turntable scenes with known ground-truth profiles.

The world frame is the canonical turntable frame (plate center at the
origin, axis +y). Each sensor sits at an azimuth around the axis, looks at
a point on the axis and only sees the object inside its angular sector.
Generated clouds are expressed in the sensor frames (x right, y down,
z forward), so detection and registration are exercised end to end.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .cloud import CANONICAL_AXIS, TWO_PI, PointCloud, from_polar, to_polar
from .errors import InvalidArgumentError
from .registration import RigidTransform, align_to_canonical
from .spline import ProfileCurve, dense_polylines
from .turntable import SensorIntrinsics, TurntableModel

LABEL_OBJECT = 0
LABEL_PLATE = 1
LABEL_OCCLUDER = 2
LABEL_OUTLIER = 3

_STREAM_OBJECT = 0
_STREAM_PLATE = 1
_STREAM_OCCLUDER = 2
_STREAM_OUTLIER = 3
_STREAM_NOISE = 4


@dataclass
class SensorSpec:
    azimuth: float
    distance: float = 450.0
    height: float = 350.0
    target_height: float = 40.0
    sector: float = np.pi / 2
    noise: float = 0.0
    object_points: int = 4000
    plate_points: int = 3000
    focal_length: float = 80.0

    def __post_init__(self):
        if not 0 < self.sector <= TWO_PI + 1e-12:
            raise InvalidArgumentError("sector width must lie in (0, 2*pi]")
        if self.noise < 0:
            raise InvalidArgumentError("noise must be >= 0")

    @property
    def intrinsics(self) -> SensorIntrinsics:
        return SensorIntrinsics(self.focal_length)


@dataclass
class Occluder:
    """Ball of points standing in for a hand; it also hides what is behind it."""

    center: tuple[float, float, float]
    radius: float
    points: int


@dataclass
class SceneSpec:
    keyframes: list[tuple[int, list[list[float]]]]
    sensors: list[SensorSpec]
    radius: float = 160.0
    occluders: list[Occluder] = field(default_factory=list)
    outlier_fraction: float = 0.0
    n_frames: int = 1
    fps: float = 25.0

    def __post_init__(self):
        if self.n_frames < 1:
            raise InvalidArgumentError("frame count must be >= 1")
        if not self.keyframes:
            raise InvalidArgumentError("at least one keyframe is required")
        self.keyframes = sorted(((int(f), np.asarray(k, dtype=float).tolist()) for f, k in self.keyframes))
        self.sensors = [s if isinstance(s, SensorSpec) else SensorSpec(**s) for s in self.sensors]
        self.occluders = [o if isinstance(o, Occluder) else Occluder(**o) for o in self.occluders]

    def profile_at(self, frame: int) -> ProfileCurve:
        """Knots interpolated linearly between keyframes (held at both ends)."""
        frames = np.array([f for f, _ in self.keyframes], dtype=float)
        knots = np.array([k for _, k in self.keyframes], dtype=float)
        flat = knots.reshape(len(frames), -1)
        out = np.array([np.interp(frame, frames, flat[:, c]) for c in range(flat.shape[1])])
        return ProfileCurve(out.reshape(3, 2))

    def max_knot_speed(self) -> float:
        """Largest knot displacement per second over the sequence (mm/s)."""
        best = 0.0
        prev = self.profile_at(0).knots
        for f in range(1, self.n_frames):
            cur = self.profile_at(f).knots
            best = max(best, float(np.linalg.norm(cur - prev, axis=1).max()) * self.fps)
            prev = cur
        return best

    def with_sensors(self, indices) -> "SceneSpec":
        d = self.to_dict()
        d["sensors"] = [d["sensors"][i] for i in indices]
        return SceneSpec.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "keyframes": [[f, k] for f, k in self.keyframes],
            "sensors": [asdict(s) for s in self.sensors],
            "radius": self.radius,
            "occluders": [{"center": list(o.center), "radius": o.radius, "points": o.points} for o in self.occluders],
            "outlier_fraction": self.outlier_fraction,
            "n_frames": self.n_frames,
            "fps": self.fps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        return cls(
            keyframes=[(f, k) for f, k in d["keyframes"]],
            sensors=[SensorSpec(**s) for s in d["sensors"]],
            radius=d.get("radius", 160.0),
            occluders=[Occluder(tuple(o["center"]), o["radius"], o["points"]) for o in d.get("occluders", [])],
            outlier_fraction=d.get("outlier_fraction", 0.0),
            n_frames=d.get("n_frames", 1),
            fps=d.get("fps", 25.0),
        )


def sensor_pose(sensor: SensorSpec) -> RigidTransform:
    """Sensor-to-canonical transform for a sensor looking at the axis."""
    origin = np.array(
        [sensor.distance * np.cos(sensor.azimuth), sensor.height, -sensor.distance * np.sin(sensor.azimuth)]
    )
    target = np.array([0.0, sensor.target_height, 0.0])
    fwd = target - origin
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, CANONICAL_AXIS)
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    return RigidTransform.from_parts(np.column_stack([right, down, fwd]), origin)


def true_turntable(sensor: SensorSpec, radius: float) -> TurntableModel:
    """The plate as seen from the sensor frame."""
    inv = sensor_pose(sensor).inverse()
    return TurntableModel(inv.apply(np.zeros(3)), inv.rotation @ CANONICAL_AXIS, radius)


def true_phi(sensor: SensorSpec, radius: float = 160.0) -> float:
    """Axial angle that completes the turntable alignment into the true pose."""
    u = align_to_canonical(true_turntable(sensor, radius))
    v = sensor_pose(sensor) @ u.inverse()
    return float(np.mod(np.arctan2(-v.rotation[2, 0], v.rotation[0, 0]), TWO_PI))


@dataclass
class SyntheticFrame:
    clouds: list[PointCloud]
    profile: ProfileCurve
    labels: list[np.ndarray]
    progressions: list[np.ndarray]
    canonical: list[np.ndarray]


def _rng(seed: int, frame: int, sensor: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, frame, sensor, stream]))


def _in_sector(theta: np.ndarray, center: float, width: float) -> np.ndarray:
    if width >= TWO_PI:
        return np.ones(theta.shape, dtype=bool)
    d = np.mod(theta - center + np.pi, TWO_PI) - np.pi
    return np.abs(d) <= width / 2


def _shadowed(points: np.ndarray, origin: np.ndarray, occluders: list[Occluder]) -> np.ndarray:
    hidden = np.zeros(points.shape[0], dtype=bool)
    for occ in occluders:
        c = np.asarray(occ.center, dtype=float)
        ray = points - origin
        t = np.clip(((c - origin) @ ray.T) / np.einsum("ij,ij->i", ray, ray), 0.0, 1.0)
        closest = origin + t[:, None] * ray
        dist = np.linalg.norm(closest - c, axis=1)
        hidden |= (dist < occ.radius) & (t < 1.0)
    return hidden


def _inside(points: np.ndarray, occluders: list[Occluder]) -> np.ndarray:
    out = np.zeros(points.shape[0], dtype=bool)
    for occ in occluders:
        out |= np.linalg.norm(points - np.asarray(occ.center, dtype=float), axis=1) < occ.radius
    return out


def sample_object(profile: ProfileCurve, n: int, theta_center: float, theta_width: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Area-uniform samples of the revolved profile inside an angular sector.

    Returns canonical points and each point's global curve progression in [0, 2].
    """
    if n <= 0:
        return np.empty((0, 3)), np.empty(0)
    dense = dense_polylines(profile.knots[None], profile.tension)[0]
    m = dense.shape[0] - 1
    seg = np.linalg.norm(np.diff(dense, axis=0), axis=1)
    rho_mid = 0.5 * (dense[1:, 0] + dense[:-1, 0])
    weight = np.abs(rho_mid) * seg
    if weight.sum() <= 0:
        weight = np.ones(m)
    k = rng.choice(m, size=n, p=weight / weight.sum())
    u = (k + rng.random(n)) * (2.0 / m)
    u = np.clip(u, 0.0, 2.0)
    rh = profile.evaluate(u)
    theta = theta_center + (rng.random(n) - 0.5) * min(theta_width, TWO_PI)
    return from_polar(rh[:, 0], rh[:, 1], np.mod(theta, TWO_PI)), u


def _plate_candidates(n: int, inner: float, outer: float, rng) -> np.ndarray:
    rho = np.sqrt(rng.uniform(inner**2, outer**2, size=n))
    theta = rng.uniform(0.0, TWO_PI, size=n)
    return from_polar(rho, np.zeros(n), theta)


def generate_frame(spec: SceneSpec, frame_index: int, seed: int = 0) -> SyntheticFrame:
    """Per-sensor clouds (sensor frames) and the true profile for one frame.

    Deterministic in (spec, frame_index, seed). Plate samples are thinned by
    the pinhole footprint so their density falls off like a real depth map.
    """
    if not 0 <= frame_index < spec.n_frames:
        raise IndexError(f"frame {frame_index} outside [0, {spec.n_frames})")
    profile = spec.profile_at(frame_index)
    foot = float(profile.knots[np.argmin(profile.knots[:, 1]), 0])
    clouds, labels, progs, canon = [], [], [], []
    for s_idx, sensor in enumerate(spec.sensors):
        pose = sensor_pose(sensor)
        origin = pose.translation
        inv = pose.inverse()

        obj, u = sample_object(profile, sensor.object_points, sensor.azimuth, sensor.sector, _rng(seed, frame_index, s_idx, _STREAM_OBJECT))
        keep = ~_shadowed(obj, origin, spec.occluders)
        obj, u = obj[keep], u[keep]

        prng = _rng(seed, frame_index, s_idx, _STREAM_PLATE)
        cand = _plate_candidates(3 * sensor.plate_points, min(foot, spec.radius), spec.radius, prng)
        ray = cand - origin
        depth = ray @ pose.rotation[:, 2]
        cos_a = np.abs(ray @ CANONICAL_AXIS) / np.linalg.norm(ray, axis=1)
        density = np.maximum(cos_a, 0.1) / depth**2
        accept = prng.random(cand.shape[0]) < density / density.max()
        plate = cand[accept & ~_shadowed(cand, origin, spec.occluders)][: sensor.plate_points]

        blobs = []
        orng = _rng(seed, frame_index, s_idx, _STREAM_OCCLUDER)
        for k, occ in enumerate(spec.occluders):
            c = np.asarray(occ.center, dtype=float)
            d = orng.normal(size=(4 * occ.points, 3))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            facing = d @ (origin - c) > 0
            pts = c + occ.radius * d[facing][: occ.points]
            # Drop points buried in a neighbouring ball of the same hand.
            others = [o for j, o in enumerate(spec.occluders) if j != k]
            blobs.append(pts[~_inside(pts, others)])
        blob = np.concatenate(blobs) if blobs else np.empty((0, 3))

        surface = np.concatenate([obj, plate, blob])
        lab = np.concatenate(
            [np.full(len(obj), LABEL_OBJECT), np.full(len(plate), LABEL_PLATE), np.full(len(blob), LABEL_OCCLUDER)]
        )
        if sensor.noise > 0 and len(surface):
            ray = surface - origin
            ray /= np.linalg.norm(ray, axis=1, keepdims=True)
            eps = _rng(seed, frame_index, s_idx, _STREAM_NOISE).normal(0.0, sensor.noise, size=len(surface))
            surface = surface + eps[:, None] * ray

        n_out = 0
        if spec.outlier_fraction > 0:
            n_out = int(round(spec.outlier_fraction * len(surface) / (1.0 - spec.outlier_fraction)))
        r = spec.radius
        outl = _rng(seed, frame_index, s_idx, _STREAM_OUTLIER).uniform([-r, -20.0, -r], [r, r + 40.0, r], size=(n_out, 3))

        pts_c = np.concatenate([surface, outl])
        lab = np.concatenate([lab, np.full(n_out, LABEL_OUTLIER)])
        prog = np.full(len(pts_c), np.nan)
        prog[: len(obj)] = u
        clouds.append(PointCloud(inv.apply(pts_c), frame_id=f"sensor{s_idx}"))
        labels.append(lab)
        progs.append(prog)
        canon.append(pts_c)
    return SyntheticFrame(clouds, profile, labels, progs, canon)


def angular_coverage(frame: SyntheticFrame, spec: SceneSpec, label: int = LABEL_OBJECT) -> list[np.ndarray]:
    """Canonical theta of the labelled points of each sensor (for bookkeeping tests)."""
    out = []
    for pts, lab in zip(frame.canonical, frame.labels):
        out.append(to_polar(pts[lab == label]).theta if np.any(lab == label) else np.empty(0))
    return out


DOME = [[0.0, 95.0], [60.0, 78.0], [92.0, 12.0]]
DOME_TALL = [[0.0, 120.0], [48.0, 100.0], [78.0, 12.0]]


def static_scene(n_frames: int = 50, knots=DOME) -> SceneSpec:
    """Noise-free, occluder-free scene with all-around coverage."""
    sensors = [SensorSpec(azimuth=0.0, sector=np.pi), SensorSpec(azimuth=np.pi, sector=np.pi)]
    return SceneSpec(keyframes=[(0, knots)], sensors=sensors, n_frames=n_frames)


def coverage(sensors: list[SensorSpec]) -> float:
    """Total angle of the union of the sensors' sectors."""
    grid = np.linspace(0.0, TWO_PI, 3600, endpoint=False)
    seen = np.zeros(grid.size, dtype=bool)
    for s in sensors:
        seen |= _in_sector(grid, s.azimuth, s.sector)
    return TWO_PI * seen.mean()


def realistic_scene(n_frames: int = 50, noise: float = 2.0, occluded: bool = True, occlusion: float = 0.3) -> SceneSpec:
    """Two sensors with quarter-circle sectors, sensor noise, a hand hiding
    ``occlusion`` of the covered angle and a profile that rises from a dome
    to a taller cone within 50 mm/s."""
    sensors = [
        SensorSpec(azimuth=0.0, sector=np.pi / 2, noise=noise, object_points=1500, plate_points=1500),
        SensorSpec(azimuth=np.pi / 2, sector=np.pi / 2, noise=noise, object_points=1500, plate_points=1500),
    ]
    spec = SceneSpec(
        keyframes=[(0, DOME), (n_frames - 1, DOME_TALL)],
        sensors=sensors,
        outlier_fraction=0.01,
        n_frames=n_frames,
    )
    if occluded:
        spec.occluders = _calibrated_hand(spec, occlusion)
    return spec


def _calibrated_hand(spec: SceneSpec, target: float) -> list[Occluder]:
    """Hand whose measured angular occlusion on frame 0 matches ``target``."""
    total = coverage(spec.sensors)
    make = lambda arc: hand_occluders(DOME, theta=np.pi / 4, arc=arc, u=1.3, radius=20.0, points=900)
    lo, hi = 0.0, total
    for _ in range(12):
        mid = 0.5 * (lo + hi)
        spec.occluders = make(mid)
        if angular_occlusion(spec) < target:
            lo = mid
        else:
            hi = mid
    return make(0.5 * (lo + hi))


def hand_occluders(knots, theta: float, arc: float, u: float, radius: float, points: int) -> list[Occluder]:
    """Chain of balls resting against the revolved surface at progression
    ``u``, centred on angle ``theta`` and spanning ``arc`` radians of it."""
    rho, h = ProfileCurve(knots).evaluate(u)
    rho_c = float(rho) + radius
    half = max(arc / 2 - np.arcsin(min(1.0, radius / rho_c)), 0.0)
    n = max(1, int(np.ceil(2 * half * rho_c / radius)) + 1)
    angles = theta + (np.linspace(-half, half, n) if n > 1 else np.zeros(1))
    per = max(1, points // n)
    return [Occluder(tuple(float(v) for v in from_polar(rho_c, h, a)), radius, per) for a in angles]


def angular_occlusion(spec: SceneSpec, frame_index: int = 0, samples: int = 40000, seed: int = 0) -> float:
    """Fraction of the covered angle where some of the object is hidden from
    every sensor that sees it (1 degree bins)."""
    profile = spec.profile_at(frame_index)
    rng = np.random.default_rng(seed)
    pts, _ = sample_object(profile, samples, 0.0, TWO_PI, rng)
    theta = to_polar(pts).theta
    seen = np.zeros(len(pts), dtype=bool)
    visible = np.zeros(len(pts), dtype=bool)
    for s in spec.sensors:
        inside = _in_sector(theta, s.azimuth, s.sector)
        seen |= inside
        visible |= inside & ~_shadowed(pts, sensor_pose(s).translation, spec.occluders)
    bins = np.floor(np.degrees(theta)).astype(int)
    covered = np.unique(bins[seen])
    hidden = np.unique(bins[seen & ~visible])
    return len(hidden) / max(len(covered), 1)
