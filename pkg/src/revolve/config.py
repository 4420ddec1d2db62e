"""Run configuration: one JSON document with nested sections.

Relative paths are resolved against the directory of the config file.
Unknown keys are rejected so typos do not silently fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError, InvalidArgumentError
from .particles import FilterConfig
from .pipeline import PipelineConfig
from .synth import SceneSpec, realistic_scene, static_scene
from .turntable import PlaneFitConfig, SensorIntrinsics

MODES = ("reconstruct", "evaluate", "synth", "ablate")
PROTOCOLS = ("sensors", "particles", "accumulator", "enhanced", "temporal")
SCENE_PRESETS = ("static", "realistic")


def _check_keys(d: dict, allowed, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _build(cls, d: dict, where: str):
    _check_keys(d, [f.name for f in fields(cls)], where)
    try:
        return cls(**d)
    except (TypeError, InvalidArgumentError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


@dataclass(frozen=True)
class SensorInput:
    path: str
    phi: float | None = None
    intrinsics: SensorIntrinsics | None = None

    def to_dict(self) -> dict:
        d = {"path": self.path, "phi": self.phi, "intrinsics": None}
        if self.intrinsics is not None:
            d["intrinsics"] = {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self.intrinsics).items()}
        return d

    @classmethod
    def from_dict(cls, d: dict, where: str = "sensors") -> "SensorInput":
        _check_keys(d, ("path", "phi", "intrinsics"), where)
        if "path" not in d:
            raise ConfigError(f"{where}: missing 'path'")
        intr = d.get("intrinsics")
        if intr is not None:
            intr = dict(intr)
            for k in ("principal_point", "image_size"):
                if k in intr:
                    intr[k] = tuple(intr[k])
            intr = _build(SensorIntrinsics, intr, f"{where}.intrinsics")
        phi = d.get("phi")
        return cls(str(d["path"]), None if phi is None else float(phi), intr)


@dataclass(frozen=True)
class AblationSpec:
    protocol: str = "sensors"
    values: list | None = None
    seeds: int = 10

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"ablation.protocol must be one of {PROTOCOLS}")
        if self.seeds < 1:
            raise ConfigError("ablation.seeds must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    mode: str = "reconstruct"
    sensors: tuple[SensorInput, ...] = ()
    ground_truth: str | None = None
    output: str = "out"
    seed: int = 0
    n_frames: int | None = None
    radius: float = 160.0
    cell: float = 10.0
    h_max: float | None = None
    enhanced: bool = True
    plate_clearance: float = 5.0
    sigma_c: float = 5.0
    max_normal_angle_deg: float = 2.0
    kernel_bandwidth: float | None = None
    convergence_eps: float = 3.0
    filter: FilterConfig = FilterConfig()
    plane: PlaneFitConfig = PlaneFitConfig()
    mesh_segments: int = 64
    record_runtime: bool = False
    scene: str | dict | None = None
    ablation: AblationSpec = AblationSpec()
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        for name in ("radius", "cell", "sigma_c", "max_normal_angle_deg", "convergence_eps"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("h_max", "kernel_bandwidth"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.n_frames is not None and self.n_frames < 1:
            raise ConfigError("n_frames must be >= 1")
        if self.plate_clearance < 0:
            raise ConfigError("plate_clearance must be >= 0")
        if self.mesh_segments < 3:
            raise ConfigError("mesh_segments must be >= 3")
        if isinstance(self.scene, str) and self.scene not in SCENE_PRESETS:
            raise ConfigError(f"scene preset must be one of {SCENE_PRESETS}")
        object.__setattr__(self, "sensors", tuple(self.sensors))

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        q = Path(p)
        return q if q.is_absolute() else Path(self.base_dir) / q

    def validate_paths(self) -> None:
        """Input paths must exist for the modes that read recorded data."""
        if self.mode not in ("reconstruct", "evaluate"):
            return
        if not self.sensors:
            raise ConfigError("at least one sensor input is required")
        for s in self.sensors:
            if not self.resolve(s.path).is_dir():
                raise ConfigError(f"sensor directory {self.resolve(s.path)} does not exist")
        if self.ground_truth is not None and not self.resolve(self.ground_truth).is_dir():
            raise ConfigError(f"ground-truth directory {self.resolve(self.ground_truth)} does not exist")
        if self.mode == "evaluate" and self.ground_truth is None:
            raise ConfigError("evaluate mode needs ground_truth")

    def pipeline(self, seed: int | None = None) -> PipelineConfig:
        phis = None
        if self.sensors and all(s.phi is not None for s in self.sensors):
            phis = tuple(s.phi for s in self.sensors)
        return PipelineConfig(
            radius=self.radius,
            cell=self.cell,
            h_max=self.h_max,
            enhanced=self.enhanced,
            filter=self.filter,
            plane=self.plane,
            sigma_c=self.sigma_c,
            max_normal_angle_deg=self.max_normal_angle_deg,
            kernel_bandwidth=self.kernel_bandwidth,
            convergence_eps=self.convergence_eps,
            plate_clearance=self.plate_clearance,
            phis=phis,
            seed=self.seed if seed is None else seed,
        )

    def scene_spec(self, n_frames: int = 50) -> SceneSpec:
        n = self.n_frames or n_frames
        if self.scene is None or self.scene == "realistic":
            return realistic_scene(n)
        if self.scene == "static":
            return static_scene(n)
        try:
            spec = SceneSpec.from_dict(self.scene)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"scene: {e}") from e
        return spec if self.n_frames is None else SceneSpec.from_dict({**spec.to_dict(), "n_frames": n})

    def to_dict(self) -> dict:
        f = asdict(self.filter)
        p = asdict(self.plane)
        p["refine"] = list(p["refine"])
        return {
            "mode": self.mode,
            "sensors": [s.to_dict() for s in self.sensors],
            "ground_truth": self.ground_truth,
            "output": self.output,
            "seed": self.seed,
            "n_frames": self.n_frames,
            "radius": self.radius,
            "cell": self.cell,
            "h_max": self.h_max,
            "enhanced": self.enhanced,
            "plate_clearance": self.plate_clearance,
            "sigma_c": self.sigma_c,
            "max_normal_angle_deg": self.max_normal_angle_deg,
            "kernel_bandwidth": self.kernel_bandwidth,
            "convergence_eps": self.convergence_eps,
            "filter": f,
            "plane": p,
            "mesh_segments": self.mesh_segments,
            "record_runtime": self.record_runtime,
            "scene": self.scene,
            "ablation": asdict(self.ablation),
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir=".") -> "RunConfig":
        allowed = [f.name for f in fields(cls) if f.name != "base_dir"]
        _check_keys(d, allowed, "config")
        kw = dict(d)
        if "sensors" in kw:
            if not isinstance(kw["sensors"], list):
                raise ConfigError("sensors: expected a list")
            kw["sensors"] = tuple(SensorInput.from_dict(s, f"sensors[{i}]") for i, s in enumerate(kw["sensors"]))
        if "filter" in kw:
            kw["filter"] = _build(FilterConfig, kw["filter"], "filter")
        if "plane" in kw:
            plane = dict(kw["plane"]) if isinstance(kw["plane"], dict) else kw["plane"]
            if isinstance(plane, dict) and "refine" in plane:
                plane["refine"] = tuple(plane["refine"])
            kw["plane"] = _build(PlaneFitConfig, plane, "plane")
        if "ablation" in kw:
            _check_keys(kw["ablation"], ("protocol", "values", "seeds"), "ablation")
            kw["ablation"] = AblationSpec(**kw["ablation"])
        try:
            return cls(**kw, base_dir=str(base_dir))
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def loads(text: str, base_dir=".") -> RunConfig:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e}") from e
    return RunConfig.from_dict(d, base_dir)


def load(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e}") from e
    return loads(text, p.parent)
