"""Bootstrap particle filter over five-knot profile curves.

Each particle is a (3, 2) array of free knots (kappa_2, kappa_3, kappa_4)
in (rho, h) millimetres; kappa_2 always sits on the h axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .accumulator import RadialAccumulator
from .errors import InvalidArgumentError, InvalidStateError
from .spline import TENSION, ProfileCurve, sample_batch

STATUS_RESAMPLED = "resampled"
STATUS_REINITIALIZED = "reinitialized"


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int = 1000
    sigma_m: float = 2.0
    resample_ratio: float = 0.8
    gmm_top_k: int = 10
    gaussian_sigma: float | None = None
    sample_step: float | None = None
    temporal: bool = True

    def __post_init__(self):
        if self.n_particles < 1:
            raise InvalidArgumentError("n_particles must be >= 1")
        if self.sigma_m < 0:
            raise InvalidArgumentError("sigma_m must be >= 0")
        if not 0.0 <= self.resample_ratio <= 1.0:
            raise InvalidArgumentError("resample_ratio must lie in [0, 1]")
        if self.gmm_top_k < 1:
            raise InvalidArgumentError("gmm_top_k must be >= 1")
        for name in ("gaussian_sigma", "sample_step"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise InvalidArgumentError(f"{name} must be > 0")

    def sigma_for(self, acc: RadialAccumulator) -> float:
        return acc.delta_rho if self.gaussian_sigma is None else self.gaussian_sigma

    def step_for(self, acc: RadialAccumulator) -> float:
        return acc.delta_rho / 2.0 if self.sample_step is None else self.sample_step


@dataclass(frozen=True, eq=False)
class ParticleSet:
    knots: np.ndarray
    scores: np.ndarray | None = None
    status: str = STATUS_RESAMPLED

    def __len__(self) -> int:
        return self.knots.shape[0]

    def curve(self, i: int) -> ProfileCurve:
        return ProfileCurve(self.knots[i])


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _draw_knots(n: int, r: float, h_max: float, rng: np.random.Generator) -> np.ndarray:
    k = np.empty((n, 3, 2))
    k[..., 0] = rng.uniform(0.0, r, size=(n, 3))
    k[..., 1] = rng.uniform(0.0, h_max, size=(n, 3))
    k[:, 0, 0] = 0.0
    return k


def init_particles(cfg: FilterConfig, r: float, h_max: float, seed=0) -> ParticleSet:
    return ParticleSet(_draw_knots(cfg.n_particles, r, h_max, _rng(seed)))


def constrain(knots: np.ndarray, r: float, h_max: float) -> np.ndarray:
    """Clamp knots into the accumulator extent and pin kappa_2 to the axis."""
    k = np.array(knots, dtype=np.float64)
    np.clip(k[..., 0], 0.0, r, out=k[..., 0])
    np.clip(k[..., 1], 0.0, h_max, out=k[..., 1])
    k[..., 0, 0] = 0.0
    return k


def motion_update(pset: ParticleSet, cfg: FilterConfig, r: float, h_max: float, rng=0) -> ParticleSet:
    """Add isotropic Gaussian noise (sigma_m per axis) to every free knot."""
    if cfg.sigma_m == 0:
        return ParticleSet(pset.knots.copy(), None, pset.status)
    noise = _rng(rng).normal(0.0, cfg.sigma_m, size=pset.knots.shape)
    return ParticleSet(constrain(pset.knots + noise, r, h_max), None, pset.status)


def gmm_point_score(x, acc: RadialAccumulator, cfg: FilterConfig = FilterConfig()):
    """Mean of the top-k weighted Gaussian densities of the accumulator at ``x``.

    ``x`` is a (rho, h) pair or an (M, 2) array.
    """
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    out = _kernels.topk_mixture(
        pts,
        np.ascontiguousarray(acc.grid, dtype=np.float64),
        float(acc.delta_rho),
        float(acc.delta_h),
        float(cfg.sigma_for(acc)),
        int(cfg.gmm_top_k),
    )
    return float(out[0]) if np.ndim(x) == 1 else out


def score_knots(knots: np.ndarray, acc: RadialAccumulator, cfg: FilterConfig, tau: float = TENSION) -> np.ndarray:
    """Mean point score over each curve's equidistant samples."""
    pts, counts = sample_batch(knots, cfg.step_for(acc), tau)
    point_scores = gmm_point_score(pts, acc, cfg)
    return _kernels.grouped_mean(np.atleast_1d(point_scores), counts)


def particle_score(curve: ProfileCurve, acc: RadialAccumulator, cfg: FilterConfig = FilterConfig()) -> float:
    return float(score_knots(curve.knots[None], acc, cfg, curve.tension)[0])


def score_particles(pset: ParticleSet, acc: RadialAccumulator, cfg: FilterConfig) -> ParticleSet:
    return ParticleSet(pset.knots, score_knots(pset.knots, acc, cfg), pset.status)


def systematic_indices(weights: np.ndarray, m: int, rng) -> np.ndarray:
    """``m`` indices by one uniform offset and equal strides over the CDF."""
    w = np.asarray(weights, dtype=np.float64)
    cdf = np.cumsum(w / w.sum())
    u = _rng(rng).uniform(0.0, 1.0 / m) + np.arange(m) / m
    return np.minimum(np.searchsorted(cdf, u, side="right"), w.size - 1)


def systematic_resample(pset: ParticleSet, cfg: FilterConfig, r: float, h_max: float, seed=0, fresh_rng=None) -> ParticleSet:
    """Keep round(ratio * N) particles by systematic resampling and draw the
    rest fresh. Falls back to a full redraw when no particle has mass."""
    if pset.scores is None:
        raise InvalidStateError("particles must be scored before resampling")
    rng = _rng(seed)
    fresh_rng = rng if fresh_rng is None else _rng(fresh_rng)
    n = len(pset)
    scores = pset.scores
    total = scores.sum()
    if not np.isfinite(total) or total <= 0:
        return ParticleSet(_draw_knots(n, r, h_max, fresh_rng), None, STATUS_REINITIALIZED)
    m = int(round(cfg.resample_ratio * n))
    parts = []
    if m > 0:
        parts.append(pset.knots[systematic_indices(scores, m, rng)])
    if n - m > 0:
        parts.append(_draw_knots(n - m, r, h_max, fresh_rng))
    return ParticleSet(np.concatenate(parts, axis=0), None, STATUS_RESAMPLED)


def best_index(pset: ParticleSet) -> int:
    if pset.scores is None:
        raise InvalidStateError("particles have not been scored")
    return int(np.argmax(pset.scores))


def best_particle(pset: ParticleSet) -> ProfileCurve:
    """Highest-scoring particle; ties go to the lowest index."""
    return pset.curve(best_index(pset))


@dataclass(frozen=True)
class StepResult:
    particles: ParticleSet
    best: ProfileCurve
    best_score: float
    mean_score: float
    status: str


def step(
    pset: ParticleSet,
    acc: RadialAccumulator,
    cfg: FilterConfig,
    r: float,
    h_max: float,
    motion_rng=0,
    resample_rng=1,
    fresh_rng=None,
) -> StepResult:
    """Motion, scoring, best extraction and resampling for one frame."""
    moved = motion_update(pset, cfg, r, h_max, motion_rng)
    scored = score_particles(moved, acc, cfg)
    i = best_index(scored)
    nxt = systematic_resample(scored, cfg, r, h_max, resample_rng, fresh_rng)
    return StepResult(
        nxt,
        scored.curve(i),
        float(scored.scores[i]),
        float(scored.scores.mean()),
        nxt.status,
    )


class ParticleFilter:
    """Stateful filter with independent random streams per stage.

    With ``cfg.temporal`` off, every frame starts from a fresh random set
    (per-frame reinitialisation baseline).
    """

    def __init__(self, cfg: FilterConfig, r: float, h_max: float, seed: int = 0):
        self.cfg = cfg
        self.r = float(r)
        self.h_max = float(h_max)
        init_ss, motion_ss, resample_ss = np.random.SeedSequence(seed).spawn(3)
        self._init_rng = np.random.default_rng(init_ss)
        self._motion_rng = np.random.default_rng(motion_ss)
        self._resample_rng = np.random.default_rng(resample_ss)
        self.particles = init_particles(cfg, r, h_max, self._init_rng)
        self.frames = 0

    def step(self, acc: RadialAccumulator) -> StepResult:
        if not self.cfg.temporal and self.frames > 0:
            self.particles = init_particles(self.cfg, self.r, self.h_max, self._init_rng)
        if self.cfg.temporal:
            res = step(
                self.particles,
                acc,
                self.cfg,
                self.r,
                self.h_max,
                self._motion_rng,
                self._resample_rng,
                self._init_rng,
            )
        else:
            scored = score_particles(self.particles, acc, self.cfg)
            i = best_index(scored)
            res = StepResult(scored, scored.curve(i), float(scored.scores[i]), float(scored.scores.mean()), STATUS_REINITIALIZED)
        self.particles = res.particles
        self.frames += 1
        return res
