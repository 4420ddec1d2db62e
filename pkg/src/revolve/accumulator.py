"""Radial density accumulator over (rho, h) annuli around the canonical axis."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cloud import CANONICAL_AXIS, CANONICAL_ORIGIN, TWO_PI, PointCloud, to_polar
from .errors import InvalidArgumentError

_SPAN_EPS = 1e-12


def annulus_volume(rho_lo, delta_rho, delta_h):
    """Volume between two coaxial cylinders: pi ((rho+d)^2 - rho^2) dh."""
    return np.pi * ((rho_lo + delta_rho) ** 2 - rho_lo**2) * delta_h


def grid_size(extent: float, cell: float) -> int:
    return max(1, int(math.ceil(extent / cell - 1e-9)))


@dataclass(frozen=True, eq=False)
class RadialAccumulator:
    """Density grid indexed ``grid[rho_bin, h_bin]``."""

    grid: np.ndarray
    delta_rho: float
    delta_h: float
    r: float
    h_max: float
    enhanced: bool = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def rho_centers(self) -> np.ndarray:
        return (np.arange(self.grid.shape[0]) + 0.5) * self.delta_rho

    @property
    def h_centers(self) -> np.ndarray:
        return (np.arange(self.grid.shape[1]) + 0.5) * self.delta_h

    def scaled(self, factor: float) -> "RadialAccumulator":
        return RadialAccumulator(self.grid * factor, self.delta_rho, self.delta_h, self.r, self.h_max, self.enhanced)

    def to_text(self) -> str:
        """One line per h bin, values space separated, lowest h first."""
        rows = [" ".join(repr(float(v)) for v in row) for row in self.grid.T]
        return "\n".join(rows) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str, delta_rho: float, delta_h: float, r: float, h_max: float, enhanced: bool = False):
        rows = [list(map(float, line.split())) for line in text.strip().splitlines()]
        return cls(np.array(rows, dtype=np.float64).T, delta_rho, delta_h, r, h_max, enhanced)


def resultant_length(angles) -> float:
    a = np.asarray(angles, dtype=np.float64)
    if a.size == 0:
        raise InvalidArgumentError("resultant length of an empty set")
    return float(np.hypot(np.cos(a).mean(), np.sin(a).mean()))


def normalize_span(thetas: np.ndarray) -> np.ndarray | None:
    """Stretch the occupied arc of ``thetas`` onto the full circle.

    The arc is the circle minus its largest empty gap, so the result does not
    depend on where theta = 0 sits. Returns None when the arc has zero width.
    """
    t = np.sort(np.mod(np.asarray(thetas, dtype=np.float64), TWO_PI))
    gaps = np.empty_like(t)
    gaps[1:] = np.diff(t)
    gaps[0] = t[0] + TWO_PI - t[-1]
    k = int(np.argmax(gaps))
    span = TWO_PI - gaps[k]
    if span <= _SPAN_EPS:
        return None
    start = t[k]
    return TWO_PI * np.mod(np.asarray(thetas) - start, TWO_PI) / span


def radial_spread(thetas) -> float:
    """Length of the mean resultant of span-normalised angles, in [0, 1].

    1 means fully concentrated (a single angle); values near 0 mean the points
    cover their arc evenly.
    """
    t = np.asarray(thetas, dtype=np.float64)
    if t.size == 0:
        raise InvalidArgumentError("radial spread of an empty annulus")
    norm = normalize_span(t)
    if norm is None:
        return 1.0
    return min(1.0, resultant_length(norm))


def _cell_spreads(cell_ids: np.ndarray, thetas: np.ndarray, n_cells: int) -> np.ndarray:
    """Vectorised :func:`radial_spread` for every occupied cell."""
    spread = np.ones(n_cells)
    if cell_ids.size == 0:
        return spread
    theta = np.mod(thetas, TWO_PI)
    order = np.lexsort((theta, cell_ids))
    cid = cell_ids[order]
    th = theta[order]
    starts = np.flatnonzero(np.r_[True, cid[1:] != cid[:-1]])
    ends = np.r_[starts[1:], cid.size]
    counts = ends - starts
    group = np.repeat(np.arange(starts.size), counts)

    gaps = np.empty_like(th)
    gaps[1:] = th[1:] - th[:-1]
    gaps[starts] = th[starts] + TWO_PI - th[ends - 1]
    gmax = np.maximum.reduceat(gaps, starts)
    idx = np.arange(th.size)
    first_at_max = np.minimum.reduceat(np.where(gaps == gmax[group], idx, th.size), starts)
    start_theta = th[first_at_max]
    span = TWO_PI - gmax

    ok = span > _SPAN_EPS
    scale = np.where(ok, TWO_PI / np.where(ok, span, 1.0), 0.0)
    norm = np.mod(th - start_theta[group], TWO_PI) * scale[group]
    c = np.add.reduceat(np.cos(norm), starts) / counts
    s = np.add.reduceat(np.sin(norm), starts) / counts
    rbar = np.minimum(np.hypot(c, s), 1.0)
    rbar[~ok] = 1.0
    spread[cid[starts]] = rbar
    return spread


def build_accumulator(
    cloud,
    cell: float,
    r: float,
    h_max: float | None = None,
    enhanced: bool = False,
    cell_h: float | None = None,
    axis_origin=CANONICAL_ORIGIN,
    axis_dir=CANONICAL_AXIS,
) -> RadialAccumulator:
    """Bin a canonical-frame cloud into annuli and return point densities.

    Points below the plate (h < 0), beyond the plate radius or above
    ``h_max`` are ignored. With ``enhanced`` each cell is multiplied by
    (1 - radial_spread) of its members.
    """
    if not cell > 0:
        raise InvalidArgumentError("cell size must be > 0")
    h_max = r if h_max is None else h_max
    dh = cell if cell_h is None else cell_h
    n_rho = grid_size(r, cell)
    n_h = grid_size(h_max, dh)
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    grid = np.zeros((n_rho, n_h))
    if pts.shape[0]:
        rho, h, theta = to_polar(pts, axis_origin, axis_dir)
        keep = (h >= 0) & (h <= h_max) & (rho <= r)
        rho, h, theta = rho[keep], h[keep], theta[keep]
        i = np.minimum((rho / cell).astype(np.int64), n_rho - 1)
        j = np.minimum((h / dh).astype(np.int64), n_h - 1)
        cell_ids = i * n_h + j
        counts = np.bincount(cell_ids, minlength=n_rho * n_h).reshape(n_rho, n_h)
        vol = annulus_volume(np.arange(n_rho) * cell, cell, dh)[:, None]
        grid = counts / vol
        if enhanced:
            spread = _cell_spreads(cell_ids, theta, n_rho * n_h).reshape(n_rho, n_h)
            grid = (1.0 - spread) * grid
    return RadialAccumulator(grid, float(cell), float(dh), float(r), float(h_max), bool(enhanced))
