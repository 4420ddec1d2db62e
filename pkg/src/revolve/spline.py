"""Five-knot Catmull-Rom profile curves in the (rho, h) half plane.

Only the three middle knots are free; the two end knots are point
reflections that fix the end tangents. Evaluation, arc length and
equidistant sampling all work on the two spans between the free knots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidArgumentError

TENSION = 1.0
SUBSAMPLES = 256


def basis_matrix(tau: float = TENSION) -> np.ndarray:
    return 0.5 * np.array(
        [
            [0.0, 2.0, 0.0, 0.0],
            [-tau, 0.0, tau, 0.0],
            [2.0 * tau, tau - 6.0, -2.0 * (tau - 3.0), -tau],
            [-tau, 4.0 - tau, tau - 4.0, tau],
        ]
    )


def _basis_weights(p, tau: float) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    powers = np.stack([np.ones_like(p), p, p * p, p * p * p], axis=-1)
    return powers @ basis_matrix(tau)


def eval_segment(k0, k1, k2, k3, p, tau: float = TENSION) -> np.ndarray:
    """Point(s) on the span from ``k1`` to ``k2`` at progression ``p`` in [0, 1]."""
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any(p_arr < 0.0) or np.any(p_arr > 1.0) or not np.all(np.isfinite(p_arr)):
        raise InvalidArgumentError("progression must lie in [0, 1]")
    b = _basis_weights(p_arr, tau)
    k0, k1, k2, k3 = (np.asarray(k, dtype=np.float64) for k in (k0, k1, k2, k3))
    return b[..., 0:1] * k0 + b[..., 1:2] * k1 + b[..., 2:3] * k2 + b[..., 3:4] * k3


def virtual_knots(k2, k3, k4) -> tuple[np.ndarray, np.ndarray]:
    k2, k3, k4 = (np.asarray(k, dtype=np.float64) for k in (k2, k3, k4))
    return 2.0 * k2 - k3, 2.0 * k4 - k3


def full_knots(knots: np.ndarray) -> np.ndarray:
    """(..., 3, 2) free knots -> (..., 5, 2) with the reflected end knots."""
    k = np.asarray(knots, dtype=np.float64)
    first = 2.0 * k[..., 0, :] - k[..., 1, :]
    last = 2.0 * k[..., 2, :] - k[..., 1, :]
    return np.concatenate([first[..., None, :], k, last[..., None, :]], axis=-2)


_B_GRID = {}


def _grid_weights(tau: float, subsamples: int = SUBSAMPLES) -> np.ndarray:
    key = (tau, subsamples)
    if key not in _B_GRID:
        _B_GRID[key] = _basis_weights(np.linspace(0.0, 1.0, subsamples + 1), tau)
    return _B_GRID[key]


def dense_polylines(knots: np.ndarray, tau: float = TENSION, subsamples: int = SUBSAMPLES) -> np.ndarray:
    """(N, 3, 2) free knots -> (N, 2*subsamples + 1, 2) points along both spans."""
    kk = full_knots(knots)
    b = _grid_weights(tau, subsamples)
    spans = []
    for j in (1, 2):
        seg = (
            b[None, :, 0:1] * kk[:, None, j - 1, :]
            + b[None, :, 1:2] * kk[:, None, j, :]
            + b[None, :, 2:3] * kk[:, None, j + 1, :]
            + b[None, :, 3:4] * kk[:, None, j + 2, :]
        )
        spans.append(seg if j == 1 else seg[:, 1:, :])
    return np.concatenate(spans, axis=1)


def cumulative_lengths(dense: np.ndarray) -> np.ndarray:
    d = np.diff(dense, axis=1)
    seg = np.sqrt(d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1])
    cum = np.zeros(dense.shape[:2])
    np.cumsum(seg, axis=1, out=cum[:, 1:])
    return cum


def sample_batch(
    knots: np.ndarray, step: float, tau: float = TENSION, subsamples: int = SUBSAMPLES
) -> tuple[np.ndarray, np.ndarray]:
    """Equidistant samples of many curves at once.

    Returns (points, counts): points of all curves concatenated in curve
    order, and how many belong to each curve.
    """
    if not step > 0:
        raise InvalidArgumentError("sampling step must be > 0")
    dense = dense_polylines(knots, tau, subsamples)
    cum = cumulative_lengths(dense)
    counts = _kernels.equidistant_counts(cum, float(step))
    out = np.empty((int(counts.sum()), 2))
    _kernels.equidistant_fill(dense, cum, float(step), counts, out)
    return out, counts


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Catmull-Rom profile with free knots ``knots[0..2]`` = kappa_2..kappa_4.

    The particle filter keeps kappa_2 on the h axis; the curve itself does not
    enforce it so arbitrary profiles can be evaluated and meshed.
    """

    knots: np.ndarray
    tension: float = TENSION

    def __post_init__(self):
        k = np.array(self.knots, dtype=np.float64)
        if k.shape != (3, 2):
            raise InvalidArgumentError(f"expected 3 free knots of shape (3, 2), got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise InvalidArgumentError("knots must be finite")
        k.setflags(write=False)
        object.__setattr__(self, "knots", k)

    @property
    def all_knots(self) -> np.ndarray:
        return full_knots(self.knots)

    def evaluate(self, u) -> np.ndarray:
        """Point at global progression ``u`` in [0, 2] (span index + local p)."""
        u = np.asarray(u, dtype=np.float64)
        if np.any(u < 0) or np.any(u > 2):
            raise InvalidArgumentError("global progression must lie in [0, 2]")
        kk = self.all_knots
        first = u <= 1.0
        p = np.where(first, u, u - 1.0)
        a = eval_segment(kk[0], kk[1], kk[2], kk[3], np.clip(p, 0, 1), self.tension)
        b = eval_segment(kk[1], kk[2], kk[3], kk[4], np.clip(p, 0, 1), self.tension)
        return np.where(first[..., None], a, b)

    def polyline(self) -> np.ndarray:
        return dense_polylines(self.knots[None], self.tension)[0]

    def length(self) -> float:
        return curve_length(self)

    def reversed(self) -> "ProfileCurve":
        return ProfileCurve(self.knots[::-1], self.tension)

    def translated(self, v) -> "ProfileCurve":
        return ProfileCurve(self.knots + np.asarray(v, dtype=np.float64), self.tension)


def curve_length(curve: ProfileCurve) -> float:
    return float(cumulative_lengths(curve.polyline()[None])[0, -1])


def sample_equidistant(curve: ProfileCurve, step: float, subsamples: int = SUBSAMPLES) -> np.ndarray:
    """Points every ``step`` mm of arc length from kappa_2 to kappa_4, both ends
    included; a zero-length curve yields its single point."""
    pts, _ = sample_batch(curve.knots[None], step, curve.tension, subsamples)
    return pts
