"""Compiled inner loops for curve sampling and mixture scoring.

Both kernels process one curve / one query point at a time with identical
arithmetic, so batched and single evaluations agree bit for bit.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def equidistant_counts(cum, step):
    n = cum.shape[0]
    m = cum.shape[1]
    counts = np.empty(n, dtype=np.int64)
    for i in range(n):
        length = cum[i, m - 1]
        if length <= 1e-12:
            counts[i] = 1
            continue
        k = int(np.floor(length / step))
        c = k + 1
        if length - k * step > 1e-9 * step:
            c += 1
        counts[i] = c
    return counts


@numba.njit(cache=True)
def equidistant_fill(dense, cum, step, counts, out):
    """Walk each dense polyline and emit points every ``step`` of arc length,
    plus the end point."""
    n = dense.shape[0]
    m = dense.shape[1]
    pos = 0
    for i in range(n):
        length = cum[i, m - 1]
        c = counts[i]
        out[pos, 0] = dense[i, 0, 0]
        out[pos, 1] = dense[i, 0, 1]
        if c == 1:
            pos += 1
            continue
        j = 0
        for q in range(1, c - 1):
            t = q * step
            while j < m - 2 and cum[i, j + 1] < t:
                j += 1
            seg = cum[i, j + 1] - cum[i, j]
            frac = 0.0
            if seg > 0:
                frac = (t - cum[i, j]) / seg
            out[pos + q, 0] = dense[i, j, 0] + frac * (dense[i, j + 1, 0] - dense[i, j, 0])
            out[pos + q, 1] = dense[i, j, 1] + frac * (dense[i, j + 1, 1] - dense[i, j, 1])
        out[pos + c - 1, 0] = dense[i, m - 1, 0]
        out[pos + c - 1, 1] = dense[i, m - 1, 1]
        pos += c


@numba.njit(cache=True)
def topk_mixture(points, weights, cell_r, cell_h, sigma, k):
    """Mean of the k largest w * N(x; cell center, sigma^2 I) per query point.

    Cells are visited nearest-first and a branch stops once an upper bound on
    every remaining term cannot beat the current k-th value, so the result is
    exact. Missing terms (fewer than k cells) count as zero.
    """
    nr = weights.shape[0]
    nh = weights.shape[1]
    npts = points.shape[0]
    out = np.empty(npts)
    top = np.zeros(k)
    gx = np.empty(nr)
    gy = np.empty(nh)
    colmax = np.zeros(nr)
    wmax = 0.0
    for a in range(nr):
        mx = 0.0
        for b in range(nh):
            if weights[a, b] > mx:
                mx = weights[a, b]
        colmax[a] = mx
        if mx > wmax:
            wmax = mx
    norm = 1.0 / (2.0 * np.pi * sigma * sigma)
    inv = -0.5 / (sigma * sigma)
    for p in range(npts):
        xr = points[p, 0]
        xh = points[p, 1]
        for t in range(k):
            top[t] = 0.0
        if wmax <= 0.0 or k == 0:
            out[p] = 0.0
            continue
        for a in range(nr):
            d = xr - (a + 0.5) * cell_r
            gx[a] = np.exp(d * d * inv)
        for b in range(nh):
            d = xh - (b + 0.5) * cell_h
            gy[b] = np.exp(d * d * inv)
        ci = int(np.floor(xr / cell_r))
        ci = min(max(ci, 0), nr - 1)
        cj = int(np.floor(xh / cell_h))
        cj = min(max(cj, 0), nh - 1)
        gymax = gy[cj]
        for side in range(2):
            a = ci if side == 0 else ci + 1
            da = -1 if side == 0 else 1
            while 0 <= a < nr:
                if gx[a] * wmax * gymax <= top[k - 1]:
                    break
                ga = gx[a] * colmax[a]
                if ga * gymax > top[k - 1]:
                    for hside in range(2):
                        b = cj if hside == 0 else cj + 1
                        db = -1 if hside == 0 else 1
                        while 0 <= b < nh:
                            if ga * gy[b] <= top[k - 1]:
                                break
                            v = weights[a, b] * gx[a] * gy[b]
                            if v > top[k - 1]:
                                t = k - 1
                                while t > 0 and top[t - 1] < v:
                                    top[t] = top[t - 1]
                                    t -= 1
                                top[t] = v
                            b += db
                a += da
        s = 0.0
        for t in range(k):
            s += top[t]
        out[p] = s * norm / k
    return out


@numba.njit(cache=True)
def grouped_mean(values, counts):
    out = np.empty(counts.shape[0])
    pos = 0
    for i in range(counts.shape[0]):
        s = 0.0
        for q in range(counts[i]):
            s += values[pos + q]
        out[i] = s / counts[i]
        pos += counts[i]
    return out
