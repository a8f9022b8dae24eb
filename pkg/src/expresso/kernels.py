"""Hot numeric kernels, compiled with numba when available.

Every kernel exists twice: a scalar-loop source (compiled with ``@njit`` on
the numba backend) and a vectorized numpy fallback. The backend is picked
once at import time; set ``EXPRESSO_NUMBA=0`` to force the numpy fallback.
Both backends produce the same values (bit-identical except for a <=1 ulp
difference between ``math.exp`` and ``np.exp``); ``benchmarks/compare_backends.py``
times one against the other.
"""
from __future__ import annotations

import math
import os

import numpy as np


def _want_numba() -> bool:
    flag = os.environ.get("EXPRESSO_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


_HAVE_NUMBA = False
if _want_numba():
    try:
        from numba import njit as _njit

        _HAVE_NUMBA = True
    except ImportError:
        _HAVE_NUMBA = False

BACKEND = "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# integral image

def _integral_src(pixels):
    h, w = pixels.shape
    out = np.empty((h, w), np.float64)
    for q in range(h):
        row = 0.0
        for p in range(w):
            row += pixels[q, p]
            out[q, p] = row + (out[q - 1, p] if q > 0 else 0.0)
    return out


def _integral_np(pixels):
    # cumsum along rows then columns is exactly the one-pass recurrence pair
    return np.cumsum(np.cumsum(pixels, axis=1, dtype=np.float64), axis=0)


# ---------------------------------------------------------------------------
# Gaussian window construction
#
# The exact kernel evaluates the standard-library exponential once per cell;
# the fast kernel evaluates a Horner-form truncated power series instead.

def _window_exact_src(radius, inv_two_sigma_sq):
    n = 2 * radius + 1
    w = np.empty((n, n), np.float64)
    for v in range(-radius, radius + 1):
        for u in range(-radius, radius + 1):
            w[v + radius, u + radius] = math.exp(-(u * u + v * v) * inv_two_sigma_sq)
    return w


def _window_exact_np(radius, inv_two_sigma_sq):
    d = np.arange(-radius, radius + 1, dtype=np.float64) ** 2
    return np.exp(-(d[:, None] + d[None, :]) * inv_two_sigma_sq)


def _window_taylor_src(radius, inv_two_sigma_sq, coefs, clamp):
    n = 2 * radius + 1
    w = np.empty((n, n), np.float64)
    terms = coefs.shape[0]
    for v in range(-radius, radius + 1):
        for u in range(-radius, radius + 1):
            x = -(u * u + v * v) * inv_two_sigma_sq
            s = coefs[terms - 1]
            for i in range(terms - 2, -1, -1):
                s = s * x + coefs[i]
            if clamp and s < 0.0:
                s = 0.0
            w[v + radius, u + radius] = s
    return w


def _window_taylor_np(radius, inv_two_sigma_sq, coefs, clamp):
    d = np.arange(-radius, radius + 1, dtype=np.float64) ** 2
    x = -(d[:, None] + d[None, :]) * inv_two_sigma_sq
    w = np.full_like(x, coefs[-1])
    for i in range(coefs.shape[0] - 2, -1, -1):
        w *= x
        w += coefs[i]
    if clamp:
        np.maximum(w, 0.0, out=w)
    return w


# Microbenchmark drivers: rebuild the window `count` times into one reused
# buffer, the way a per-tile recomputation pass would, so that per-cell
# exponential evaluation dominates the measured time.

def _window_churn_exact_src(count, radius, inv_two_sigma_sq):
    n = 2 * radius + 1
    w = np.empty((n, n), np.float64)
    acc = 0.0
    for _ in range(count):
        for v in range(-radius, radius + 1):
            for u in range(-radius, radius + 1):
                w[v + radius, u + radius] = math.exp(-(u * u + v * v) * inv_two_sigma_sq)
        acc += w[0, 0]
    return acc


def _window_churn_taylor_src(count, radius, inv_two_sigma_sq, coefs, clamp):
    n = 2 * radius + 1
    w = np.empty((n, n), np.float64)
    terms = coefs.shape[0]
    acc = 0.0
    for _ in range(count):
        for v in range(-radius, radius + 1):
            for u in range(-radius, radius + 1):
                x = -(u * u + v * v) * inv_two_sigma_sq
                s = coefs[terms - 1]
                for i in range(terms - 2, -1, -1):
                    s = s * x + coefs[i]
                if clamp and s < 0.0:
                    s = 0.0
                w[v + radius, u + radius] = s
        acc += w[0, 0]
    return acc


def _window_churn_exact_np(count, radius, inv_two_sigma_sq):
    d = np.arange(-radius, radius + 1, dtype=np.float64) ** 2
    grid = d[:, None] + d[None, :]
    w = np.empty_like(grid)
    acc = 0.0
    for _ in range(count):
        np.exp(-grid * inv_two_sigma_sq, out=w)
        acc += w[0, 0]
    return acc


def _window_churn_taylor_np(count, radius, inv_two_sigma_sq, coefs, clamp):
    d = np.arange(-radius, radius + 1, dtype=np.float64) ** 2
    x = -(d[:, None] + d[None, :]) * inv_two_sigma_sq
    w = np.empty_like(x)
    acc = 0.0
    for _ in range(count):
        w[:] = coefs[-1]
        for i in range(coefs.shape[0] - 2, -1, -1):
            w *= x
            w += coefs[i]
        if clamp:
            np.maximum(w, 0.0, out=w)
        acc += w[0, 0]
    return acc


# ---------------------------------------------------------------------------
# structure tensor: window-weighted sums of gradient products

def _tensor_src(xx, yy, xy, weights):
    h, w = xx.shape
    r = weights.shape[0] // 2
    A = np.zeros((h, w), np.float64)
    B = np.zeros((h, w), np.float64)
    C = np.zeros((h, w), np.float64)
    for y in range(r, h - r):
        for x in range(r, w - r):
            a = 0.0
            b = 0.0
            c = 0.0
            for dv in range(-r, r + 1):
                for du in range(-r, r + 1):
                    wt = weights[dv + r, du + r]
                    a += wt * xx[y + dv, x + du]
                    b += wt * yy[y + dv, x + du]
                    c += wt * xy[y + dv, x + du]
            A[y, x] = a
            B[y, x] = b
            C[y, x] = c
    return A, B, C


def _tensor_np(xx, yy, xy, weights):
    h, w = xx.shape
    r = weights.shape[0] // 2
    A = np.zeros((h, w), np.float64)
    B = np.zeros((h, w), np.float64)
    C = np.zeros((h, w), np.float64)
    if h - 2 * r <= 0 or w - 2 * r <= 0:
        return A, B, C
    core = (slice(r, h - r), slice(r, w - r))
    # accumulate shifted planes in the same (dv, du) order as the loop kernel
    for dv in range(-r, r + 1):
        for du in range(-r, r + 1):
            wt = weights[dv + r, du + r]
            src = (slice(r + dv, h - r + dv), slice(r + du, w - r + du))
            A[core] += wt * xx[src]
            B[core] += wt * yy[src]
            C[core] += wt * xy[src]
    return A, B, C


# ---------------------------------------------------------------------------
# SUSAN: per-pixel count of mask pixels similar to the nucleus

def _susan_src(pixels, dus, dvs, mask_radius, threshold, g):
    h, w = pixels.shape
    score = np.zeros((h, w), np.float64)
    m = mask_radius
    k = dus.shape[0]
    for y in range(m, h - m):
        for x in range(m, w - m):
            c = pixels[y, x]
            usan = 0
            for i in range(k):
                if abs(pixels[y + dvs[i], x + dus[i]] - c) <= threshold:
                    usan += 1
            if usan < g:
                score[y, x] = g - usan
    return score


def _susan_np(pixels, dus, dvs, mask_radius, threshold, g):
    h, w = pixels.shape
    score = np.zeros((h, w), np.float64)
    m = mask_radius
    if h - 2 * m <= 0 or w - 2 * m <= 0:
        return score
    core = pixels[m:h - m, m:w - m]
    usan = np.zeros(core.shape, np.int64)
    for i in range(dus.shape[0]):
        shifted = pixels[m + dvs[i]:h - m + dvs[i], m + dus[i]:w - m + dus[i]]
        usan += np.abs(shifted - core) <= threshold
    score[m:h - m, m:w - m] = np.where(usan < g, g - usan, 0.0)
    return score


# ---------------------------------------------------------------------------
# FAST segment test on the 16-pixel Bresenham circle of radius 3

# ring offsets (dv, du), clockwise from 12 o'clock
FAST_RING_DV = np.array([-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3], np.int64)
FAST_RING_DU = np.array([0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1], np.int64)


def _fast_arc_score_src(ring, center, threshold, arc_len):
    """Score of the longest qualifying contiguous arc, 0 if none reaches arc_len.

    A bright arc needs every pixel > center + threshold, a dark arc every
    pixel < center - threshold; the score sums the per-pixel excess beyond
    the threshold over the longest such run (first start index wins ties).
    """
    hi = center + threshold
    lo = center - threshold
    best = 0.0
    for mode in range(2):
        max_len = 0
        max_start = 0
        for start in range(16):
            length = 0
            while length < 16:
                v = ring[(start + length) % 16]
                ok = v > hi if mode == 0 else v < lo
                if not ok:
                    break
                length += 1
            if length > max_len:
                max_len = length
                max_start = start
        if max_len >= arc_len:
            s = 0.0
            for t in range(max_len):
                v = ring[(max_start + t) % 16]
                s += (v - hi) if mode == 0 else (lo - v)
            if s > best:
                best = s
    return best


def _fast_src(pixels, threshold, arc_len):
    h, w = pixels.shape
    score = np.zeros((h, w), np.float64)
    ring = np.empty(16, np.float64)
    # any qualifying arc must contain >= arc_len // 4 of the 4 compass pixels
    need = arc_len // 4
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            c = pixels[y, x]
            hi = c + threshold
            lo = c - threshold
            nb = 0
            nd = 0
            for i in range(0, 16, 4):
                v = pixels[y + FAST_RING_DV[i], x + FAST_RING_DU[i]]
                if v > hi:
                    nb += 1
                elif v < lo:
                    nd += 1
            if nb < need and nd < need:
                continue
            for i in range(16):
                ring[i] = pixels[y + FAST_RING_DV[i], x + FAST_RING_DU[i]]
            score[y, x] = _fast_arc_score(ring, c, threshold, arc_len)
    return score


def _fast_np(pixels, threshold, arc_len):
    h, w = pixels.shape
    score = np.zeros((h, w), np.float64)
    if h < 7 or w < 7:
        return score
    core = pixels[3:h - 3, 3:w - 3]
    hi = core + threshold
    lo = core - threshold
    need = arc_len // 4
    nb = np.zeros(core.shape, np.int64)
    nd = np.zeros(core.shape, np.int64)
    for i in range(0, 16, 4):
        dv = FAST_RING_DV[i]
        du = FAST_RING_DU[i]
        shifted = pixels[3 + dv:h - 3 + dv, 3 + du:w - 3 + du]
        nb += shifted > hi
        nd += shifted < lo
    ys, xs = np.nonzero((nb >= need) | (nd >= need))
    ring = np.empty(16, np.float64)
    for k in range(ys.shape[0]):
        y = int(ys[k]) + 3
        x = int(xs[k]) + 3
        for i in range(16):
            ring[i] = pixels[y + FAST_RING_DV[i], x + FAST_RING_DU[i]]
        score[y, x] = _fast_arc_score_src(ring, pixels[y, x], threshold, arc_len)
    return score


# ---------------------------------------------------------------------------
# non-max suppression keep mask
#
# A pixel survives when its response is >= threshold and beats every
# neighbour in the (2r+1)^2 square: strictly greater, or equal while the
# neighbour comes later in raster order (deterministic tie-break).

def _nms_keep_src(resp, radius, threshold):
    h, w = resp.shape
    keep = np.zeros((h, w), np.bool_)
    for y in range(h):
        for x in range(w):
            v = resp[y, x]
            if v < threshold:
                continue
            ok = True
            for dv in range(-radius, radius + 1):
                ny = y + dv
                if ny < 0 or ny >= h:
                    continue
                for du in range(-radius, radius + 1):
                    if dv == 0 and du == 0:
                        continue
                    nx = x + du
                    if nx < 0 or nx >= w:
                        continue
                    nv = resp[ny, nx]
                    if nv > v or (nv == v and (dv < 0 or (dv == 0 and du < 0))):
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                keep[y, x] = True
    return keep


def _nms_keep_np(resp, radius, threshold):
    h, w = resp.shape
    keep = resp >= threshold
    for dv in range(-radius, radius + 1):
        for du in range(-radius, radius + 1):
            if dv == 0 and du == 0:
                continue
            y0 = max(0, -dv)
            y1 = min(h, h - dv)
            x0 = max(0, -du)
            x1 = min(w, w - du)
            if y0 >= y1 or x0 >= x1:
                continue
            a = resp[y0:y1, x0:x1]
            b = resp[y0 + dv:y1 + dv, x0 + du:x1 + du]
            later = dv > 0 or (dv == 0 and du > 0)
            keep[y0:y1, x0:x1] &= (a >= b) if later else (a > b)
    return keep


# ---------------------------------------------------------------------------
# backend dispatch

if _HAVE_NUMBA:
    integral = _njit(cache=True)(_integral_src)
    window_exact = _njit(cache=True)(_window_exact_src)
    window_taylor = _njit(cache=True)(_window_taylor_src)
    window_churn_exact = _njit(cache=True)(_window_churn_exact_src)
    window_churn_taylor = _njit(cache=True)(_window_churn_taylor_src)
    tensor_sums = _njit(cache=True)(_tensor_src)
    susan_score_plane = _njit(cache=True)(_susan_src)
    _fast_arc_score = _njit(cache=True)(_fast_arc_score_src)
    fast_score_plane = _njit(cache=True)(_fast_src)
    nms_keep = _njit(cache=True)(_nms_keep_src)
else:
    integral = _integral_np
    window_exact = _window_exact_np
    window_taylor = _window_taylor_np
    window_churn_exact = _window_churn_exact_np
    window_churn_taylor = _window_churn_taylor_np
    tensor_sums = _tensor_np
    susan_score_plane = _susan_np
    _fast_arc_score = _fast_arc_score_src
    fast_score_plane = _fast_np
    nms_keep = _nms_keep_np


def warm_up() -> None:
    """Trigger compilation of every kernel (no-op on the numpy backend)."""
    img = np.arange(64, dtype=np.float64).reshape(8, 8)
    coefs = np.array([1.0, 1.0, 0.5])
    integral(img)
    window_exact(1, 0.5)
    window_taylor(1, 0.5, coefs, True)
    window_churn_exact(1, 1, 0.5)
    window_churn_taylor(1, 1, 0.5, coefs, True)
    tensor_sums(img, img, img, window_exact(1, 0.5))
    susan_score_plane(img, np.array([1, -1], np.int64), np.array([0, 0], np.int64), 1, 10.0, 1.0)
    fast_score_plane(np.zeros((8, 8)), 10.0, 12)
    nms_keep(img, 1, 0.5)
