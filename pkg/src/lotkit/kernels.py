"""Numeric inner loops: convex clipping area and bilinear homography warps.

Two execution paths are provided. The default compiles the scalar loops with
numba's ``@njit``; setting the environment variable ``LOTKIT_NO_NUMBA=1``
before import selects a pure-numpy fallback (vectorized where it matters,
plain Python for the tiny clipping loop). Both paths implement identical
arithmetic; ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("LOTKIT_NO_NUMBA", "").lower() not in ("1", "true", "yes")

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False


def _clip_area_loops(qx, qy, xmin, ymin, xmax, ymax):
    # Sutherland-Hodgman clip of a convex quad against the 4 half-planes of an
    # axis-aligned box. A convex polygon clipped by 4 lines has at most 8
    # vertices; fixed buffers keep this allocation-free under numba.
    px = np.empty(9, dtype=np.float64)
    py = np.empty(9, dtype=np.float64)
    nx = np.empty(9, dtype=np.float64)
    ny = np.empty(9, dtype=np.float64)
    n = 4
    for i in range(4):
        px[i] = qx[i]
        py[i] = qy[i]
    for side in range(4):
        m = 0
        for i in range(n):
            j = i + 1
            if j == n:
                j = 0
            x1, y1 = px[i], py[i]
            x2, y2 = px[j], py[j]
            if side == 0:  # x >= xmin
                in1 = x1 >= xmin
                in2 = x2 >= xmin
            elif side == 1:  # x <= xmax
                in1 = x1 <= xmax
                in2 = x2 <= xmax
            elif side == 2:  # y >= ymin
                in1 = y1 >= ymin
                in2 = y2 >= ymin
            else:  # y <= ymax
                in1 = y1 <= ymax
                in2 = y2 <= ymax
            if in1:
                nx[m] = x1
                ny[m] = y1
                m += 1
            if in1 != in2:
                if side == 0:
                    t = (xmin - x1) / (x2 - x1)
                    nx[m] = xmin
                    ny[m] = y1 + t * (y2 - y1)
                elif side == 1:
                    t = (xmax - x1) / (x2 - x1)
                    nx[m] = xmax
                    ny[m] = y1 + t * (y2 - y1)
                elif side == 2:
                    t = (ymin - y1) / (y2 - y1)
                    nx[m] = x1 + t * (x2 - x1)
                    ny[m] = ymin
                else:
                    t = (ymax - y1) / (y2 - y1)
                    nx[m] = x1 + t * (x2 - x1)
                    ny[m] = ymax
                m += 1
        n = m
        if n == 0:
            return 0.0
        for i in range(n):
            px[i] = nx[i]
            py[i] = ny[i]
    acc = 0.0
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        acc += px[i] * py[j] - px[j] * py[i]
    return abs(acc) * 0.5


def _clip_areas_batch_loops(qxs, qys, boxes, out):
    for k in range(qxs.shape[0]):
        out[k] = _clip_area_jit(qxs[k], qys[k], boxes[k, 0], boxes[k, 1], boxes[k, 2], boxes[k, 3])


def _warp_bilinear_loops(img, mat, out):
    # mat maps output pixel-center homogeneous coords to source pixel-center
    # coords; samples outside the source are treated as constant 0.
    h, w = img.shape[0], img.shape[1]
    out_h, out_w = out.shape[0], out.shape[1]
    for i in range(out_h):
        for j in range(out_w):
            ox = j + 0.5
            oy = i + 0.5
            d = mat[2, 0] * ox + mat[2, 1] * oy + mat[2, 2]
            sx = (mat[0, 0] * ox + mat[0, 1] * oy + mat[0, 2]) / d - 0.5
            sy = (mat[1, 0] * ox + mat[1, 1] * oy + mat[1, 2]) / d - 0.5
            x0 = int(np.floor(sx))
            y0 = int(np.floor(sy))
            fx = sx - x0
            fy = sy - y0
            for c in range(img.shape[2]):
                v = 0.0
                if 0 <= x0 < w and 0 <= y0 < h:
                    v += (1.0 - fx) * (1.0 - fy) * img[y0, x0, c]
                if 0 <= x0 + 1 < w and 0 <= y0 < h:
                    v += fx * (1.0 - fy) * img[y0, x0 + 1, c]
                if 0 <= x0 < w and 0 <= y0 + 1 < h:
                    v += (1.0 - fx) * fy * img[y0 + 1, x0, c]
                if 0 <= x0 + 1 < w and 0 <= y0 + 1 < h:
                    v += fx * fy * img[y0 + 1, x0 + 1, c]
                out[i, j, c] = v


def _warp_bilinear_numpy(img, mat, out):
    h, w = img.shape[0], img.shape[1]
    out_h, out_w = out.shape[0], out.shape[1]
    ox, oy = np.meshgrid(np.arange(out_w) + 0.5, np.arange(out_h) + 0.5)
    d = mat[2, 0] * ox + mat[2, 1] * oy + mat[2, 2]
    sx = (mat[0, 0] * ox + mat[0, 1] * oy + mat[0, 2]) / d - 0.5
    sy = (mat[1, 0] * ox + mat[1, 1] * oy + mat[1, 2]) / d - 0.5
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    acc = np.zeros((out_h, out_w, img.shape[2]), dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            sample = img[np.clip(yi, 0, h - 1), np.clip(xi, 0, w - 1)]
            sample = np.where(valid[..., None], sample, 0.0)
            wx = fx if dx == 1 else 1.0 - fx
            wy = fy if dy == 1 else 1.0 - fy
            acc += wx * wy * sample
    out[...] = acc


if NUMBA_ENABLED:
    _clip_area_jit = njit(cache=True)(_clip_area_loops)
    _clip_areas_batch = njit(cache=True)(_clip_areas_batch_loops)
    _warp_bilinear = njit(cache=True)(_warp_bilinear_loops)
else:
    _clip_area_jit = _clip_area_loops
    _clip_areas_batch = _clip_areas_batch_loops
    _warp_bilinear = _warp_bilinear_numpy


def clip_area(qx: np.ndarray, qy: np.ndarray, xmin: float, ymin: float, xmax: float, ymax: float) -> float:
    """Area of a convex quad clipped to an axis-aligned box."""
    return float(_clip_area_jit(np.ascontiguousarray(qx, dtype=np.float64),
                                np.ascontiguousarray(qy, dtype=np.float64),
                                float(xmin), float(ymin), float(xmax), float(ymax)))


def clip_areas(quads: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Batched :func:`clip_area`.

    quads: (N, 4, 2) vertex array; boxes: (N, 4) as xmin, ymin, xmax, ymax.
    """
    quads = np.ascontiguousarray(quads, dtype=np.float64)
    boxes = np.ascontiguousarray(boxes, dtype=np.float64)
    out = np.empty(quads.shape[0], dtype=np.float64)
    if NUMBA_ENABLED:
        _clip_areas_batch(np.ascontiguousarray(quads[:, :, 0]),
                          np.ascontiguousarray(quads[:, :, 1]), boxes, out)
    else:
        for k in range(quads.shape[0]):
            out[k] = _clip_area_jit(quads[k, :, 0], quads[k, :, 1],
                                    boxes[k, 0], boxes[k, 1], boxes[k, 2], boxes[k, 3])
    return out


def warp_bilinear(img: np.ndarray, mat: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Warp ``img`` through the output-to-source transform ``mat``.

    Bilinear sampling on pixel centers; out-of-bounds samples read as 0.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    mat = np.ascontiguousarray(mat, dtype=np.float64)
    out = np.empty((out_h, out_w, img.shape[2]), dtype=np.float64)
    _warp_bilinear(img, mat, out)
    return out
