"""Benchmark the compiled kernels against the pure-numpy fallbacks.

Run with:

    python3 benchmarks/bench_kernels.py

Both implementations are imported directly, so a single run compares them
side by side. When LOTKIT_NO_NUMBA=1 is set (or numba is unavailable) only
the fallback paths are timed.
"""

from __future__ import annotations

import time

import numpy as np

from lotkit import kernels
from lotkit.kernels import NUMBA_ENABLED, _clip_areas_batch_loops, _warp_bilinear_numpy


def _timeit(fn, *args, repeat: int = 3) -> float:
    fn(*args)  # warm up (triggers JIT compilation on the numba path)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def _report(title: str, rows: list[tuple[str, float]]) -> None:
    print(f"\n{title}")
    baseline = rows[-1][1]
    for name, seconds in rows:
        print(f"  {name:<16} {seconds * 1e3:9.2f} ms   ({baseline / seconds:5.2f}x vs fallback)")


def bench_clip_areas(n: int = 100_000) -> None:
    rng = np.random.default_rng(0)
    centers = rng.uniform(10, 90, size=(n, 1, 2))
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=(n, 4)), axis=1)
    radii = rng.uniform(2, 8, size=(n, 4))
    quads = centers + np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=-1)
    boxes = np.concatenate([centers[:, 0] - 5.0, centers[:, 0] + 5.0], axis=1)
    qxs = np.ascontiguousarray(quads[:, :, 0])
    qys = np.ascontiguousarray(quads[:, :, 1])
    out = np.empty(n)

    rows = []
    if NUMBA_ENABLED:
        rows.append(("numba batch", _timeit(kernels._clip_areas_batch, qxs, qys, boxes, out)))
    # the fallback loops in Python over the per-pair kernel
    rows.append(("python loop", _timeit(_clip_areas_batch_loops, qxs, qys, boxes, out)))
    _report(f"clip_areas ({n:,} quad/box pairs)", rows)


def bench_warp_bilinear(size: int = 1024) -> None:
    rng = np.random.default_rng(1)
    img = rng.random((size, size, 3))
    theta = np.deg2rad(10.0)
    c, s = np.cos(theta), np.sin(theta)
    cx = size / 2.0
    mat = np.array([
        [c, s, cx - c * cx - s * cx],
        [-s, c, cx + s * cx - c * cx],
        [0.0, 0.0, 1.0],
    ])
    out = np.empty_like(img)

    rows = []
    if NUMBA_ENABLED:
        rows.append(("numba", _timeit(kernels._warp_bilinear, img, mat, out)))
    rows.append(("numpy", _timeit(_warp_bilinear_numpy, img, mat, out)))
    _report(f"warp_bilinear ({size}x{size}x3 rotation)", rows)


if __name__ == "__main__":
    print(f"numba path enabled: {NUMBA_ENABLED}")
    bench_clip_areas()
    bench_warp_bilinear()
