import numpy as np
import pytest

from lotkit.annotations import (
    ImageAnnotation,
    LotAnnotation,
    VisualTag,
)
from lotkit.geometry import AxisAlignedBox, Point2D, validate_quad


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose the call-phase report so teardown fixtures can see pass/fail
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)


def points_in_quad(px, py, quad_arr):
    """Vectorized membership test for a convex quad in canonical order."""
    inside = np.ones_like(px, dtype=bool)
    for i in range(4):
        x1, y1 = quad_arr[i]
        x2, y2 = quad_arr[(i + 1) % 4]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        inside &= cross >= 0.0
    return inside


def mc_intersection_area(quad_arr, box_bounds, n_samples, rng):
    """Monte-Carlo estimate of quad-box overlap: uniform sampling over the
    intersection of the quad's bounding box and the box, joint membership."""
    xmin, ymin, xmax, ymax = box_bounds
    rx0 = max(quad_arr[:, 0].min(), xmin)
    ry0 = max(quad_arr[:, 1].min(), ymin)
    rx1 = min(quad_arr[:, 0].max(), xmax)
    ry1 = min(quad_arr[:, 1].max(), ymax)
    if rx0 >= rx1 or ry0 >= ry1:
        return 0.0
    px = rng.uniform(rx0, rx1, n_samples)
    py = rng.uniform(ry0, ry1, n_samples)
    hits = points_in_quad(px, py, quad_arr)
    return (rx1 - rx0) * (ry1 - ry0) * hits.mean()


def mc_polygon_area(quad_arr, n_samples, rng):
    """Monte-Carlo estimate of a convex quad's area over its bounding box."""
    rx0, ry0 = quad_arr.min(axis=0)
    rx1, ry1 = quad_arr.max(axis=0)
    px = rng.uniform(rx0, rx1, n_samples)
    py = rng.uniform(ry0, ry1, n_samples)
    return (rx1 - rx0) * (ry1 - ry0) * points_in_quad(px, py, quad_arr).mean()


def random_convex_quad(rng, scale=100.0):
    """4 points on a random ellipse in angular order: always strictly convex."""
    cx, cy = rng.uniform(0.2 * scale, 0.8 * scale, 2)
    rx_, ry_ = rng.uniform(0.1 * scale, 0.2 * scale, 2)
    while True:
        angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, 4))
        gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * np.pi]]))
        if gaps.min() > 0.35:
            break
    pts = [(cx + rx_ * np.cos(a), cy + ry_ * np.sin(a)) for a in angles]
    return validate_quad(pts)


def random_overlapping_box(quad, rng):
    """A box whose center sits inside the quad, with sides comparable to the
    quad's extents, so Monte-Carlo overlap fractions stay well away from 0."""
    arr = quad.as_array()
    cx, cy = arr.mean(axis=0)
    wx = arr[:, 0].max() - arr[:, 0].min()
    wy = arr[:, 1].max() - arr[:, 1].min()
    bw = rng.uniform(0.4, 1.2) * wx
    bh = rng.uniform(0.4, 1.2) * wy
    jx = rng.uniform(-0.2, 0.2) * wx
    jy = rng.uniform(-0.2, 0.2) * wy
    return AxisAlignedBox(
        Point2D(cx + jx - bw / 2, cy + jy - bh / 2),
        Point2D(cx + jx + bw / 2, cy + jy + bh / 2),
    )


def random_annotation(rng, image=None, n_lots=None):
    """A random valid quad-form ImageAnnotation."""
    width, height = 640, 480
    if image is None:
        image = f"images/{rng.integers(1 << 48):012x}.jpg"
    if n_lots is None:
        n_lots = int(rng.integers(0, 5))
    lots = []
    for i in range(n_lots):
        quad = random_convex_quad(rng, scale=min(width, height))
        occupied = [True, False, None][int(rng.integers(3))]
        lots.append(LotAnnotation(id=f"lot_{i}", quad=quad, occupied=occupied))
    n_tags = int(rng.integers(0, 4))
    tags = frozenset(rng.choice([t for t in VisualTag], size=n_tags, replace=False))
    return ImageAnnotation(image=image, width=width, height=height,
                           tags=tags, lots=tuple(lots))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_quad():
    return validate_quad([(0, 0), (1, 0), (1, 1), (0, 1)])
