"""Exact 2-D geometry for parking-lot outlines.

Coordinates are pixels with the origin at the top-left corner and y growing
downward. Quadrangles are kept in a canonical vertex order: the
lexicographically smallest vertex (x first, then y) comes first and the rest
follow clockwise on screen, which corresponds to positive shoelace sign in
this axis convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernels import clip_area

AREA_EPSILON = 1e-9  # px^2; anything flatter than this is degenerate


class GeometryError(ValueError):
    """Invalid or degenerate geometric input."""


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinate ({self.x}, {self.y})")


@dataclass(frozen=True)
class AxisAlignedBox:
    min: Point2D
    max: Point2D

    def __post_init__(self):
        if not (self.min.x < self.max.x and self.min.y < self.max.y):
            raise GeometryError(
                f"box min {self.min} must be strictly below max {self.max} on both axes"
            )

    @classmethod
    def from_bounds(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "AxisAlignedBox":
        return cls(Point2D(xmin, ymin), Point2D(xmax, ymax))

    @property
    def width(self) -> float:
        return self.max.x - self.min.x

    @property
    def height(self) -> float:
        return self.max.y - self.min.y

    @property
    def area(self) -> float:
        return self.width * self.height

    def corners(self) -> tuple[Point2D, Point2D, Point2D, Point2D]:
        """Canonical-order quad corners of the box."""
        return (
            Point2D(self.min.x, self.min.y),
            Point2D(self.max.x, self.min.y),
            Point2D(self.max.x, self.max.y),
            Point2D(self.min.x, self.max.y),
        )


@dataclass(frozen=True)
class ConvexQuad:
    """Convex quadrangle in canonical vertex order. Build via :func:`validate_quad`."""

    vertices: tuple[Point2D, Point2D, Point2D, Point2D]

    def __post_init__(self):
        if len(self.vertices) != 4:
            raise GeometryError("quad requires exactly 4 vertices")

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    def as_array(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.vertices], dtype=np.float64)


@dataclass(frozen=True)
class Homography3x3:
    """3x3 projective transform, row-major, normalized so coefficients[8] == 1."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) != 9:
            raise GeometryError("homography requires 9 coefficients")
        if abs(self.coefficients[8] - 1.0) > 1e-12:
            raise GeometryError("homography must be normalized to h33 == 1")
        if abs(np.linalg.det(self.matrix)) <= 1e-12:
            raise GeometryError("homography is singular")

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "Homography3x3":
        mat = np.asarray(mat, dtype=np.float64)
        if abs(mat[2, 2]) <= 1e-12:
            raise GeometryError("cannot normalize homography with vanishing h33")
        return cls(tuple(float(v) for v in (mat / mat[2, 2]).ravel()))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=np.float64).reshape(3, 3)

    def apply(self, p: Point2D) -> Point2D:
        m = self.matrix
        d = m[2, 0] * p.x + m[2, 1] * p.y + m[2, 2]
        return Point2D(
            (m[0, 0] * p.x + m[0, 1] * p.y + m[0, 2]) / d,
            (m[1, 0] * p.x + m[1, 1] * p.y + m[1, 2]) / d,
        )

    def inverse(self) -> "Homography3x3":
        return Homography3x3.from_matrix(np.linalg.inv(self.matrix))


def _signed_area(points: list[tuple[float, float]]) -> float:
    acc = 0.0
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return 0.5 * acc


def polygon_area(vertices) -> float:
    """Absolute shoelace area of a simple polygon given as ordered vertices."""
    pts = [(p.x, p.y) if isinstance(p, Point2D) else (float(p[0]), float(p[1])) for p in vertices]
    if len(pts) < 3:
        raise GeometryError(f"polygon needs at least 3 vertices, got {len(pts)}")
    for x, y in pts:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise GeometryError(f"non-finite coordinate ({x}, {y})")
    return abs(_signed_area(pts))


def validate_quad(points) -> ConvexQuad:
    """Canonicalize 4 arbitrary-order points into a ConvexQuad.

    Rejects degenerate (area <= 1e-9 px^2) and non-convex configurations.
    """
    pts = [p if isinstance(p, Point2D) else Point2D(float(p[0]), float(p[1])) for p in points]
    if len(pts) != 4:
        raise GeometryError(f"quad requires exactly 4 points, got {len(pts)}")
    if len({(p.x, p.y) for p in pts}) != 4:
        raise GeometryError("degenerate quad: duplicate vertices")
    # Order around the centroid; a convex vertex set admits exactly this
    # cyclic order (up to rotation/reflection).
    cx = sum(p.x for p in pts) / 4.0
    cy = sum(p.y for p in pts) / 4.0
    ordered = sorted(pts, key=lambda p: math.atan2(p.y - cy, p.x - cx))
    signed = _signed_area([(p.x, p.y) for p in ordered])
    if abs(signed) <= AREA_EPSILON:
        raise GeometryError("degenerate quad: area below 1e-9 px^2")
    crosses = []
    for i in range(4):
        a, b, c = ordered[i], ordered[(i + 1) % 4], ordered[(i + 2) % 4]
        crosses.append((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
    if any(cr * signed <= 0 for cr in crosses):
        raise GeometryError("non-convex quad")
    if signed < 0:
        ordered.reverse()
    start = min(range(4), key=lambda i: (ordered[i].x, ordered[i].y))
    ordered = ordered[start:] + ordered[:start]
    return ConvexQuad(tuple(ordered))


def intersection_area(quad: ConvexQuad, box: AxisAlignedBox) -> float:
    """Overlap area of a convex quad and an axis-aligned box (0 when disjoint)."""
    arr = quad.as_array()
    return clip_area(arr[:, 0], arr[:, 1], box.min.x, box.min.y, box.max.x, box.max.y)


def circumscribe(quad: ConvexQuad) -> AxisAlignedBox:
    """Smallest axis-aligned box containing the quad."""
    xs = [p.x for p in quad.vertices]
    ys = [p.y for p in quad.vertices]
    return AxisAlignedBox(Point2D(min(xs), min(ys)), Point2D(max(xs), max(ys)))


def solve_homography(src, dst) -> Homography3x3:
    """Solve the 4-point correspondence src -> dst as an 8x8 linear system."""
    s = [p if isinstance(p, Point2D) else Point2D(float(p[0]), float(p[1])) for p in src]
    d = [p if isinstance(p, Point2D) else Point2D(float(p[0]), float(p[1])) for p in dst]
    if len(s) != 4 or len(d) != 4:
        raise GeometryError("homography needs exactly 4 point correspondences")
    a = np.zeros((8, 8), dtype=np.float64)
    b = np.zeros(8, dtype=np.float64)
    for i, (p, q) in enumerate(zip(s, d)):
        a[2 * i] = [p.x, p.y, 1.0, 0.0, 0.0, 0.0, -p.x * q.x, -p.y * q.x]
        a[2 * i + 1] = [0.0, 0.0, 0.0, p.x, p.y, 1.0, -p.x * q.y, -p.y * q.y]
        b[2 * i] = q.x
        b[2 * i + 1] = q.y
    try:
        h = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise GeometryError(f"singular correspondence (collinear points?): {exc}") from None
    hom = Homography3x3(tuple(float(v) for v in h) + (1.0,))
    for p, q in zip(s, d):
        mapped = hom.apply(p)
        if math.hypot(mapped.x - q.x, mapped.y - q.y) > 1e-9 * max(1.0, abs(q.x), abs(q.y)):
            raise GeometryError("ill-conditioned correspondence: residual above 1e-9 px")
    return hom
