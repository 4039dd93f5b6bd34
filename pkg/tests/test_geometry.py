import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lotkit.geometry import (
    AxisAlignedBox,
    ConvexQuad,
    GeometryError,
    Homography3x3,
    Point2D,
    circumscribe,
    intersection_area,
    polygon_area,
    solve_homography,
    validate_quad,
)

from conftest import (
    mc_intersection_area,
    mc_polygon_area,
    random_convex_quad,
    random_overlapping_box,
)


class TestPolygonArea:
    def test_unit_square(self):
        assert polygon_area([(0, 0), (1, 0), (1, 1), (0, 1)]) == 1.0

    def test_rectangle(self):
        assert polygon_area([(0, 0), (2, 0), (2, 1), (0, 1)]) == 2.0

    def test_generic_quad_against_monte_carlo(self, rng):
        quad = np.array([(0, 0), (4, 1), (5, 4), (1, 3)], dtype=float)
        expected = mc_polygon_area(quad, 10**6, rng)
        assert polygon_area(quad) == pytest.approx(expected, rel=1e-2)

    def test_orientation_independent(self, rng):
        for _ in range(20):
            quad = random_convex_quad(rng).as_array()
            fwd = polygon_area(quad)
            assert polygon_area(quad[::-1]) == pytest.approx(fwd, abs=1e-12)
            for shift in range(4):
                assert polygon_area(np.roll(quad, shift, axis=0)) == pytest.approx(fwd, abs=1e-12)

    def test_too_few_vertices(self):
        with pytest.raises(GeometryError):
            polygon_area([(0, 0), (1, 1)])

    def test_non_finite(self):
        with pytest.raises(GeometryError):
            polygon_area([(0, 0), (1, 0), (float("nan"), 1)])


class TestValidateQuad:
    def test_reorders_unit_square(self):
        quad = validate_quad([(1, 1), (0, 0), (0, 1), (1, 0)])
        assert [(p.x, p.y) for p in quad.vertices] == [(0, 0), (1, 0), (1, 1), (0, 1)]

    def test_collinear_rejected(self):
        with pytest.raises(GeometryError, match="degenerate"):
            validate_quad([(0, 0), (1, 0), (2, 0), (3, 0)])

    def test_dart_rejected(self):
        # (1,1) lies inside the triangle of the other three points, so every
        # cyclic order has a reflex vertex (cross products change sign)
        with pytest.raises(GeometryError, match="non-convex"):
            validate_quad([(0, 0), (4, 0), (1, 1), (0, 4)])

    def test_duplicate_vertex_rejected(self):
        with pytest.raises(GeometryError, match="degenerate"):
            validate_quad([(0, 0), (1, 0), (1, 0), (0, 1)])

    def test_canonical_start_and_orientation(self, rng):
        for _ in range(50):
            quad = random_convex_quad(rng)
            verts = quad.vertices
            smallest = min(verts, key=lambda p: (p.x, p.y))
            assert verts[0] == smallest
            # positive shoelace sign == clockwise on screen with y down
            arr = quad.as_array()
            signed = 0.0
            for i in range(4):
                x1, y1 = arr[i]
                x2, y2 = arr[(i + 1) % 4]
                signed += x1 * y2 - x2 * y1
            assert signed > 0

    def test_canonicalization_is_order_insensitive(self, rng):
        for _ in range(20):
            quad = random_convex_quad(rng)
            arr = quad.as_array()
            perm = rng.permutation(4)
            assert validate_quad(arr[perm]) == quad


class TestIntersectionArea:
    def test_disjoint(self, unit_quad):
        box = AxisAlignedBox.from_bounds(5, 5, 6, 6)
        assert intersection_area(unit_quad, box) == 0.0

    def test_axis_aligned_overlap(self):
        quad = validate_quad([(0, 0), (4, 0), (4, 4), (0, 4)])
        box = AxisAlignedBox.from_bounds(2, 2, 6, 6)
        assert intersection_area(quad, box) == 4.0

    def test_generic_pair_against_monte_carlo(self, rng):
        quad = validate_quad([(0, 0), (4, 1), (5, 4), (1, 3)])
        box = AxisAlignedBox.from_bounds(1, 1, 4, 3)
        expected = mc_intersection_area(quad.as_array(), (1, 1, 4, 3), 10**6, rng)
        assert intersection_area(quad, box) == pytest.approx(expected, rel=1e-2)

    def test_box_inside_quad(self):
        quad = validate_quad([(0, 0), (10, 0), (10, 10), (0, 10)])
        box = AxisAlignedBox.from_bounds(2, 2, 5, 5)
        assert intersection_area(quad, box) == pytest.approx(box.area, abs=1e-12)

    def test_quad_inside_box(self, rng):
        quad = random_convex_quad(rng)
        box = AxisAlignedBox.from_bounds(-1000, -1000, 1000, 1000)
        assert intersection_area(quad, box) == pytest.approx(quad.area, abs=1e-9)

    def test_bounded_by_both_areas(self, rng):
        for _ in range(200):
            quad = random_convex_quad(rng)
            box = random_overlapping_box(quad, rng)
            overlap = intersection_area(quad, box)
            assert 0.0 <= overlap <= min(quad.area, box.area) + 1e-9

    def test_translation_invariant(self, rng):
        for _ in range(50):
            quad = random_convex_quad(rng)
            box = random_overlapping_box(quad, rng)
            base = intersection_area(quad, box)
            dx, dy = rng.uniform(-500, 500, 2)
            moved_quad = ConvexQuad(tuple(Point2D(p.x + dx, p.y + dy) for p in quad.vertices))
            moved_box = AxisAlignedBox(Point2D(box.min.x + dx, box.min.y + dy),
                                       Point2D(box.max.x + dx, box.max.y + dy))
            assert intersection_area(moved_quad, moved_box) == pytest.approx(base, abs=1e-9)


class TestCircumscribe:
    def test_identity_on_square(self, unit_quad):
        box = circumscribe(unit_quad)
        assert (box.min.x, box.min.y, box.max.x, box.max.y) == (0, 0, 1, 1)

    def test_coordinate_minmax(self):
        quad = validate_quad([(1, 1), (5, 1), (6, 4), (0, 4)])
        box = circumscribe(quad)
        assert (box.min.x, box.min.y, box.max.x, box.max.y) == (0, 1, 6, 4)

    def test_contains_all_vertices(self, rng):
        for _ in range(100):
            quad = random_convex_quad(rng)
            box = circumscribe(quad)
            for p in quad.vertices:
                assert box.min.x <= p.x <= box.max.x
                assert box.min.y <= p.y <= box.max.y
            assert box.area >= quad.area
            # the box corners themselves form a valid quad
            validate_quad(box.corners())


class TestSolveHomography:
    UNIT = [(0, 0), (1, 0), (1, 1), (0, 1)]

    def test_identity(self):
        h = solve_homography(self.UNIT, self.UNIT)
        np.testing.assert_allclose(h.matrix, np.eye(3), atol=1e-12)

    def test_pure_scale(self):
        h = solve_homography(self.UNIT, [(0, 0), (2, 0), (2, 2), (0, 2)])
        np.testing.assert_allclose(h.matrix, np.diag([2.0, 2.0, 1.0]), atol=1e-12)

    def test_quad_to_square_roundtrip(self, rng):
        square = [(0, 0), (224, 0), (224, 224), (0, 224)]
        for _ in range(50):
            quad = random_convex_quad(rng)
            h = solve_homography([(p.x, p.y) for p in quad.vertices], square)
            for p, (qx, qy) in zip(quad.vertices, square):
                mapped = h.apply(p)
                assert math.hypot(mapped.x - qx, mapped.y - qy) < 1e-9

    def test_inverse_roundtrip(self, rng):
        quad = random_convex_quad(rng)
        h = solve_homography([(p.x, p.y) for p in quad.vertices],
                             [(0, 0), (224, 0), (224, 224), (0, 224)])
        hinv = h.inverse()
        pts = rng.uniform(0, 224, size=(100, 2))
        for x, y in pts:
            p = hinv.apply(Point2D(x, y))
            q = h.apply(p)
            assert math.hypot(q.x - x, q.y - y) < 1e-6

    def test_collinear_rejected(self):
        with pytest.raises(GeometryError):
            solve_homography([(0, 0), (1, 1), (2, 2), (3, 3)], self.UNIT)

    def test_normalization_invariant(self):
        with pytest.raises(GeometryError):
            Homography3x3((1, 0, 0, 0, 1, 0, 0, 0, 2.0))


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(1, 40), st.floats(1, 40))
def test_box_quad_duality(x, y, w, h):
    """A box viewed as a quad has the same area and self-intersection."""
    box = AxisAlignedBox.from_bounds(x, y, x + w, y + h)
    quad = validate_quad(box.corners())
    assert quad.area == pytest.approx(box.area, rel=1e-12)
    assert intersection_area(quad, box) == pytest.approx(box.area, rel=1e-9)
