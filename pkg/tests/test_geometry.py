import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdtdijkstra.geometry import (DegenerateSegment, Overlap, Point, Segment, min_sum_on_segment,
                                  orient, point_in_convex_polygon, polyline_length, segment_intersection)

UNIT = [(0, 0), (1, 0), (1, 1), (0, 1)]


@pytest.mark.parametrize("a,b,c,s", [
    ((0, 0), (1, 0), (0, 1), 1),
    ((0, 0), (1, 0), (2, 0), 0),
    ((0, 0), (0, 1), (1, 0), -1),
])
def test_orient(a, b, c, s):
    assert orient(a, b, c) == s


def test_segment_intersection_cases():
    assert segment_intersection(Segment((0, -1), (0, 1)), Segment((-1, 0), (1, 0))) == (0, 0)
    assert segment_intersection(Segment((0, 0), (1, 0)), Segment((0, 1), (1, 1))) is None
    ov = segment_intersection(Segment((0, 0), (2, 0)), Segment((1, 0), (3, 0)))
    assert isinstance(ov, Overlap)
    assert {tuple(p) for p in ov.span} == {(1.0, 0.0), (2.0, 0.0)}


def test_touching_endpoint_is_a_point():
    assert segment_intersection(Segment((0, 0), (1, 0)), Segment((1, 0), (1, 5))) == (1, 0)


@pytest.mark.parametrize("pts,length", [
    ([(0, 0), (3, 4)], 5.0),
    ([(2, 2)], 0.0),
    ([(0, 0), (1, 0), (1, 1), (0, 1)], 3.0),
])
def test_polyline_length(pts, length):
    assert polyline_length(pts) == pytest.approx(length)


@pytest.mark.parametrize("p,inside", [((0.5, 0.5), True), ((1, 0.5), True), ((2, 0), False)])
def test_point_in_unit_square(p, inside):
    assert point_in_convex_polygon(p, UNIT) is inside


@pytest.mark.parametrize("a,b,seg,want", [
    ((0, -1), (0, 1), ((-1, 0), (1, 0)), (0, 0)),
    ((2, -1), (2, 1), ((-1, 0), (1, 0)), (1, 0)),
    ((0, 0), (2, 2), ((0, 2), (2, 0)), (1, 1)),
])
def test_min_sum_examples(a, b, seg, want):
    got = min_sum_on_segment(a, b, Segment(*seg))
    assert got == pytest.approx(want, abs=1e-12)


def test_min_sum_rejects_degenerate():
    with pytest.raises(DegenerateSegment):
        min_sum_on_segment((0, 0), (1, 1), Segment((2, 2), (2, 2)))


def test_min_sum_tie_prefers_a():
    # both endpoints give the same sum; the answer is seg.a
    got = min_sum_on_segment((0, 5), (0, 5), Segment((-1, 0), (1, 0)))
    assert got == pytest.approx((0, 0))
    got = min_sum_on_segment((-3, 1), (3, 1), Segment((-1, 0), (1, 0)))
    assert got == pytest.approx((0, 0))


coord = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord, coord, coord, coord, coord)
def test_min_sum_beats_dense_sampling(ax, ay, bx, by, px, py, qx, qy):
    if math.hypot(qx - px, qy - py) < 1e-3:
        return
    seg = Segment(Point(px, py), Point(qx, qy))
    x = min_sum_on_segment((ax, ay), (bx, by), seg)
    f = math.hypot(ax - x[0], ay - x[1]) + math.hypot(bx - x[0], by - x[1])
    t = np.linspace(0, 1, 10_000)[:, None]
    s = np.array([px, py]) + t * np.array([qx - px, qy - py])
    g = np.hypot(*(s - (ax, ay)).T) + np.hypot(*(s - (bx, by)).T)
    assert g.min() >= f - 1e-9 * (math.hypot(ax - bx, ay - by) + 1)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(coord, coord), min_size=2, max_size=8), st.floats(0.01, 0.99))
def test_collinear_insertion_keeps_length(pts, t):
    a, b = np.array(pts[0]), np.array(pts[1])
    more = [pts[0], tuple(a + t * (b - a))] + pts[1:]
    assert polyline_length(more) == pytest.approx(polyline_length(pts), rel=1e-12, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(coord, coord, coord, coord, coord, coord)
def test_orient_antisymmetric(ax, ay, bx, by, cx, cy):
    assert orient((ax, ay), (bx, by), (cx, cy)) == -orient((ax, ay), (cx, cy), (bx, by))
