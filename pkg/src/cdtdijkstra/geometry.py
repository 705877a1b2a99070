"""2D primitives shared by the dissection, the encoder and the compression kernel.

All predicates use one absolute tolerance. Callers that know the environment
scale pass ``tol = EPS_REL * diagonal``; the defaults are tuned for unit-scale
inputs.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

EPS_REL = 1e-9


class Point(NamedTuple):
    x: float
    y: float


class Segment(NamedTuple):
    a: Point
    b: Point

    @property
    def length(self) -> float:
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])

    def at(self, t: float) -> Point:
        return Point(self.a[0] + t * (self.b[0] - self.a[0]),
                     self.a[1] + t * (self.b[1] - self.a[1]))


class Overlap(NamedTuple):
    """Collinear intersection of two segments with a shared span."""
    span: Segment


PointLike = Union[Point, Sequence[float], np.ndarray]


class DegenerateSegment(ValueError):
    pass


def as_point(p: PointLike) -> Point:
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"non-finite point {p!r}")
    return Point(x, y)


def cross(o: PointLike, a: PointLike, b: PointLike) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def orient(a: PointLike, b: PointLike, c: PointLike, tol: float = 0.0) -> int:
    """Sign of (b - a) x (c - a); 0 when |cross| <= tol * |b - a|."""
    v = cross(a, b, c)
    scale = tol * math.hypot(b[0] - a[0], b[1] - a[1])
    if v > scale:
        return 1
    if v < -scale:
        return -1
    return 0


def _on_segment(p: PointLike, a: PointLike, b: PointLike, tol: float) -> bool:
    return (min(a[0], b[0]) - tol <= p[0] <= max(a[0], b[0]) + tol
            and min(a[1], b[1]) - tol <= p[1] <= max(a[1], b[1]) + tol)


def segment_intersection(s1: Segment, s2: Segment, tol: float = 0.0
                         ) -> Optional[Union[Point, Overlap]]:
    """Intersection of two closed segments.

    Returns the point for a single-point intersection, ``None`` when disjoint
    and an :class:`Overlap` when the segments are collinear and share a span
    of positive length.
    """
    p, p2 = s1
    q, q2 = s2
    d1 = orient(q, q2, p, tol)
    d2 = orient(q, q2, p2, tol)
    d3 = orient(p, p2, q, tol)
    d4 = orient(p, p2, q2, tol)

    if d1 == d2 == d3 == d4 == 0:
        # collinear: project onto the dominant axis of s1
        ax = 0 if abs(p2[0] - p[0]) >= abs(p2[1] - p[1]) else 1
        lo1, hi1 = sorted((p, p2), key=lambda v: v[ax])
        lo2, hi2 = sorted((q, q2), key=lambda v: v[ax])
        lo = lo1 if lo1[ax] >= lo2[ax] else lo2
        hi = hi1 if hi1[ax] <= hi2[ax] else hi2
        if lo[ax] > hi[ax] + tol:
            return None
        if math.hypot(hi[0] - lo[0], hi[1] - lo[1]) <= tol:
            return as_point(lo)
        return Overlap(Segment(as_point(lo), as_point(hi)))

    if d1 * d2 > 0 or d3 * d4 > 0:
        return None
    # an endpoint lying on the other segment is returned exactly
    for v, d in ((p, d1), (p2, d2), (q, d3), (q2, d4)):
        if d == 0:
            return as_point(v)
    rx, ry = p2[0] - p[0], p2[1] - p[1]
    sx, sy = q2[0] - q[0], q2[1] - q[1]
    den = rx * sy - ry * sx
    t = ((q[0] - p[0]) * sy - (q[1] - p[1]) * sx) / den
    return Point(p[0] + t * rx, p[1] + t * ry)


def polyline_length(vertices) -> float:
    v = np.asarray(vertices, dtype=float).reshape(-1, 2)
    if len(v) < 2:
        return 0.0
    d = np.diff(v, axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def point_in_convex_polygon(p: PointLike, poly, tol: float = 0.0) -> bool:
    """Closed containment test for a CCW convex polygon.

    ``poly`` is a vertex sequence or any object with a ``vertices`` attribute.
    """
    verts = getattr(poly, "vertices", poly)
    n = len(verts)
    px, py = p[0], p[1]
    for i in range(n):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % n]
        c = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        if c < -tol * math.hypot(bx - ax, by - ay):
            return False
    return True


def min_sum_on_segment(a: PointLike, b: PointLike, seg: Segment) -> Point:
    """Point x on ``seg`` minimising |a - x| + |x - b|.

    When a and b sit on opposite sides of the supporting line the answer is the
    crossing of a-b with the line, clamped to the segment. The same weights
    apply to the same-side case through reflection of b, so one formula covers
    both. With a and b both on the line the minimiser set is an interval and
    the point nearest ``seg.a`` is returned.
    """
    p, q = seg
    dx, dy = q[0] - p[0], q[1] - p[1]
    ll = dx * dx + dy * dy
    if ll == 0.0:
        raise DegenerateSegment("segment endpoints coincide")
    ua = ((a[0] - p[0]) * dx + (a[1] - p[1]) * dy) / ll
    ub = ((b[0] - p[0]) * dx + (b[1] - p[1]) * dy) / ll
    da = abs(dx * (a[1] - p[1]) - dy * (a[0] - p[0]))
    db = abs(dx * (b[1] - p[1]) - dy * (b[0] - p[0]))
    if da + db > 0.0:
        u = ua + (ub - ua) * da / (da + db)
    else:
        u = min(ua, ub)
    u = min(max(u, 0.0), 1.0)
    return Point(p[0] + u * dx, p[1] + u * dy)


def polygon_area(verts) -> float:
    """Signed shoelace area, positive for CCW."""
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def is_strictly_convex(verts, tol: float = 0.0) -> bool:
    n = len(verts)
    if n < 3:
        return False
    for i in range(n):
        if orient(verts[i - 1], verts[i], verts[(i + 1) % n], tol) <= 0:
            return False
    return True


def drop_collinear(verts, tol: float = 0.0) -> list:
    """Remove vertices whose neighbours make them collinear (closed ring)."""
    out = [tuple(map(float, v)) for v in verts]
    if len(out) > 1 and out[0] == out[-1]:
        out.pop()
    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            a, b, c = out[i - 1], out[i], out[(i + 1) % len(out)]
            if a == b or orient(a, b, c, tol) == 0 and _between(a, b, c):
                out.pop(i)
                changed = True
                break
    return out


def _between(a, b, c) -> bool:
    return (b[0] - a[0]) * (c[0] - b[0]) + (b[1] - a[1]) * (c[1] - b[1]) >= 0
