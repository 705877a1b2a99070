"""Convex dissection of free space and its topology graph.

Free space is triangulated with a constrained Delaunay triangulation (no
Steiner points), then triangles are merged greedily in Hertel-Mehlhorn
fashion: internal diagonals are removed longest first as long as both
endpoints stay strictly convex. Surviving diagonals are the cutlines.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Union

import numpy as np
import shapely
import triangle

from .env_model import Environment, load_polygon_env
from .geometry import (Point, Segment, as_point, drop_collinear, is_strictly_convex,
                       point_in_convex_polygon, polygon_area)


class DissectionError(Exception):
    pass


class NotInFreeSpace(ValueError):
    pass


@dataclass(frozen=True)
class ConvexPolygon:
    id: int
    vertices: tuple  # CCW tuple of Point
    cutline_ids: tuple = ()


@dataclass(frozen=True)
class Cutline:
    id: int
    endpoints: Segment  # polygon `left` lies to the left of a -> b
    left: int
    right: int

    def param(self, t: float) -> Point:
        return self.endpoints.at(t)

    @property
    def length(self) -> float:
        return self.endpoints.length

    def other(self, poly: int) -> Optional[int]:
        if poly == self.left:
            return self.right
        if poly == self.right:
            return self.left
        return None


@dataclass(frozen=True)
class TopologyGraph:
    nodes: tuple
    edges: dict  # cutline id -> (left, right)

    @cached_property
    def adjacency(self) -> dict:
        adj = {n: [] for n in self.nodes}
        for cid, (a, b) in sorted(self.edges.items()):
            adj[a].append((b, cid))
            adj[b].append((a, cid))
        return adj

    def components(self) -> list:
        seen, comps = set(), []
        for n in self.nodes:
            if n in seen:
                continue
            stack, comp = [n], []
            seen.add(n)
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self.adjacency[u]:
                    if v not in seen:
                        seen.add(v)
                        stack.append(v)
            comps.append(sorted(comp))
        return comps

    def independent_cycles(self) -> int:
        return len(self.edges) - len(self.nodes) + len(self.components())

    def connected(self, a: int, b: int) -> bool:
        for comp in self.components():
            if a in comp:
                return b in comp
        return False


class _GridLocator:
    """Uniform bucket grid over polygon bounding boxes."""

    def __init__(self, polygons, bbox, tol):
        self.tol = tol
        x0, y0, x1, y1 = bbox
        n = max(1, len(polygons))
        side = max(math.sqrt((x1 - x0) * (y1 - y0) / n), 1e-12)
        self.x0, self.y0 = x0, y0
        self.nx = max(1, int(math.ceil((x1 - x0) / side)))
        self.ny = max(1, int(math.ceil((y1 - y0) / side)))
        self.cw = (x1 - x0) / self.nx or 1.0
        self.ch = (y1 - y0) / self.ny or 1.0
        self.buckets = defaultdict(list)
        for poly in polygons:
            v = np.asarray(poly.vertices)
            i0, j0 = self._cell(v[:, 0].min() - tol, v[:, 1].min() - tol)
            i1, j1 = self._cell(v[:, 0].max() + tol, v[:, 1].max() + tol)
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    self.buckets[i, j].append(poly)

    def _cell(self, x, y):
        i = min(max(int((x - self.x0) // self.cw), 0), self.nx - 1)
        j = min(max(int((y - self.y0) // self.ch), 0), self.ny - 1)
        return i, j

    def containing(self, p) -> list:
        cand = self.buckets.get(self._cell(p[0], p[1]), ())
        return sorted(poly.id for poly in cand if point_in_convex_polygon(p, poly.vertices, self.tol))


@dataclass(frozen=True)
class ConvexDissection:
    polygons: tuple
    cutlines: tuple
    graph: TopologyGraph
    env: Environment
    boundary_edges: tuple = ()  # segments on the free-space boundary
    build_ms: float = 0.0

    @cached_property
    def locator(self) -> _GridLocator:
        return _GridLocator(self.polygons, self.env.bbox, self.env.tol)

    @cached_property
    def cutline_array(self) -> np.ndarray:
        """(n, 4) float64 rows a.x, a.y, b.x, b.y indexed by cutline id."""
        arr = np.zeros((len(self.cutlines), 4))
        for c in self.cutlines:
            arr[c.id] = (*c.endpoints.a, *c.endpoints.b)
        return arr

    @property
    def tol(self) -> float:
        return self.env.tol

    def containing(self, p) -> list:
        """Ids of all polygons whose closure contains p, ascending."""
        return self.locator.containing(p)

    def symbol(self, cid: int):
        from .encoding import CutlineSymbol
        c = self.cutlines[cid]
        return CutlineSymbol(c.id, c.left, c.right)


# --------------------------------------------------------------------------
# construction

def _component_pslg(poly, tol):
    rings = [drop_collinear(poly.exterior.coords, tol)]
    rings += [drop_collinear(r.coords, tol) for r in poly.interiors]
    index, verts, segs = {}, [], []
    for ring in rings:
        ids = []
        for v in ring:
            if v not in index:
                index[v] = len(verts)
                verts.append(v)
            ids.append(index[v])
        for i in range(len(ids)):
            a, b = ids[i], ids[(i + 1) % len(ids)]
            if a != b:
                segs.append((a, b))
    holes = [shapely.Polygon(r.coords).representative_point().coords[0] for r in poly.interiors]
    return np.array(verts, dtype=float), np.array(segs, dtype=np.int32), holes


def _triangulate(poly, tol):
    verts, segs, holes = _component_pslg(poly, tol)
    data = {"vertices": verts, "segments": segs}
    if holes:
        data["holes"] = np.array(holes, dtype=float)
    out = triangle.triangulate(data, "pQ")
    if "triangles" not in out or len(out["triangles"]) == 0:
        raise DissectionError("triangulation produced no triangles")
    tv = out["vertices"]
    tris = []
    for t in out["triangles"]:
        a, b, c = (int(i) for i in t)
        area = polygon_area(tv[[a, b, c]])
        if area < 0:
            b, c = c, b
            area = -area
        if area <= tol * tol:
            raise DissectionError("degenerate triangle in free-space triangulation")
        tris.append((a, b, c))
    return tv, tris


def _hertel_mehlhorn(verts, tris, tol):
    """Merge triangles across diagonals; returns (polygons as index cycles, diagonals kept)."""
    owner = {}  # directed edge (u, v) -> polygon key
    polys = {}
    for k, (a, b, c) in enumerate(tris):
        polys[k] = [a, b, c]
        for u, v in ((a, b), (b, c), (c, a)):
            owner[u, v] = k
    diagonals = sorted({(min(u, v), max(u, v)) for (u, v) in owner if (v, u) in owner})
    lengths = {e: math.dist(verts[e[0]], verts[e[1]]) for e in diagonals}
    order = sorted(diagonals, key=lambda e: (-lengths[e], e))
    kept = []
    for u, v in order:
        p, q = owner[u, v], owner[v, u]
        if p == q:
            kept.append((u, v))
            continue
        merged = _merge_cycles(polys[p], polys[q], u, v)
        if merged is None or not _convex_at(verts, merged, (u, v), tol):
            kept.append((u, v))
            continue
        polys[p] = merged
        del polys[q]
        for i in range(len(merged)):
            a, b = merged[i], merged[(i + 1) % len(merged)]
            owner[a, b] = p
        del owner[u, v]
        del owner[v, u]
    return polys, owner, kept


def _merge_cycles(P, Q, u, v):
    # P contains directed edge u -> v, Q contains v -> u
    i = P.index(u)
    if P[(i + 1) % len(P)] != v:
        return None
    j = Q.index(v)
    if Q[(j + 1) % len(Q)] != u:
        return None
    # walk P from v around to u, then Q from u around to v (exclusive)
    p_part = [P[(i + 1 + k) % len(P)] for k in range(len(P))]  # v ... u
    q_part = [Q[(j + 1 + k) % len(Q)] for k in range(len(Q))]  # u ... v
    return p_part + q_part[1:-1]


def _convex_at(verts, cycle, at, tol):
    n = len(cycle)
    for w in at:
        i = cycle.index(w)
        a, b, c = verts[cycle[i - 1]], verts[w], verts[cycle[(i + 1) % n]]
        cr = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cr <= tol * (math.dist(a, b) + math.dist(b, c)):
            return False
    return True


def build_topology_graph(env: Environment) -> ConvexDissection:
    import time
    t0 = time.perf_counter()
    tol = env.tol
    comps = env.free_components
    if not comps:
        raise DissectionError("free space is empty")
    all_polys, all_cuts, bedges = [], [], []
    for comp in sorted(comps, key=lambda p: (p.bounds[0], p.bounds[1])):
        verts, tris = _triangulate(comp, tol)
        polys, owner, kept = _hertel_mehlhorn(verts, tris, tol)
        base = len(all_polys)
        key_to_id = {key: base + i for i, key in enumerate(sorted(polys))}
        for key in sorted(polys):
            cyc = polys[key]
            all_polys.append([tuple(map(float, verts[i])) for i in cyc])
        for u, v in kept:
            p, q = key_to_id[owner[u, v]], key_to_id[owner[v, u]]
            if p == q:
                raise DissectionError("diagonal inside a single merged polygon")
            # left polygon has the edge as a -> b in its CCW order
            if p < q:
                all_cuts.append((p, q, verts[u], verts[v]))
            else:
                all_cuts.append((q, p, verts[v], verts[u]))
        for (u, v) in owner:
            if (v, u) not in owner:
                bedges.append(Segment(as_point(verts[u]), as_point(verts[v])))
    all_cuts.sort(key=lambda c: (c[0], c[1]))
    cutlines = tuple(Cutline(i, Segment(as_point(a), as_point(b)), l, r)
                     for i, (l, r, a, b) in enumerate(all_cuts))
    incident = defaultdict(list)
    for c in cutlines:
        incident[c.left].append(c.id)
        incident[c.right].append(c.id)
    polygons = tuple(ConvexPolygon(i, tuple(Point(*v) for v in vs), tuple(sorted(incident[i])))
                     for i, vs in enumerate(all_polys))
    graph = TopologyGraph(tuple(range(len(polygons))), {c.id: (c.left, c.right) for c in cutlines})
    ms = (time.perf_counter() - t0) * 1e3
    return ConvexDissection(polygons, cutlines, graph, env, tuple(bedges), ms)


# --------------------------------------------------------------------------
# queries

def locate(d: ConvexDissection, p) -> int:
    """Polygon containing p; the smallest id wins on shared boundaries."""
    ids = d.containing(p)
    if not ids:
        raise NotInFreeSpace(f"point {tuple(p)} is not in free space")
    return ids[0]


def adjacent_cutlines(d: ConvexDissection, where: Union[int, set, list, Point]) -> list:
    """Cutlines adjacent to a point, a cutline id, or a set/list of cutline ids.

    Tuples and arrays are read as points.
    """
    if isinstance(where, (int, np.integer)):
        c = d.cutlines[int(where)]
        out = set(d.polygons[c.left].cutline_ids) | set(d.polygons[c.right].cutline_ids)
        out.discard(c.id)
        return sorted(out)
    if not isinstance(where, (set, frozenset, list)):
        ids = d.containing(where)
        if not ids:
            raise NotInFreeSpace(f"point {tuple(where)} is not in free space")
        out = set()
        for pid in ids:
            out.update(d.polygons[pid].cutline_ids)
        return sorted(out)
    out = set()
    for cid in where:
        out.update(adjacent_cutlines(d, int(cid)))
    return sorted(out)


# --------------------------------------------------------------------------
# validation

@dataclass
class DissectionReport:
    samples: int
    coverage: float  # fraction of free samples inside exactly one polygon
    uncovered: int
    multiply_covered: int
    covered_outside: int
    convexity_violations: list = field(default_factory=list)
    pairing_violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.uncovered == 0 and self.multiply_covered == 0 and self.covered_outside == 0
                and not self.convexity_violations and not self.pairing_violations)


def _contains_matrix(polygons, pts, tol):
    """(n_pts, n_polys) closed containment."""
    out = np.zeros((len(pts), len(polygons)), dtype=bool)
    for j, poly in enumerate(polygons):
        v = np.asarray(poly.vertices)
        w = np.roll(v, -1, axis=0)
        e = w - v
        c = e[None, :, 0] * (pts[:, None, 1] - v[None, :, 1]) - e[None, :, 1] * (pts[:, None, 0] - v[None, :, 0])
        out[:, j] = (c >= -tol * np.hypot(e[:, 0], e[:, 1])[None, :]).all(axis=1)
    return out


def validate_dissection(d: ConvexDissection, samples: int = 10_000, seed: int = 0) -> DissectionReport:
    """Monte-Carlo cover check plus exact convexity and cutline pairing checks."""
    tol = d.tol
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = d.env.bbox
    pts = np.column_stack([rng.uniform(x0, x1, samples), rng.uniform(y0, y1, samples)])
    free = d.env.free_region
    inside = shapely.contains_xy(free, pts[:, 0], pts[:, 1])
    # keep away from every edge so closed-set ties cannot occur
    edges = [shapely.LineString(c.endpoints) for c in d.cutlines] + [free.boundary]
    far = shapely.distance(shapely.points(pts)[:, None], np.array(edges, dtype=object)[None, :]).min(axis=1) > 10 * tol
    pts, inside = pts[far], inside[far]
    cover = _contains_matrix(d.polygons, pts, tol).sum(axis=1) if d.polygons else np.zeros(len(pts), int)
    n_free = int(inside.sum())
    uncovered = int(((cover == 0) & inside).sum())
    multi = int(((cover > 1) & inside).sum())
    outside = int(((cover > 0) & ~inside).sum())
    coverage = float(((cover == 1) & inside).sum() / n_free) if n_free else 1.0

    convex_bad = [p.id for p in d.polygons if not is_strictly_convex(p.vertices, tol)]
    pairing_bad = []
    for c in d.cutlines:
        a, b = c.endpoints
        if c.left == c.right:
            pairing_bad.append(c.id)
            continue
        if not (_has_edge(d.polygons[c.left].vertices, a, b) and _has_edge(d.polygons[c.right].vertices, b, a)):
            pairing_bad.append(c.id)
    # every polygon edge must be a cutline or lie on the free-space boundary
    cut_edges = {(c.endpoints.a, c.endpoints.b) for c in d.cutlines}
    cut_edges |= {(b, a) for a, b in cut_edges}
    fb = free.boundary
    for p in d.polygons:
        n = len(p.vertices)
        for i in range(n):
            e = (p.vertices[i], p.vertices[(i + 1) % n])
            if e in cut_edges:
                continue
            mid = ((e[0][0] + e[1][0]) / 2, (e[0][1] + e[1][1]) / 2)
            if fb.distance(shapely.Point(mid)) > 10 * tol:
                pairing_bad.append(("edge", p.id, i))
    return DissectionReport(len(pts), coverage, uncovered, multi, outside, convex_bad, pairing_bad)


def _has_edge(verts, a, b) -> bool:
    n = len(verts)
    return any(verts[i] == a and verts[(i + 1) % n] == b for i in range(n))


# --------------------------------------------------------------------------
# snapshots

def dissection_to_dict(d: ConvexDissection) -> dict:
    return {
        "format": "cdt-dissection/1",
        "env_hash": d.env.digest,
        "environment": d.env.to_dict(),
        "polygons": [{"id": p.id, "vertices": [list(v) for v in p.vertices],
                      "cutline_ids": list(p.cutline_ids)} for p in d.polygons],
        "cutlines": [{"id": c.id, "a": list(c.endpoints.a), "b": list(c.endpoints.b),
                      "left": c.left, "right": c.right} for c in d.cutlines],
        "graph_edges": [[c.id, c.left, c.right] for c in d.cutlines],
        "boundary_edges": [[*s.a, *s.b] for s in d.boundary_edges],
        "build_ms": d.build_ms,
    }


def save_dissection(d: ConvexDissection, path) -> None:
    with open(path, "w") as f:
        json.dump(dissection_to_dict(d), f)


def dissection_from_dict(data: dict) -> ConvexDissection:
    if data.get("format") != "cdt-dissection/1":
        raise DissectionError("not a dissection snapshot")
    env = load_polygon_env(json.dumps(data["environment"]))
    if env.digest != data["env_hash"]:
        raise DissectionError("environment hash mismatch")
    polygons = tuple(ConvexPolygon(p["id"], tuple(Point(*v) for v in p["vertices"]), tuple(p["cutline_ids"]))
                     for p in data["polygons"])
    cutlines = tuple(Cutline(c["id"], Segment(Point(*c["a"]), Point(*c["b"])), c["left"], c["right"])
                     for c in data["cutlines"])
    graph = TopologyGraph(tuple(p.id for p in polygons), {c.id: (c.left, c.right) for c in cutlines})
    bedges = tuple(Segment(Point(s[0], s[1]), Point(s[2], s[3])) for s in data.get("boundary_edges", []))
    return ConvexDissection(polygons, cutlines, graph, env, bedges, data.get("build_ms", 0.0))


def load_dissection(path) -> ConvexDissection:
    with open(path) as f:
        return dissection_from_dict(json.load(f))
