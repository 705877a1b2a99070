"""Homotopy-class encodings as walks in the topology graph."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .dissection import ConvexDissection, NotInFreeSpace, locate


class EncodingError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CdtEncoding:
    """Polygon walk plus the cutline crossed between consecutive nodes."""

    nodes: tuple
    cutlines: tuple = ()

    def __post_init__(self):
        if not self.nodes:
            raise EncodingError("walk must contain at least one node")
        if len(self.cutlines) != len(self.nodes) - 1:
            raise EncodingError("need exactly one crossing per step")

    @property
    def first(self) -> int:
        return self.nodes[0]

    @property
    def last(self) -> int:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.nodes)

    def __str__(self) -> str:
        return ",".join(map(str, self.nodes))

    def to_json(self) -> dict:
        return {"nodes": str(self), "cutlines": ",".join(map(str, self.cutlines))}

    @classmethod
    def from_json(cls, data) -> "CdtEncoding":
        if isinstance(data, str):
            raise EncodingError("node string alone does not fix the crossings; use the dict form")
        nodes = tuple(int(v) for v in data["nodes"].split(","))
        cuts = tuple(int(v) for v in data["cutlines"].split(",")) if data["cutlines"] else ()
        return cls(nodes, cuts)


@dataclass(frozen=True)
class CutlineSymbol:
    """A cutline usable in either direction when appended to a walk."""

    id: int
    left: int
    right: int


def trivial_encoding(d: ConvexDissection, x) -> CdtEncoding:
    return CdtEncoding((locate(d, x),))


def concat(enc: CdtEncoding, s: CutlineSymbol) -> Optional[CdtEncoding]:
    """Extend ``enc`` across ``s``; ``None`` when the walk does not end next to s."""
    if enc.last == s.left:
        nxt = s.right
    elif enc.last == s.right:
        nxt = s.left
    else:
        return None
    return CdtEncoding(enc.nodes + (nxt,), enc.cutlines + (s.id,))


def cutline_sequence(enc: CdtEncoding) -> list:
    return list(enc.cutlines)


def encoding_set_equal(a: Iterable[CdtEncoding], b: Iterable[CdtEncoding]) -> bool:
    return set(a) == set(b)


def encode_path(d: ConvexDissection, path) -> CdtEncoding:
    """Walk of polygons visited by a polyline.

    Every cutline and free-space boundary edge crossing splits the path into
    pieces; each piece's midpoint names the polygon it runs through. A piece
    running along a cutline, or outside free space, is rejected.
    """
    pts = np.asarray(path, dtype=float).reshape(-1, 2)
    tol = d.tol
    for p in pts:
        if not d.containing(p):
            raise NotInFreeSpace(f"path vertex {tuple(p)} is not in free space")
    if len(pts) == 1:
        return CdtEncoding((locate(d, pts[0]),))

    edges = [d.cutline_array]
    if d.boundary_edges:
        edges.append(np.array([[*s.a, *s.b] for s in d.boundary_edges]))
    E = np.vstack(edges)
    walk = []
    for u, v in zip(pts[:-1], pts[1:]):
        for t0, t1 in _pieces(u, v, E, tol):
            mid = u + 0.5 * (t0 + t1) * (v - u)
            ids = d.containing(mid)
            if not ids:
                raise EncodingError("path leaves free space")
            if len(ids) > 1:
                raise EncodingError("path runs along a cutline")
            walk.append(ids[0])
    nodes = [walk[0]]
    for p in walk[1:]:
        if p != nodes[-1]:
            nodes.append(p)
    return _link(d, nodes, pts)


def _pieces(u, v, E, tol):
    """Parameter intervals of segment u-v split at every edge crossing or touch."""
    r = v - u
    a, b = E[:, :2], E[:, 2:]
    s = b - a
    den = r[0] * s[:, 1] - r[1] * s[:, 0]
    qp = a - u
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / den
        w = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / den
    rl = np.hypot(*r)
    et = tol / max(rl, 1e-300)
    ew = tol / np.maximum(np.hypot(s[:, 0], s[:, 1]), 1e-300)
    hit = (np.abs(den) > 0) & (t >= -et) & (t <= 1 + et) & (w >= -ew) & (w <= 1 + ew)
    ts = np.clip(t[hit], 0.0, 1.0)
    # a vertex landing on an edge is nudged off it along the path
    cuts = np.unique(np.concatenate(([0.0, 1.0], ts)))
    keep = [cuts[0]]
    for c in cuts[1:]:
        if c - keep[-1] > 2 * et:
            keep.append(c)
    if keep[-1] != 1.0:
        keep[-1] = 1.0
    if len(keep) == 1:
        keep = [0.0, 1.0]
    return list(zip(keep[:-1], keep[1:]))


def _link(d: ConvexDissection, nodes: list, pts) -> CdtEncoding:
    out_nodes, cuts = [nodes[0]], []
    adj = d.graph.adjacency
    for nxt in nodes[1:]:
        cur = out_nodes[-1]
        direct = [cid for (n, cid) in adj[cur] if n == nxt]
        if direct:
            out_nodes.append(nxt)
            cuts.append(direct[0])
            continue
        # crossed at a shared vertex: route through the fan of polygons around it
        route = _fan_route(d, cur, nxt)
        if route is None:
            raise EncodingError(f"polygons {cur} and {nxt} are not adjacent")
        for n, cid in route:
            out_nodes.append(n)
            cuts.append(cid)
    return CdtEncoding(tuple(out_nodes), tuple(cuts))


def _fan_route(d: ConvexDissection, a: int, b: int):
    shared = set(d.polygons[a].vertices) & set(d.polygons[b].vertices)
    if not shared:
        return None
    fan = {p.id for p in d.polygons if shared & set(p.vertices)}
    prev = {a: None}
    q = deque([a])
    while q:
        u = q.popleft()
        if u == b:
            break
        for v, cid in d.graph.adjacency[u]:
            if v in fan and v not in prev:
                prev[v] = (u, cid)
                q.append(v)
    if b not in prev:
        return None
    route = []
    n = b
    while prev[n] is not None:
        u, cid = prev[n]
        route.append((n, cid))
        n = u
    return route[::-1]
