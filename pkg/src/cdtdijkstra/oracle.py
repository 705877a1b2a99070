"""Brute-force references: visibility graph, grid Dijkstra, per-class DP, flood fill."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import shapely
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from shapely.geometry import LineString

from .dissection import ConvexDissection
from .encoding import CdtEncoding
from .env_model import Environment, OccupancyGrid, rasterize


@dataclass(frozen=True)
class OracleResult:
    cost: float
    path: Optional[np.ndarray]
    method: str
    seconds: float = 0.0

    @property
    def reachable(self) -> bool:
        return math.isfinite(self.cost)

    def to_row(self, instance=None) -> dict:
        return {"instance": instance, "method": self.method,
                "cost": self.cost if self.reachable else None, "time": self.seconds}


# visibility graph ------------------------------------------------------

_VIS_CACHE: dict = {}


def _ring_vertices(env: Environment) -> np.ndarray:
    pts = []
    for comp in env.free_components:
        for ring in (comp.exterior, *comp.interiors):
            pts.extend(ring.coords[:-1])
    return np.unique(np.asarray(pts, dtype=float).reshape(-1, 2), axis=0)


def _visible(region, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    if len(starts) == 0:
        return np.zeros(0, dtype=bool)
    coords = np.stack([starts, ends], axis=1)
    lines = shapely.linestrings(coords)
    return shapely.covers(region, lines)


def _vertex_graph(env: Environment):
    key = env.digest
    hit = _VIS_CACHE.get(key)
    if hit is not None:
        return hit
    V = _ring_vertices(env)
    region = env.free_region
    shapely.prepare(region)
    n = len(V)
    i, j = np.triu_indices(n, k=1)
    ok = _visible(region, V[i], V[j])
    i, j = i[ok], j[ok]
    w = np.hypot(*(V[i] - V[j]).T)
    if len(_VIS_CACHE) > 64:
        _VIS_CACHE.clear()
    _VIS_CACHE[key] = (V, i, j, w)
    return _VIS_CACHE[key]


def visibility_shortest(env: Environment, a, b) -> OracleResult:
    """Euclidean shortest path over the visibility graph of a, b and all free-space vertices."""
    t0 = time.perf_counter()
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    region = env.free_region
    if not (env.contains(a) and env.contains(b)):
        raise ValueError("endpoints must lie in free space")
    if _visible(region, a[None], b[None])[0]:
        return OracleResult(float(np.hypot(*(b - a))), np.array([a, b]), "visibility",
                            time.perf_counter() - t0)
    V, i, j, w = _vertex_graph(env)
    n = len(V)
    ia = np.flatnonzero(_visible(region, np.repeat(a[None], n, 0), V))
    ib = np.flatnonzero(_visible(region, np.repeat(b[None], n, 0), V))
    A, B = n, n + 1
    rows = np.concatenate([i, np.full(len(ia), A), np.full(len(ib), B)])
    cols = np.concatenate([j, ia, ib])
    wts = np.concatenate([w, np.hypot(*(V[ia] - a).T), np.hypot(*(V[ib] - b).T)])
    # zero-length edges would vanish from a sparse matrix
    wts = np.maximum(wts, 1e-300)
    G = coo_matrix((wts, (rows, cols)), shape=(n + 2, n + 2)).tocsr()
    dist, pred = dijkstra(G, directed=False, indices=A, return_predecessors=True)
    cost = float(dist[B])
    if not math.isfinite(cost):
        return OracleResult(math.inf, None, "visibility", time.perf_counter() - t0)
    allv = np.vstack([V, a, b])
    seq = [B]
    while seq[-1] != A:
        seq.append(pred[seq[-1]])
    return OracleResult(cost, allv[seq[::-1]], "visibility", time.perf_counter() - t0)


# grid Dijkstra -----------------------------------------------------------

def grid_shortest(g: OccupancyGrid, a, b, connectivity: int = 8) -> OracleResult:
    """Dijkstra between the cells holding a and b; diagonal moves may not cut corners."""
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    t0 = time.perf_counter()
    H, W = g.height, g.width
    free = ~g.cells
    ca, ra = g.cell_of(a)
    cb, rb = g.cell_of(b)
    for c, r in ((ca, ra), (cb, rb)):
        if not (0 <= c < W and 0 <= r < H) or not free[r, c]:
            raise ValueError("endpoints must lie on free cells")
    idx = np.arange(H * W).reshape(H, W)
    rows, cols, wts = [], [], []

    def link(mask, src, dst, cost):
        rows.append(src[mask])
        cols.append(dst[mask])
        wts.append(np.full(int(mask.sum()), cost))

    link(free[:, :-1] & free[:, 1:], idx[:, :-1], idx[:, 1:], 1.0)
    link(free[:-1, :] & free[1:, :], idx[:-1, :], idx[1:, :], 1.0)
    if connectivity == 8:
        side = free[:-1, :-1] & free[1:, 1:] & free[:-1, 1:] & free[1:, :-1]
        link(side, idx[:-1, :-1], idx[1:, 1:], math.sqrt(2))
        link(side, idx[:-1, 1:], idx[1:, :-1], math.sqrt(2))
    G = coo_matrix((np.concatenate(wts) * g.cell_size,
                    (np.concatenate(rows), np.concatenate(cols))), shape=(H * W, H * W)).tocsr()
    src, dst = idx[ra, ca], idx[rb, cb]
    dist, pred = dijkstra(G, directed=False, indices=src, return_predecessors=True)
    cost = float(dist[dst])
    if not math.isfinite(cost):
        return OracleResult(math.inf, None, f"grid{connectivity}", time.perf_counter() - t0)
    seq = [dst]
    while seq[-1] != src:
        seq.append(pred[seq[-1]])
    cells = np.array([g.center(s % W, s // W) for s in seq[::-1]])
    return OracleResult(cost, cells, f"grid{connectivity}", time.perf_counter() - t0)


# per-class dynamic programming ------------------------------------------

def _discretize(seg, k: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    t = np.linspace(lo, hi, k)[:, None]
    return seg[:2] + t * (seg[2:] - seg[:2])


def _dp(a, b, layers) -> tuple:
    """Exact shortest chain a -> one point per layer -> b; returns (cost, chosen indices)."""
    if not layers:
        return float(np.hypot(*(b - a))), []
    cost = np.hypot(*(layers[0] - a).T)
    back = []
    for prev, cur in zip(layers[:-1], layers[1:]):
        D = np.hypot(cur[None, :, 0] - prev[:, None, 0], cur[None, :, 1] - prev[:, None, 1])
        tot = cost[:, None] + D
        arg = np.argmin(tot, axis=0)
        back.append(arg)
        cost = tot[arg, np.arange(len(cur))]
    tot = cost + np.hypot(*(layers[-1] - b).T)
    j = int(np.argmin(tot))
    picks = [j]
    for arg in reversed(back):
        j = int(arg[j])
        picks.append(j)
    return float(tot[picks[0]]), picks[::-1]


def class_optimum(d: ConvexDissection, enc: CdtEncoding, a, b, dense_k: int = 512,
                  refine: int = 0) -> tuple:
    """Within-class optimum of ``enc`` by DP over discretised cutlines.

    Each refinement pass re-discretises every cutline around the current
    choice, shrinking the spacing by a factor of about dense_k / 4.
    Returns (cost, polyline).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    segs = [d.cutline_array[c] for c in enc.cutlines]
    spans = [(0.0, 1.0)] * len(segs)
    cost, picks = _dp(a, b, [_discretize(s, dense_k) for s in segs])
    for _ in range(refine):
        if not segs:
            break
        new = []
        for (lo, hi), j in zip(spans, picks):
            h = (hi - lo) / (dense_k - 1)
            t = lo + j * h
            new.append((max(0.0, t - 2 * h), min(1.0, t + 2 * h)))
        spans = new
        cost, picks = _dp(a, b, [_discretize(s, dense_k, lo, hi) for s, (lo, hi) in zip(segs, spans)])
    pts = [a] + [_discretize(s, dense_k, lo, hi)[j] for s, (lo, hi), j in zip(segs, spans, picks)] + [b]
    return cost, np.array(pts)


def reduced_walks(d: ConvexDissection, start: int, targets, max_len: int):
    """All walks from ``start`` ending in ``targets`` with at most ``max_len`` nodes.

    A walk never re-crosses the cutline it has just crossed.
    """
    targets = set(targets)
    adj = d.graph.adjacency
    out = []
    stack = [((start,), ())]
    while stack:
        nodes, cuts = stack.pop()
        if nodes[-1] in targets:
            out.append(CdtEncoding(nodes, cuts))
        if len(nodes) >= max_len:
            continue
        for nxt, cid in adj[nodes[-1]]:
            if cuts and cid == cuts[-1]:
                continue
            stack.append((nodes + (nxt,), cuts + (cid,)))
    out.sort()
    return out


def enumerate_class_optima(d: ConvexDissection, a, b, max_len: int, dense_k: int = 512,
                           refine: int = 0, with_paths: bool = False) -> list:
    """(encoding, cost) for every reduced walk from a's polygon to b's, sorted by cost.

    With ``with_paths`` each entry also carries the DP polyline.
    """
    start = d.containing(a)
    goal = d.containing(b)
    if not start or not goal:
        raise ValueError("endpoints must lie in free space")
    rows = []
    for enc in reduced_walks(d, start[0], goal, max_len):
        cost, path = class_optimum(d, enc, a, b, dense_k, refine)
        rows.append((enc, cost, path) if with_paths else (enc, cost))
    rows.sort(key=lambda r: (r[1], r[0]))
    return rows


def simple_class_count(d: ConvexDissection, a, b, max_len: int, dense_k: int = 128) -> int:
    """Classes whose optimal path does not cross itself.

    A class that winds around an obstacle is beaten by the class that skips
    the winding; its taut path self-intersects, which is what this counts out.
    """
    rows = enumerate_class_optima(d, a, b, max_len, dense_k, with_paths=True)
    n = 0
    for _, _, path in rows:
        p = _dedupe(path, d.tol * 10)
        if len(p) < 2 or LineString(p).is_simple:
            n += 1
    return n


def _dedupe(path: np.ndarray, tol: float) -> np.ndarray:
    keep = [path[0]]
    for p in path[1:]:
        if np.hypot(*(p - keep[-1])) > tol:
            keep.append(p)
    return np.array(keep)


# reachability ------------------------------------------------------------

def flood_reachable(env: Environment, a, b, cell_size: Optional[float] = None) -> bool:
    """Whether a and b share a 4-connected component of the rasterised free space."""
    x0, y0, x1, y1 = env.bbox
    if cell_size is None:
        cell_size = max(x1 - x0, y1 - y0) / 512
    if not (env.contains(a) and env.contains(b)):
        return False
    W = int(math.ceil(x1 / cell_size)) + 1
    H = int(math.ceil(y1 / cell_size)) + 1
    g = rasterize(env, W, H, cell_size)
    labels, _ = ndimage.label(~g.cells)

    def label_of(p):
        c, r = g.cell_of(p)
        best = 0
        # the point's own cell centre may fall just outside a thin region
        for dr in (0, -1, 1):
            for dc in (0, -1, 1):
                rr, cc = r + dr, c + dc
                if 0 <= rr < H and 0 <= cc < W and labels[rr, cc]:
                    return labels[rr, cc]
        return best

    la, lb = label_of(a), label_of(b)
    return bool(la) and la == lb
