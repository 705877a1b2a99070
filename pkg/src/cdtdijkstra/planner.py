"""SetInit / GetGoal: per-cutline optimal encoding sets for a fixed start point."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .dissection import (ConvexDissection, NotInFreeSpace, adjacent_cutlines,
                         dissection_from_dict, dissection_to_dict)
from .encoding import CdtEncoding, concat
from .shortest_path import MAX_SWEEPS, default_eps, segments_for

log = logging.getLogger(__name__)

DEFAULT_INTERVAL = 2.0
COST_DELTA = 1e-9  # times the diagonal: smallest per-sample improvement that counts as a change
GOAL_EPS_SCALE = 1e-9  # times the diagonal; the final query compression runs to near machine precision
REWIRE_CAP = 50  # recomputations per cutline before a rewiring wave is abandoned


class PlannerError(RuntimeError):
    pass


class Unreachable(LookupError):
    pass


@dataclass
class EncodingSet:
    """Best encoding, cost and converged path for every sample point of one cutline.

    ``paths[i]`` has shape (T, m_i, 2): the converged interior vertices of
    ``encodings[i]`` towards each sample, excluding the sample itself.
    Every winner keeps its paths at all samples, not only where it wins.
    """

    cutline: int
    samples: np.ndarray
    encodings: tuple
    owner: np.ndarray
    cost: np.ndarray
    paths: tuple

    @property
    def distinct(self) -> frozenset:
        return frozenset(self.encodings)

    @property
    def empty(self) -> bool:
        return not self.encodings

    def record(self, t: int):
        """(encoding, cost, full polyline excluding x_init) for sample t."""
        i = int(self.owner[t])
        if i < 0:
            return None
        path = np.vstack([self.paths[i][t], self.samples[t:t + 1]])
        return self.encodings[i], float(self.cost[t]), path


def _empty_set(cid: int, samples: np.ndarray) -> EncodingSet:
    T = len(samples)
    return EncodingSet(cid, samples, (), np.full(T, -1, dtype=np.int64), np.full(T, np.inf), ())


def cutline_samples(d: ConvexDissection, cid: int, interval: float) -> np.ndarray:
    c = d.cutlines[cid]
    n = max(2, int(math.ceil(c.length / interval - 1e-12)) + 1)
    t = np.linspace(0.0, 1.0, n)[:, None]
    a = np.array(c.endpoints.a, dtype=float)
    b = np.array(c.endpoints.b, dtype=float)
    return np.ascontiguousarray(a + t * (b - a))


@dataclass(slots=True)
class GoalResult:
    path: np.ndarray
    cost: float
    encoding: Optional[CdtEncoding]
    sweeps: int = 0
    on_cutline: bool = False


@dataclass
class PlannerState:
    dissection: ConvexDissection
    x_init: tuple
    interval: float
    eps: float
    sets: list
    init_polygons: tuple
    status: str = "empty"
    stats: dict = field(default_factory=dict)
    _goal_index: object = field(default=None, repr=False)
    _goal_encodings: list = field(default_factory=list, repr=False)

    def encoding_set(self, cid: int) -> EncodingSet:
        return self.sets[cid]

    def state_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.array(self.x_init, dtype=float).tobytes())
        h.update(repr((self.interval, self.eps, self.status)).encode())
        for s in self.sets:
            h.update(b"|")
            h.update(";".join(f"{e}/{','.join(map(str, e.cutlines))}" for e in s.encodings).encode())
            h.update(s.owner.tobytes())
            h.update(s.cost.tobytes())
            for p in s.paths:
                h.update(p.tobytes())
        return h.hexdigest()

    # snapshots ---------------------------------------------------------

    def to_dict(self, include_paths: bool = True) -> dict:
        out = {
            "format": "cdt-planner/1",
            "x_init": list(self.x_init),
            "interval": self.interval,
            "eps": self.eps,
            "status": self.status,
            "init_polygons": list(self.init_polygons),
            "stats": {k: v for k, v in self.stats.items()},
            "dissection": dissection_to_dict(self.dissection),
            "sets": [],
        }
        for s in self.sets:
            row = {
                "cutline": s.cutline,
                "encodings": [e.to_json() for e in s.encodings],
                "owner": s.owner.tolist(),
                "cost": [None if not math.isfinite(c) else c for c in s.cost.tolist()],
            }
            if include_paths:
                row["paths"] = [p.tolist() for p in s.paths]
            out["sets"].append(row)
        return out

    @classmethod
    def from_dict(cls, data: dict, d: Optional[ConvexDissection] = None) -> "PlannerState":
        if data.get("format") != "cdt-planner/1":
            raise PlannerError("not a planner snapshot")
        if d is None:
            d = dissection_from_dict(data["dissection"])
        interval = float(data["interval"])
        sets = []
        for row in data["sets"]:
            cid = int(row["cutline"])
            samples = cutline_samples(d, cid, interval)
            encs = tuple(CdtEncoding.from_json(e) for e in row["encodings"])
            T = len(samples)
            if "paths" in row:
                paths = tuple(np.asarray(p, dtype=float).reshape(T, len(e.cutlines) - 1, 2)
                              for p, e in zip(row["paths"], encs))
            else:
                # no stored paths: fall back to cutline midpoints as warm starts
                paths = tuple(np.broadcast_to(_midpoints(d, e.cutlines), (T, len(e.cutlines), 2)).copy()
                              for e in encs)
            cost = np.array([np.inf if c is None else c for c in row["cost"]], dtype=float)
            sets.append(EncodingSet(cid, samples, encs, np.asarray(row["owner"], dtype=np.int64),
                                    cost, paths))
        st = cls(d, tuple(data["x_init"]), interval, float(data["eps"]), sets,
                 tuple(data["init_polygons"]), data["status"], dict(data.get("stats", {})))
        _build_goal_index(st)
        return st

    def save(self, path, include_paths: bool = True) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(include_paths), fh)

    @classmethod
    def load(cls, path, d: Optional[ConvexDissection] = None) -> "PlannerState":
        with open(path) as fh:
            return cls.from_dict(json.load(fh), d)


def _midpoints(d: ConvexDissection, cids) -> np.ndarray:
    segs = segments_for(d, cids)
    return 0.5 * (segs[:, :2] + segs[:, 2:])


# SetInit ---------------------------------------------------------------

def _new_stats() -> dict:
    return {"triggers": 0, "recomputations": 0, "candidate_runs": 0,
            "cold_sweeps": 0, "cold_samples": 0, "warm_sweeps": 0, "warm_samples": 0,
            "unconverged_samples": 0, "rewire_cap_hits": 0, "set_init_ms": 0.0}


def set_init(d: ConvexDissection, x_init, interval: float = DEFAULT_INTERVAL,
             eps: Optional[float] = None) -> PlannerState:
    """Compute the optimal encoding set of every cutline reachable from ``x_init``."""
    if not interval > 0:
        raise ValueError("interval must be positive")
    t0 = time.perf_counter()
    x = (float(x_init[0]), float(x_init[1]))
    if not (math.isfinite(x[0]) and math.isfinite(x[1])):
        raise ValueError("x_init is not finite")
    polys = tuple(d.containing(x))
    if not polys:
        raise NotInFreeSpace(f"x_init {x} is not in free space")
    sets = [_empty_set(c.id, cutline_samples(d, c.id, interval)) for c in d.cutlines]
    st = PlannerState(d, x, float(interval), float(eps if eps is not None else default_eps(d)),
                      sets, polys, "empty", _new_stats())

    seeds = sorted({c for p in polys for c in d.polygons[p].cutline_ids})
    existing: set = set()
    for c in seeds:
        st.sets[c] = homotopy_classes_for_cutline(st, c, existing)
    existing.update(seeds)
    add = deque(n for n in adjacent_cutlines(d, list(seeds)) if n not in existing)
    queued = set(add)
    while add:
        ck = add.popleft()
        queued.discard(ck)
        st.sets[ck] = homotopy_classes_for_cutline(st, ck, existing)
        for n in adjacent_cutlines(d, ck):
            if n not in existing and n not in queued and n != ck:
                add.append(n)
                queued.add(n)
        existing.add(ck)
        optimize_existing(st, ck, existing)

    st.status = "ready"
    _build_goal_index(st)
    st.stats["set_init_ms"] = (time.perf_counter() - t0) * 1e3
    return st


def _candidates(st: PlannerState, ck: int, existing) -> list:
    d = st.dissection
    c = d.cutlines[ck]
    sides = (c.left, c.right)
    out = [CdtEncoding((p,)) for p in st.init_polygons if p in sides]
    pool = set()
    for n in adjacent_cutlines(d, ck):
        if n in existing:
            pool.update(st.sets[n].encodings)
    for f in sorted(pool):
        # a walk that just crossed ck would only backtrack over it
        if f.last in sides and (not f.cutlines or f.cutlines[-1] != ck):
            out.append(f)
    return out


def homotopy_classes_for_cutline(st: PlannerState, ck: int, existing=()) -> EncodingSet:
    """Per-sample best extension across ``ck`` of the neighbouring encodings.

    Candidates are the trivial walk(s) when ``ck`` bounds a start polygon,
    then every encoding stored on an already-processed neighbouring cutline
    whose last polygon touches ``ck``. Each candidate is compressed towards
    all samples in order, warm-starting from the previous sample.
    """
    d = st.dissection
    samples = st.sets[ck].samples
    T = len(samples)
    cands = _candidates(st, ck, existing)
    if not cands:
        return _empty_set(ck, samples)
    sym = d.symbol(ck)
    xs, ys = st.x_init
    k = kernels.impl
    costs = np.empty((len(cands), T))
    runs = []
    stats = st.stats
    for i, f in enumerate(cands):
        segs = segments_for(d, f.cutlines)
        pts = np.empty((T, len(segs), 2))
        iters = np.empty(T, dtype=np.int64)
        failed = k.sweep_samples(xs, ys, segs, samples, st.eps, MAX_SWEEPS, pts, costs[i], iters)
        runs.append(pts)
        stats["candidate_runs"] += 1
        stats["unconverged_samples"] += int(failed)
        if len(segs):
            stats["cold_sweeps"] += int(iters[0])
            stats["cold_samples"] += 1
            stats["warm_sweeps"] += int(iters[1:].sum())
            stats["warm_samples"] += T - 1
    owner_c = np.argmin(costs, axis=0)  # first candidate wins exact ties
    winners = sorted(set(owner_c.tolist()))
    remap = {w: j for j, w in enumerate(winners)}
    encs = tuple(concat(cands[w], sym) for w in winners)
    owner = np.array([remap[w] for w in owner_c.tolist()], dtype=np.int64)
    cost = costs[owner_c, np.arange(T)]
    return EncodingSet(ck, samples, encs, owner, cost, tuple(runs[w] for w in winners))


def _changed(old: EncodingSet, new: EncodingSet, delta: float) -> bool:
    if old.distinct != new.distinct:
        return True
    if new.empty:
        return False
    return bool(np.any(old.cost - new.cost > delta))


def optimize_existing(st: PlannerState, ck: int, existing) -> int:
    """Rewire processed neighbours of ``ck`` until their sets stop changing.

    Returns the number of times a recomputed set replaced the stored one.
    """
    d = st.dissection
    delta = COST_DELTA * d.env.diagonal
    work = deque(n for n in adjacent_cutlines(d, ck) if n in existing)
    queued = set(work)
    triggers = 0
    budget = REWIRE_CAP * max(1, len(d.cutlines))
    while work:
        if budget <= 0:
            st.stats["rewire_cap_hits"] += 1
            log.warning("rewiring around cutline %d abandoned after the recomputation cap", ck)
            break
        budget -= 1
        cr = work.popleft()
        queued.discard(cr)
        new = homotopy_classes_for_cutline(st, cr, existing)
        st.stats["recomputations"] += 1
        if _changed(st.sets[cr], new, delta):
            st.sets[cr] = new
            triggers += 1
            for n in adjacent_cutlines(d, cr):
                if n in existing and n not in queued:
                    work.append(n)
                    queued.add(n)
    st.stats["triggers"] += triggers
    return triggers


# GetGoal ---------------------------------------------------------------

def _goal_key(e: CdtEncoding):
    return (str(e), e.cutlines)


def _build_goal_index(st: PlannerState) -> None:
    """Pack the locator and every stored encoding, grouped by its last polygon."""
    d = st.dissection
    loc = d.locator
    cells = [sorted(poly.id for poly in loc.buckets.get((i, j), ()))
             for i in range(loc.nx) for j in range(loc.ny)]
    cell_start = np.cumsum([0] + [len(c) for c in cells]).astype(np.int64)
    cell_poly = np.array([p for c in cells for p in c], dtype=np.int64)
    edges, poly_start = [], [0]
    for poly in d.polygons:
        v = np.asarray(poly.vertices, dtype=float)
        edges.append(np.hstack([v, np.roll(v, -1, axis=0)]))
        poly_start.append(poly_start[-1] + len(v))
    init_mask = np.zeros(len(d.polygons), dtype=np.int64)
    init_mask[list(st.init_polygons)] = 1

    cands = []  # (encoding, segs, warm (T, m, 2), cutline)
    for s in st.sets:
        for e, p in zip(s.encodings, s.paths):
            warm = np.concatenate([p, s.samples[:, None, :]], axis=1)
            cands.append((e, segments_for(d, e.cutlines), warm, s.cutline))
    order = sorted(range(len(cands)), key=lambda i: _goal_key(cands[i][0]))
    rank = np.empty(len(cands), dtype=np.int64)
    rank[order] = np.arange(len(cands))
    by_poly: list = [[] for _ in d.polygons]
    for i in order:
        by_poly[cands[i][0].last].append(i)
    cand_start = np.cumsum([0] + [len(b) for b in by_poly]).astype(np.int64)
    cand_ids = np.array([i for b in by_poly for i in b], dtype=np.int64)
    seg_start = np.cumsum([0] + [len(c[1]) for c in cands]).astype(np.int64)
    segs = np.ascontiguousarray(np.vstack([c[1] for c in cands]) if cands else np.zeros((0, 4)))
    warm_sizes = [c[2].shape[0] * c[2].shape[1] for c in cands]
    warm_start = np.cumsum([0] + warm_sizes[:-1]).astype(np.int64) if cands else np.zeros(0, np.int64)
    cand_T = np.array([c[2].shape[0] for c in cands], dtype=np.int64)
    warm = np.ascontiguousarray(np.vstack([c[2].reshape(-1, 2) for c in cands]) if cands else np.zeros((0, 2)))
    line = np.zeros((len(cands), 5))
    for i, c in enumerate(cands):
        a = d.cutline_array[c[3], :2]
        ab = d.cutline_array[c[3], 2:] - a
        line[i] = (a[0], a[1], ab[0], ab[1], ab @ ab)
    grid = (loc.x0, loc.y0, loc.cw, loc.ch, loc.nx, loc.ny)
    st._goal_index = kernels.impl.GoalIndex(
        grid, cell_start, cell_poly, np.array(poly_start, dtype=np.int64),
        np.ascontiguousarray(np.vstack(edges)), init_mask, cand_start, cand_ids, rank,
        seg_start, segs, warm_start, cand_T, warm, line, d.tol)
    st._goal_encodings = [c[0] for c in cands]


def get_goal(st: PlannerState, x_goal, eps: Optional[float] = None) -> GoalResult:
    """Globally shortest path from the start point to ``x_goal``.

    Read-only on ``st``: warm starts are copied before compression.
    """
    if st.status != "ready":
        raise PlannerError("planner state is not ready")
    gx, gy = float(x_goal[0]), float(x_goal[1])
    if not (math.isfinite(gx) and math.isfinite(gy)):
        raise ValueError("x_goal is not finite")
    diag = st.dissection.env.diagonal
    xs, ys = st.x_init
    status, idx, cost, sweeps, on_cut, path = st._goal_index.query(
        xs, ys, gx, gy, GOAL_EPS_SCALE * diag if eps is None else eps, MAX_SWEEPS, COST_DELTA * diag)
    if status == 0:
        return GoalResult(path, cost, st._goal_encodings[idx], sweeps, on_cut)
    if status == 1:
        return GoalResult(path, cost, CdtEncoding((idx,)), 0, on_cut)
    if status == -1:
        raise NotInFreeSpace(f"x_goal {(gx, gy)} is not in free space")
    raise Unreachable(f"x_goal {(gx, gy)} is not reachable from {st.x_init}")


class Planner:
    """Single writer, many readers: queries always see a complete state.

    ``reinit`` builds a fresh state off to the side and swaps it in under a
    lock, so concurrent ``query`` calls keep using the previous snapshot.
    """

    def __init__(self, d: ConvexDissection, interval: float = DEFAULT_INTERVAL,
                 eps: Optional[float] = None):
        self.dissection = d
        self.interval = interval
        self.eps = eps
        self._state: Optional[PlannerState] = None
        self._lock = threading.Lock()
        self._writer = threading.Lock()

    @property
    def state(self) -> Optional[PlannerState]:
        with self._lock:
            return self._state

    def reinit(self, x_init) -> PlannerState:
        with self._writer:
            st = set_init(self.dissection, x_init, self.interval, self.eps)
            with self._lock:
                self._state = st
            return st

    def load(self, st: PlannerState) -> None:
        with self._lock:
            self._state = st

    def query(self, x_goal) -> GoalResult:
        st = self.state
        if st is None:
            raise PlannerError("no start point has been set")
        return get_goal(st, x_goal)
