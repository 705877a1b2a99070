"""Shortest path inside one homotopy class by iterated single-vertex compression."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .dissection import ConvexDissection
from .encoding import CdtEncoding
from .geometry import point_in_convex_polygon

MAX_SWEEPS = 10_000
EPS_SCALE = 1e-6


class ContractError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CompressionResult:
    path: np.ndarray  # (m + 2, 2): x_s, one vertex per crossed cutline, x_e
    cost: float
    iterations: int
    history: Optional[tuple] = None  # cost before the first sweep and after each sweep


def default_eps(d: ConvexDissection) -> float:
    return EPS_SCALE * d.env.diagonal


def segments_for(d: ConvexDissection, cutline_ids: Sequence[int]) -> np.ndarray:
    return np.ascontiguousarray(d.cutline_array[list(cutline_ids)].reshape(-1, 4))


def _finite(p, name):
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ContractError(f"{name} is not finite")
    return x, y


def get_shortest_path(d: ConvexDissection, enc: CdtEncoding, x_s, x_e,
                      warm_start=None, eps: Optional[float] = None,
                      max_sweeps: int = MAX_SWEEPS, trace: bool = False,
                      move_tol: Optional[float] = None) -> CompressionResult:
    """Locally shortest path from x_s to x_e whose polygon walk is ``enc``.

    Interior vertices start at the cutline midpoints, or at ``warm_start``
    (a full polyline or just its interior vertices). Sweeps repeat until one
    full sweep improves the length by less than ``eps``, made no zero-gain
    slide along a cutline longer than ``eps``, and moved no vertex farther than ``move_tol``
    (default: the dissection tolerance, so the result is a true fixed point).
    Coincident runs that single-vertex steps cannot split are then released
    onto their chord and, if that helped, sweeping resumes.
    """
    xs, ys = _finite(x_s, "x_s")
    xe, ye = _finite(x_e, "x_e")
    tol = d.tol
    if not point_in_convex_polygon((xs, ys), d.polygons[enc.first].vertices, tol):
        raise ContractError(f"x_s is not in polygon {enc.first}")
    if not point_in_convex_polygon((xe, ye), d.polygons[enc.last].vertices, tol):
        raise ContractError(f"x_e is not in polygon {enc.last}")
    if eps is None:
        eps = default_eps(d)
    if move_tol is None:
        move_tol = tol
    segs = segments_for(d, enc.cutlines)
    m = len(segs)
    if warm_start is not None:
        w = np.array(warm_start, dtype=float).reshape(-1, 2)
        if len(w) == m + 2:
            w = w[1:-1]
        if len(w) != m:
            raise ContractError(f"warm start has {len(w)} interior vertices, encoding crosses {m} cutlines")
        pts = np.ascontiguousarray(w)
    else:
        pts = np.ascontiguousarray(0.5 * (segs[:, :2] + segs[:, 2:]))

    k = kernels.impl
    if trace:
        cost = k.path_length(xs, ys, xe, ye, pts)
        hist = [cost]
        n = 0
        done = m == 0
        while not done and n < max_sweeps:
            new, moved, flat_moved = k.sweep_step(xs, ys, xe, ye, segs, pts)
            hist.append(new)
            n += 1
            stalled = cost - new < eps and flat_moved <= eps and moved <= move_tol
            cost = new
            if stalled:
                if m > 1 and k.release(xs, ys, xe, ye, segs, pts, eps):
                    cost = k.path_length(xs, ys, xe, ye, pts)
                    hist[-1] = cost
                else:
                    done = True
        if not done:
            raise ConvergenceError(f"no convergence after {max_sweeps} sweeps")
        history = tuple(hist)
    else:
        cost, n, ok = k.compress(xs, ys, xe, ye, segs, pts, eps, max_sweeps, move_tol)
        if not ok:
            raise ConvergenceError(f"no convergence after {max_sweeps} sweeps")
        history = None
    path = np.vstack([[xs, ys], pts, [xe, ye]])
    return CompressionResult(path, float(cost), int(n), history)


def compress_sweep(vertices, cutlines) -> np.ndarray:
    """One ascending pass: each interior vertex moves to the best point of its cutline.

    ``cutlines`` holds one segment per interior vertex, as ((ax, ay), (bx, by))
    pairs or flat 4-sequences.
    """
    v = np.array(vertices, dtype=float).reshape(-1, 2)
    segs = np.ascontiguousarray(np.asarray(cutlines, dtype=float).reshape(-1, 4))
    if len(v) != len(segs) + 2:
        raise ContractError(f"{len(v)} vertices for {len(segs)} cutlines")
    pts = np.ascontiguousarray(v[1:-1])
    if len(segs):
        kernels.impl.sweep(v[0, 0], v[0, 1], v[-1, 0], v[-1, 1], segs, pts)
    return np.vstack([v[:1], pts, v[-1:]])
