"""Seeded benchmark environments and random feasible points."""
from __future__ import annotations

import numpy as np
from shapely.geometry import box
from shapely.ops import unary_union

from .env_model import Environment, make_environment


def _square(size: float):
    return [(0.0, 0.0), (size, 0.0), (size, size), (0.0, size)]


def _rect(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


def random_rect_map(seed: int, n_obstacles=None, size: float = 1000.0, gap: float = 20.0,
                    min_side: float = 40.0, max_side: float = 250.0) -> Environment:
    """Axis-aligned rectangles, pairwise separated and clear of the border by ``gap``.

    ``n_obstacles`` defaults to a seeded draw from 3..10. Placement is by
    rejection; the result is fully determined by the seed.
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 11)) if n_obstacles is None else int(n_obstacles)
    rects: list = []
    tries = 0
    while len(rects) < n:
        tries += 1
        if tries > 10_000:
            raise RuntimeError(f"could not place {n} obstacles")
        w, h = rng.uniform(min_side, max_side, 2)
        x0 = rng.uniform(gap, size - gap - w)
        y0 = rng.uniform(gap, size - gap - h)
        r = (x0, y0, x0 + w, y0 + h)
        if all(r[0] > q[2] + gap or q[0] > r[2] + gap or r[1] > q[3] + gap or q[1] > r[3] + gap
               for q in rects):
            rects.append(r)
    return make_environment(_square(size), [_rect(*r) for r in rects])


def row_map(n: int, size: float = 1000.0) -> Environment:
    """``n`` equal blocks in a horizontal row across the middle."""
    if n == 0:
        return make_environment(_square(size))
    w = size / (2 * n + 1)
    obs = [_rect((2 * i + 1) * w, 0.4 * size, (2 * i + 2) * w, 0.6 * size) for i in range(n)]
    return make_environment(_square(size), obs)


def maze_map(size: float = 1000.0, cells: int = 11, thickness: float = 20.0,
             seed: int = 1) -> Environment:
    """Grid maze carved by a seeded depth-first search, with one wall knocked out.

    A perfect maze has a single wall network fused to the boundary; the extra
    opening closes one loop in the corridor graph. With the defaults the loop
    encloses one island, so the topology graph has exactly one cycle.
    """
    rng = np.random.default_rng(seed)
    n = cells
    # east[i, j] separates cell (i, j) from (i + 1, j); north[i, j] from (i, j + 1)
    east = np.ones((n - 1, n), dtype=bool)
    north = np.ones((n, n - 1), dtype=bool)
    seen = np.zeros((n, n), dtype=bool)
    seen[0, 0] = True
    stack = [(0, 0)]
    while stack:
        i, j = stack[-1]
        nb = [(i + di, j + dj) for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1))
              if 0 <= i + di < n and 0 <= j + dj < n and not seen[i + di, j + dj]]
        if not nb:
            stack.pop()
            continue
        a, b = nb[int(rng.integers(len(nb)))]
        if a != i:
            east[min(a, i), j] = False
        else:
            north[i, min(b, j)] = False
        seen[a, b] = True
        stack.append((a, b))
    i, j = np.argwhere(east)[int(rng.integers(int(east.sum())))]
    east[i, j] = False

    pitch, h = size / n, thickness / 2
    walls = [box(x - h, max(0.0, j * pitch - h), x + h, min(size, (j + 1) * pitch + h))
             for (i, j) in np.argwhere(east) for x in [(i + 1) * pitch]]
    walls += [box(max(0.0, i * pitch - h), y - h, min(size, (i + 1) * pitch + h), y + h)
              for (i, j) in np.argwhere(north) for y in [(j + 1) * pitch]]
    merged = unary_union(walls)
    parts = getattr(merged, "geoms", [merged])
    return make_environment(_square(size), [list(p.exterior.coords)[:-1] for p in parts])


def cluttered_map(size: float = 1000.0, blocks: int = 14, side: float = 90.0) -> Environment:
    """Uniform grid of equal square blocks (a 4x4 lattice trimmed to ``blocks``)."""
    per = int(np.ceil(np.sqrt(blocks)))
    pitch = size / per
    obs = []
    for k in range(blocks):
        r, c = divmod(k, per)
        cx, cy = (c + 0.5) * pitch, (r + 0.5) * pitch
        obs.append(_rect(cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2))
    return make_environment(_square(size), obs)


def sealed_map(size: float = 100.0) -> Environment:
    """A square room with a closed chamber in one corner (two free components)."""
    wall = [(60.0, 60.0), (100.0, 60.0), (100.0, 62.0), (62.0, 62.0), (62.0, 100.0), (60.0, 100.0)]
    return make_environment(_square(size), [wall])


def random_free_point(env: Environment, rng: np.random.Generator, margin: float = 0.0):
    """Uniform point of free space (rejection sampling in the bounding box)."""
    x0, y0, x1, y1 = env.bbox
    while True:
        p = (float(rng.uniform(x0 + margin, x1 - margin)), float(rng.uniform(y0 + margin, y1 - margin)))
        if env.contains(p):
            return p


BENCH_MAPS = {
    "maze": maze_map,
    "cluttered": cluttered_map,
}
