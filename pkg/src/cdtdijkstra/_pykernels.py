"""Pure-Python compression kernels (fallback for the compiled ``_ckernels``).

Array arguments are float64 numpy arrays; results are written in place.
Loops run on Python floats, which is several times faster than indexing
numpy scalars one at a time.
"""
from math import hypot

BACKEND = "python"


def _project(ax, ay, bx, by, px, py, qx, qy):
    """min_sum plus a flag telling whether both neighbours lie on the line."""
    dx = qx - px
    dy = qy - py
    ll = dx * dx + dy * dy
    ua = ((ax - px) * dx + (ay - py) * dy) / ll
    ub = ((bx - px) * dx + (by - py) * dy) / ll
    da = abs(dx * (ay - py) - dy * (ax - px))
    db = abs(dx * (by - py) - dy * (bx - px))
    flat = da + db <= 0.0
    if not flat:
        u = ua + (ub - ua) * da / (da + db)
    else:
        u = ua if ua < ub else ub
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    return px + u * dx, py + u * dy, flat


def min_sum(ax, ay, bx, by, px, py, qx, qy):
    return _project(ax, ay, bx, by, px, py, qx, qy)[:2]


def _length(xs, ys, xe, ye, px, py):
    m = len(px)
    if m == 0:
        return hypot(xe - xs, ye - ys)
    c = hypot(px[0] - xs, py[0] - ys)
    for k in range(1, m):
        c += hypot(px[k] - px[k - 1], py[k] - py[k - 1])
    return c + hypot(xe - px[m - 1], ye - py[m - 1])


def _sweep(xs, ys, xe, ye, sg, px, py):
    """Returns (length, largest displacement, largest displacement by a flat projection)."""
    m = len(px)
    moved = 0.0
    flat_moved = 0.0
    for k in range(m):
        if k == 0:
            ax, ay = xs, ys
        else:
            ax, ay = px[k - 1], py[k - 1]
        if k == m - 1:
            bx, by = xe, ye
        else:
            bx, by = px[k + 1], py[k + 1]
        s = sg[k]
        nx, ny, flat = _project(ax, ay, bx, by, s[0], s[1], s[2], s[3])
        mv = hypot(nx - px[k], ny - py[k])
        if mv > moved:
            moved = mv
        if flat and mv > flat_moved:
            flat_moved = mv
        px[k], py[k] = nx, ny
    return _length(xs, ys, xe, ye, px, py), moved, flat_moved


def _release(xs, ys, xe, ye, sg, px, py, tol):
    """Move each run of coincident vertices onto the chord between its anchors.

    Single-vertex steps cannot separate such a run; the move is kept only
    when it shortens the path.
    """
    m = len(px)
    moved = False
    i = 0
    while i < m:
        j = i
        while j + 1 < m and hypot(px[j + 1] - px[j], py[j + 1] - py[j]) <= tol:
            j += 1
        if j > i:
            ax, ay = (xs, ys) if i == 0 else (px[i - 1], py[i - 1])
            bx, by = (xe, ye) if j == m - 1 else (px[j + 1], py[j + 1])
            old = hypot(px[i] - ax, py[i] - ay) + hypot(bx - px[j], by - py[j])
            for k in range(i, j):
                old += hypot(px[k + 1] - px[k], py[k + 1] - py[k])
            prop = [min_sum(ax, ay, bx, by, *sg[k]) for k in range(i, j + 1)]
            new = 0.0
            lx, ly = ax, ay
            for nx, ny in prop:
                new += hypot(nx - lx, ny - ly)
                lx, ly = nx, ny
            new += hypot(bx - lx, by - ly)
            if new < old - 1e-12 * (old + 1.0):
                for k, (nx, ny) in zip(range(i, j + 1), prop):
                    px[k], py[k] = nx, ny
                moved = True
        i = j + 1
    return moved


def _compress(xs, ys, xe, ye, sg, px, py, eps, max_sweeps, move_tol=float("inf")):
    cost = _length(xs, ys, xe, ye, px, py)
    if not px:
        return cost, 0, True
    n = 0
    while n < max_sweeps:
        old = cost
        cost, moved, flat_moved = _sweep(xs, ys, xe, ye, sg, px, py)
        n += 1
        if old - cost < eps and flat_moved <= eps and moved <= move_tol:
            if len(px) > 1 and _release(xs, ys, xe, ye, sg, px, py, eps):
                cost = _length(xs, ys, xe, ye, px, py)
                continue
            return cost, n, True
    return cost, n, False


def path_length(xs, ys, xe, ye, pts):
    return _length(xs, ys, xe, ye, pts[:, 0].tolist(), pts[:, 1].tolist())


def release(xs, ys, xe, ye, segs, pts, tol):
    """Apply one coincident-run release; True when any vertex moved."""
    px, py = pts[:, 0].tolist(), pts[:, 1].tolist()
    moved = _release(xs, ys, xe, ye, segs.tolist(), px, py, tol)
    pts[:, 0] = px
    pts[:, 1] = py
    return moved


def sweep(xs, ys, xe, ye, segs, pts):
    """One ascending pass of single-vertex projections; returns the new length."""
    px, py = pts[:, 0].tolist(), pts[:, 1].tolist()
    cost = _sweep(xs, ys, xe, ye, segs.tolist(), px, py)[0]
    pts[:, 0] = px
    pts[:, 1] = py
    return cost


def sweep_step(xs, ys, xe, ye, segs, pts):
    """One sweep; returns (length, largest displacement, largest flat slide)."""
    px, py = pts[:, 0].tolist(), pts[:, 1].tolist()
    out = _sweep(xs, ys, xe, ye, segs.tolist(), px, py)
    pts[:, 0] = px
    pts[:, 1] = py
    return out


def compress(xs, ys, xe, ye, segs, pts, eps, max_sweeps, move_tol=float("inf")):
    """Repeat sweeps until the improvement drops below eps.

    A sweep that slid a vertex farther than eps along a zero-gain direction
    never ends the loop; with a finite ``move_tol`` the last sweep must also have moved
    every vertex by at most that much. Returns (cost, sweeps, converged).
    """
    px, py = pts[:, 0].tolist(), pts[:, 1].tolist()
    cost, n, ok = _compress(xs, ys, xe, ye, segs.tolist(), px, py, eps, max_sweeps, move_tol)
    if px:
        pts[:, 0] = px
        pts[:, 1] = py
    return cost, n, ok


def sweep_samples(xs, ys, segs, samples, eps, max_sweeps, out_pts, out_cost, out_iters):
    """Compress one encoding towards every sample, warm-starting from the previous one.

    Sample 0 starts from cutline midpoints. Returns the number of samples that
    hit ``max_sweeps`` without converging.
    """
    sg = segs.tolist()
    m = len(sg)
    smp = samples.tolist()
    failed = 0
    px = [0.5 * (s[0] + s[2]) for s in sg]
    py = [0.5 * (s[1] + s[3]) for s in sg]
    for t, (xe, ye) in enumerate(smp):
        cost, n, ok = _compress(xs, ys, xe, ye, sg, px, py, eps, max_sweeps)
        if not ok:
            failed += 1
        out_cost[t] = cost
        out_iters[t] = n
        if m:
            out_pts[t, :, 0] = px
            out_pts[t, :, 1] = py
    return failed


class GoalIndex:
    """Flattened point locator plus per-polygon goal candidates (see the compiled twin)."""

    def __init__(self, grid, cell_start, cell_poly, poly_start, edges, init_mask,
                 cand_start, cand_ids, cand_rank, seg_start, segs, warm_start, cand_T,
                 warm, line, tol):
        self.x0, self.y0, self.cw, self.ch, self.nx, self.ny = grid
        self.cell_start = cell_start.tolist()
        self.cell_poly = cell_poly.tolist()
        self.poly_start = poly_start.tolist()
        self.edges = edges.tolist()
        self.init_mask = init_mask.tolist()
        self.cand_start = cand_start.tolist()
        self.cand_ids = cand_ids.tolist()
        self.cand_rank = cand_rank.tolist()
        self.seg_start = seg_start.tolist()
        self.segs = segs
        self.warm_start = warm_start.tolist()
        self.cand_T = cand_T.tolist()
        self.warm = warm
        self.line = line.tolist()
        self.tol = tol

    def _inside(self, p, gx, gy):
        for ax, ay, bx, by in self.edges[self.poly_start[p]:self.poly_start[p + 1]]:
            if (bx - ax) * (gy - ay) - (by - ay) * (gx - ax) < -self.tol * hypot(bx - ax, by - ay):
                return False
        return True

    def _cell_polys(self, gx, gy):
        i = min(max(int((gx - self.x0) // self.cw), 0), self.nx - 1)
        j = min(max(int((gy - self.y0) // self.ch), 0), self.ny - 1)
        cell = i * self.ny + j
        return self.cell_poly[self.cell_start[cell]:self.cell_start[cell + 1]]

    def containing(self, gx, gy):
        return [p for p in self._cell_polys(gx, gy) if self._inside(p, gx, gy)]

    def query(self, xs, ys, gx, gy, eps, max_sweeps, tie_tol):
        import numpy as np

        polys = self.containing(gx, gy)
        if not polys:
            return -1, -1, float("inf"), 0, False, None
        for p in polys:
            if self.init_mask[p]:
                return 1, p, hypot(gx - xs, gy - ys), 0, len(polys) > 1, np.array([[xs, ys], [gx, gy]])
        cands = sorted((c for p in polys for c in self.cand_ids[self.cand_start[p]:self.cand_start[p + 1]]),
                       key=self.cand_rank.__getitem__)
        if not cands:
            return -2, -1, float("inf"), 0, len(polys) > 1, None
        best, best_cost, best_pts, total = -1, float("inf"), None, 0
        for c in cands:
            s0, s1 = self.seg_start[c], self.seg_start[c + 1]
            m, T = s1 - s0, self.cand_T[c]
            ax, ay, abx, aby, ll = self.line[c]
            u = ((gx - ax) * abx + (gy - ay) * aby) / ll
            t = min(T - 1, int(u * (T - 1) + 0.5)) if u > 0 else 0
            w0 = self.warm_start[c] + t * m
            pts = self.warm[w0:w0 + m].copy()
            cost, n, _ = compress(xs, ys, gx, gy, self.segs[s0:s1], pts, eps, max_sweeps)
            total += n
            if cost < best_cost - tie_tol:
                best, best_cost, best_pts = c, cost, pts
        path = np.vstack([[xs, ys], best_pts, [gx, gy]])
        return 0, best, best_cost, total, len(polys) > 1, path
