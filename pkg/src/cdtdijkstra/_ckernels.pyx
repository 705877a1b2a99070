# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled compression kernels; same contract as ``_pykernels``.

The cores work on raw row-major buffers: cutline k is ``sg[4k:4k+4]`` and
interior vertex k is ``p[2k:2k+2]``.
"""
from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free

import numpy as np

BACKEND = "cython"


cdef inline double _dist(double ax, double ay, double bx, double by) nogil:
    cdef double dx = bx - ax, dy = by - ay
    return sqrt(dx * dx + dy * dy)


cdef inline bint _min_sum(double ax, double ay, double bx, double by,
                          double px, double py, double qx, double qy,
                          double* ox, double* oy) nogil:
    cdef double dx = qx - px, dy = qy - py
    cdef double ll = dx * dx + dy * dy
    cdef double ua = ((ax - px) * dx + (ay - py) * dy) / ll
    cdef double ub = ((bx - px) * dx + (by - py) * dy) / ll
    cdef double da = fabs(dx * (ay - py) - dy * (ax - px))
    cdef double db = fabs(dx * (by - py) - dy * (bx - px))
    cdef double u
    cdef bint flat = da + db <= 0.0
    if not flat:
        u = ua + (ub - ua) * da / (da + db)
    else:
        u = ua if ua < ub else ub
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    ox[0] = px + u * dx
    oy[0] = py + u * dy
    return flat


cdef double _length(double xs, double ys, double xe, double ye,
                    const double* p, Py_ssize_t m) nogil:
    cdef Py_ssize_t k
    cdef double c
    if m == 0:
        return _dist(xs, ys, xe, ye)
    c = _dist(xs, ys, p[0], p[1])
    for k in range(1, m):
        c += _dist(p[2 * k - 2], p[2 * k - 1], p[2 * k], p[2 * k + 1])
    return c + _dist(p[2 * m - 2], p[2 * m - 1], xe, ye)


cdef double _sweep(double xs, double ys, double xe, double ye,
                   const double* sg, double* p, Py_ssize_t m,
                   double* moved, double* flat_moved) nogil:
    """One ascending pass; reports the largest displacement overall and the
    largest one made by a zero-gain (flat) projection."""
    cdef Py_ssize_t k
    cdef double ax, ay, bx, by, nx, ny, mv
    cdef const double* s
    cdef bint flat
    moved[0] = 0.0
    flat_moved[0] = 0.0
    for k in range(m):
        if k == 0:
            ax = xs
            ay = ys
        else:
            ax = p[2 * k - 2]
            ay = p[2 * k - 1]
        if k == m - 1:
            bx = xe
            by = ye
        else:
            bx = p[2 * k + 2]
            by = p[2 * k + 3]
        s = sg + 4 * k
        flat = _min_sum(ax, ay, bx, by, s[0], s[1], s[2], s[3], &nx, &ny)
        mv = _dist(nx, ny, p[2 * k], p[2 * k + 1])
        if mv > moved[0]:
            moved[0] = mv
        if flat and mv > flat_moved[0]:
            flat_moved[0] = mv
        p[2 * k] = nx
        p[2 * k + 1] = ny
    return _length(xs, ys, xe, ye, p, m)


cdef bint _release(double xs, double ys, double xe, double ye,
                   const double* sg, double* p, Py_ssize_t m, double tol) nogil:
    """Move each run of coincident vertices onto the chord between its anchors.

    Single-vertex steps cannot separate such a run; the move is kept only
    when it shortens the path.
    """
    cdef Py_ssize_t i = 0, j, k
    cdef bint moved = False
    cdef double px, py, qx, qy, old, new, lx, ly, nx, ny
    cdef const double* s
    while i < m:
        j = i
        while j + 1 < m and _dist(p[2 * j], p[2 * j + 1], p[2 * j + 2], p[2 * j + 3]) <= tol:
            j += 1
        if j > i:
            if i == 0:
                px = xs
                py = ys
            else:
                px = p[2 * i - 2]
                py = p[2 * i - 1]
            if j == m - 1:
                qx = xe
                qy = ye
            else:
                qx = p[2 * j + 2]
                qy = p[2 * j + 3]
            old = _dist(px, py, p[2 * i], p[2 * i + 1]) + _dist(p[2 * j], p[2 * j + 1], qx, qy)
            for k in range(i, j):
                old += _dist(p[2 * k], p[2 * k + 1], p[2 * k + 2], p[2 * k + 3])
            new = 0.0
            lx = px
            ly = py
            for k in range(i, j + 1):
                s = sg + 4 * k
                _min_sum(px, py, qx, qy, s[0], s[1], s[2], s[3], &nx, &ny)
                new += _dist(lx, ly, nx, ny)
                lx = nx
                ly = ny
            new += _dist(lx, ly, qx, qy)
            if new < old - 1e-12 * (old + 1.0):
                for k in range(i, j + 1):
                    s = sg + 4 * k
                    _min_sum(px, py, qx, qy, s[0], s[1], s[2], s[3], &p[2 * k], &p[2 * k + 1])
                moved = True
        i = j + 1
    return moved


cdef double _compress(double xs, double ys, double xe, double ye,
                      const double* sg, double* p, Py_ssize_t m,
                      double eps, long max_sweeps, long* n_out, bint* ok,
                      double move_tol=INFINITY) nogil:
    cdef double cost = _length(xs, ys, xe, ye, p, m)
    cdef double old, moved, flat_moved
    cdef long n = 0
    ok[0] = True
    if m == 0:
        n_out[0] = 0
        return cost
    while n < max_sweeps:
        old = cost
        cost = _sweep(xs, ys, xe, ye, sg, p, m, &moved, &flat_moved)
        n += 1
        if old - cost < eps and flat_moved <= eps and moved <= move_tol:
            if m > 1 and _release(xs, ys, xe, ye, sg, p, m, eps):
                cost = _length(xs, ys, xe, ye, p, m)
                continue
            n_out[0] = n
            return cost
    ok[0] = False
    n_out[0] = n
    return cost


cdef inline const double* _cptr(const double[:, ::1] a) nogil:
    return &a[0, 0] if a.shape[0] > 0 else NULL


cdef inline double* _ptr(double[:, ::1] a) nogil:
    return &a[0, 0] if a.shape[0] > 0 else NULL


def min_sum(double ax, double ay, double bx, double by,
            double px, double py, double qx, double qy):
    cdef double ox, oy
    _min_sum(ax, ay, bx, by, px, py, qx, qy, &ox, &oy)
    return ox, oy


def path_length(double xs, double ys, double xe, double ye, const double[:, ::1] pts):
    return _length(xs, ys, xe, ye, _cptr(pts), pts.shape[0])


def release(double xs, double ys, double xe, double ye,
            const double[:, ::1] segs, double[:, ::1] pts, double tol):
    return _release(xs, ys, xe, ye, _cptr(segs), _ptr(pts), pts.shape[0], tol)


def sweep(double xs, double ys, double xe, double ye,
          const double[:, ::1] segs, double[:, ::1] pts):
    cdef double moved, flat_moved
    return _sweep(xs, ys, xe, ye, _cptr(segs), _ptr(pts), pts.shape[0], &moved, &flat_moved)


def sweep_step(double xs, double ys, double xe, double ye,
               const double[:, ::1] segs, double[:, ::1] pts):
    cdef double moved, flat_moved
    cdef double cost = _sweep(xs, ys, xe, ye, _cptr(segs), _ptr(pts), pts.shape[0],
                              &moved, &flat_moved)
    return cost, moved, flat_moved


def compress(double xs, double ys, double xe, double ye,
             const double[:, ::1] segs, double[:, ::1] pts, double eps, long max_sweeps,
             double move_tol=INFINITY):
    cdef long n = 0
    cdef bint ok = True
    cdef double cost
    cdef const double* sg = _cptr(segs)
    cdef double* p = _ptr(pts)
    cdef Py_ssize_t m = pts.shape[0]
    with nogil:
        cost = _compress(xs, ys, xe, ye, sg, p, m, eps, max_sweeps, &n, &ok, move_tol)
    return cost, n, ok


def sweep_samples(double xs, double ys, const double[:, ::1] segs, const double[:, ::1] samples,
                  double eps, long max_sweeps, double[:, :, ::1] out_pts,
                  double[::1] out_cost, long[::1] out_iters):
    cdef Py_ssize_t m = segs.shape[0]
    cdef Py_ssize_t T = samples.shape[0]
    cdef Py_ssize_t t, k
    cdef long n = 0
    cdef bint ok = True
    cdef long failed = 0
    cdef const double* sg
    cdef double* p
    if m == 0:
        for t in range(T):
            out_cost[t] = _dist(xs, ys, samples[t, 0], samples[t, 1])
            out_iters[t] = 0
        return 0
    sg = &segs[0, 0]
    p = &out_pts[0, 0, 0]
    for k in range(m):
        p[2 * k] = 0.5 * (sg[4 * k] + sg[4 * k + 2])
        p[2 * k + 1] = 0.5 * (sg[4 * k + 1] + sg[4 * k + 3])
    with nogil:
        for t in range(T):
            if t > 0:
                for k in range(2 * m):
                    p[2 * m + k] = p[k]
                p += 2 * m
            out_cost[t] = _compress(xs, ys, samples[t, 0], samples[t, 1], sg, p, m,
                                    eps, max_sweeps, &n, &ok)
            out_iters[t] = n
            if not ok:
                failed += 1
    return failed


cdef class GoalIndex:
    """Flattened point locator plus per-polygon goal candidates.

    Built once per planner state; ``query`` answers a goal with no Python
    work beyond packing the result.
    """
    cdef double x0, y0, cw, ch, tol
    cdef Py_ssize_t nx, ny, mmax, cmax
    cdef const long[::1] cell_start, cell_poly, poly_start, init_mask
    cdef const long[::1] cand_start, cand_ids, cand_rank, seg_start, warm_start, cand_T
    cdef const double[:, ::1] edges, segs, warm, line

    def __init__(self, grid, long[::1] cell_start, long[::1] cell_poly,
                 long[::1] poly_start, double[:, ::1] edges, long[::1] init_mask,
                 long[::1] cand_start, long[::1] cand_ids, long[::1] cand_rank,
                 long[::1] seg_start, double[:, ::1] segs,
                 long[::1] warm_start, long[::1] cand_T, double[:, ::1] warm,
                 double[:, ::1] line, double tol):
        self.x0, self.y0, self.cw, self.ch, self.nx, self.ny = grid
        self.cell_start = cell_start
        self.cell_poly = cell_poly
        self.poly_start = poly_start
        self.edges = edges
        self.init_mask = init_mask
        self.cand_start = cand_start
        self.cand_ids = cand_ids
        self.cand_rank = cand_rank
        self.seg_start = seg_start
        self.segs = segs
        self.warm_start = warm_start
        self.cand_T = cand_T
        self.warm = warm
        self.line = line
        self.tol = tol
        self.mmax = 0
        cdef Py_ssize_t c
        for c in range(seg_start.shape[0] - 1):
            if seg_start[c + 1] - seg_start[c] > self.mmax:
                self.mmax = seg_start[c + 1] - seg_start[c]
        self.cmax = cand_ids.shape[0]

    cdef bint _inside(self, Py_ssize_t p, double gx, double gy) nogil:
        cdef Py_ssize_t e
        cdef double ax, ay, bx, by
        for e in range(self.poly_start[p], self.poly_start[p + 1]):
            ax = self.edges[e, 0]
            ay = self.edges[e, 1]
            bx = self.edges[e, 2]
            by = self.edges[e, 3]
            if (bx - ax) * (gy - ay) - (by - ay) * (gx - ax) < -self.tol * _dist(ax, ay, bx, by):
                return False
        return True

    cdef Py_ssize_t _cell(self, double gx, double gy) nogil:
        cdef Py_ssize_t i = <Py_ssize_t>((gx - self.x0) // self.cw)
        cdef Py_ssize_t j = <Py_ssize_t>((gy - self.y0) // self.ch)
        i = min(max(i, 0), self.nx - 1)
        j = min(max(j, 0), self.ny - 1)
        return i * self.ny + j

    def containing(self, double gx, double gy):
        cdef Py_ssize_t cell = self._cell(gx, gy), k
        return [self.cell_poly[k] for k in range(self.cell_start[cell], self.cell_start[cell + 1])
                if self._inside(self.cell_poly[k], gx, gy)]

    def query(self, double xs, double ys, double gx, double gy, double eps, long max_sweeps,
              double tie_tol):
        """(status, id, cost, sweeps, on_cutline, path).

        status 0: id is the winning candidate; 1: id is a start polygon holding
        the goal (straight segment); -1: goal outside free space; -2: no candidate.
        """
        cdef Py_ssize_t cell = self._cell(gx, gy)
        cdef Py_ssize_t k, p, npoly = 0, ncand = 0, same = -1, best = -1, best_m = 0
        cdef long total = 0
        cdef double best_cost = INFINITY
        cdef double[:, ::1] out
        cdef long* cands
        cdef double* cur
        cdef double* keep
        for k in range(self.cell_start[cell], self.cell_start[cell + 1]):
            p = self.cell_poly[k]
            if self._inside(p, gx, gy):
                npoly += 1
                if self.init_mask[p] and same < 0:
                    same = p
        if npoly == 0:
            return -1, -1, INFINITY, 0, False, None
        if same >= 0:
            path = np.empty((2, 2))
            out = path
            out[0, 0] = xs
            out[0, 1] = ys
            out[1, 0] = gx
            out[1, 1] = gy
            return 1, same, _dist(xs, ys, gx, gy), 0, npoly > 1, path
        # per-call scratch so concurrent readers never share buffers
        cands = <long*> malloc((self.cmax + 1) * sizeof(long))
        cur = <double*> malloc((4 * self.mmax + 4) * sizeof(double))
        try:
            if cands == NULL or cur == NULL:
                raise MemoryError()
            keep = cur + 2 * self.mmax + 2
            self._scan(cands, cur, keep, cell, xs, ys, gx, gy, eps, max_sweeps, tie_tol,
                       &ncand, &best, &best_m, &best_cost, &total)
            if ncand == 0:
                return -2, -1, INFINITY, 0, npoly > 1, None
            path = np.empty((best_m + 2, 2))
            out = path
            out[0, 0] = xs
            out[0, 1] = ys
            for k in range(best_m):
                out[k + 1, 0] = keep[2 * k]
                out[k + 1, 1] = keep[2 * k + 1]
            out[best_m + 1, 0] = gx
            out[best_m + 1, 1] = gy
            return 0, best, best_cost, total, npoly > 1, path
        finally:
            free(cands)
            free(cur)

    cdef void _scan(self, long* cands, double* cur, double* keep, Py_ssize_t cell,
                    double xs, double ys, double gx, double gy, double eps, long max_sweeps,
                    double tie_tol, Py_ssize_t* ncand_out, Py_ssize_t* best_out,
                    Py_ssize_t* m_out, double* cost_out, long* total_out) noexcept:
        cdef Py_ssize_t k, p, c, q, t, T, m, ncand = 0, best = -1, best_m = 0
        cdef long n = 0, total = 0
        cdef bint ok = True
        cdef double cost, best_cost = INFINITY, u, dx, dy
        cdef const double* w
        with nogil:
            for k in range(self.cell_start[cell], self.cell_start[cell + 1]):
                p = self.cell_poly[k]
                if self._inside(p, gx, gy):
                    for q in range(self.cand_start[p], self.cand_start[p + 1]):
                        c = self.cand_ids[q]
                        # keep the merged list ordered by rank
                        t = ncand
                        while t > 0 and self.cand_rank[cands[t - 1]] > self.cand_rank[c]:
                            cands[t] = cands[t - 1]
                            t -= 1
                        cands[t] = c
                        ncand += 1
            for q in range(ncand):
                c = cands[q]
                m = self.seg_start[c + 1] - self.seg_start[c]
                T = self.cand_T[c]
                dx = gx - self.line[c, 0]
                dy = gy - self.line[c, 1]
                u = (dx * self.line[c, 2] + dy * self.line[c, 3]) / self.line[c, 4]
                t = <Py_ssize_t>(u * (T - 1) + 0.5) if u > 0 else 0
                if t > T - 1:
                    t = T - 1
                w = &self.warm[self.warm_start[c] + t * m, 0]
                for k in range(2 * m):
                    cur[k] = w[k]
                cost = _compress(xs, ys, gx, gy, &self.segs[self.seg_start[c], 0], cur, m,
                                 eps, max_sweeps, &n, &ok)
                total += n
                if cost < best_cost - tie_tol:
                    best_cost = cost
                    best = c
                    best_m = m
                    for k in range(2 * m):
                        keep[k] = cur[k]
        ncand_out[0] = ncand
        best_out[0] = best
        m_out[0] = best_m
        cost_out[0] = best_cost
        total_out[0] = total
