"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured figures
before asserting, so ``pytest -v`` output doubles as the acceptance report.
"""
import json
import math
import statistics
import time

import numpy as np
import pytest

from cdtdijkstra import cli, kernels, maps
from cdtdijkstra.bench import HARD_TOL, REL_TOL, strip_timings
from cdtdijkstra.dissection import build_topology_graph, validate_dissection
from cdtdijkstra.encoding import CdtEncoding, encode_path
from cdtdijkstra.env_model import count_independent_obstacles
from cdtdijkstra.oracle import enumerate_class_optima, simple_class_count, visibility_shortest
from cdtdijkstra.planner import get_goal, set_init
from cdtdijkstra.shortest_path import MAX_SWEEPS, ConvergenceError, default_eps, get_shortest_path, segments_for

from .helpers import point_in_polygon, random_instance, random_walk


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def bench_maps():
    out = {name: build_topology_graph(f()) for name, f in maps.BENCH_MAPS.items()}
    for s in range(5):
        out[f"random-{s}"] = build_topology_graph(maps.random_rect_map(s))
    return out


def _gap(cost, oracle):
    return abs(cost - oracle) / oracle if oracle > 0 else abs(cost - oracle)


def test_1_optimality_against_visibility_oracle(capsys):
    t0 = time.perf_counter()
    gaps = []
    for seed in range(100):
        env = maps.random_rect_map(seed)
        d = build_topology_graph(env)
        rng = np.random.default_rng(1000 + seed)
        a, b = maps.random_free_point(env, rng), maps.random_free_point(env, rng)
        st = set_init(d, a)
        gaps.append(_gap(get_goal(st, b).cost, visibility_shortest(env, a, b).cost))
    dt = time.perf_counter() - t0
    within = sum(g <= REL_TOL for g in gaps)
    ok = within >= 99 and max(gaps) <= HARD_TOL and dt < 60
    report(capsys, 1, ok, f"{within}/100 within {REL_TOL:g} rel, max gap {max(gaps):.2e} "
                          f"(limit {HARD_TOL:g}), {dt:.1f} s (limit 60 s)")


def test_2_one_set_init_serves_all_goals(capsys):
    env = maps.random_rect_map(42)
    d = build_topology_graph(env)
    rng = np.random.default_rng(42)
    a = maps.random_free_point(env, rng)
    st = set_init(d, a)
    h = st.state_hash()
    gaps = []
    for _ in range(1000):
        g = maps.random_free_point(env, rng)
        gaps.append(_gap(get_goal(st, g).cost, visibility_shortest(env, a, g).cost))
    within = sum(x <= REL_TOL for x in gaps)
    same = st.state_hash() == h
    ok = within >= 990 and max(gaps) <= HARD_TOL and same
    report(capsys, 2, ok, f"{within}/1000 within {REL_TOL:g} rel, max gap {max(gaps):.2e}, "
                          f"state hash unchanged: {same}")


def test_3_get_goal_latency(capsys, bench_maps):
    lines, ok = [], True
    for name, d in bench_maps.items():
        rng = np.random.default_rng(7)
        a = maps.random_free_point(d.env, rng)
        si = statistics.median(set_init(d, a).stats["set_init_ms"] for _ in range(3))
        st = set_init(d, a)
        goals = [maps.random_free_point(d.env, rng) for _ in range(1000)]
        times = []
        for g in goals:
            t = time.perf_counter()
            get_goal(st, g)
            times.append(time.perf_counter() - t)
        med_ms = statistics.median(times) * 1e3
        good = med_ms < si / 1000 and med_ms < 1.0
        ok &= good
        lines.append(f"{name} {med_ms * 1e3:.1f} us vs SetInit {si:.1f} ms (ratio 1/{si / med_ms:.0f})")
    report(capsys, 3, ok, f"[{kernels.BACKEND}] " + "; ".join(lines))


def test_4_set_init_budget(capsys, bench_maps):
    worst, ok, n_cut = 0.0, True, 0
    for name, d in bench_maps.items():
        assert len(d.cutlines) <= 150
        n_cut = max(n_cut, len(d.cutlines))
        a = maps.random_free_point(d.env, np.random.default_rng(1))
        ms = set_init(d, a).stats["set_init_ms"]
        worst = max(worst, ms)
    ok = worst < 500
    report(capsys, 4, ok, f"slowest SetInit {worst:.1f} ms (limit 500 ms), up to {n_cut} cutlines")


def test_5_compression_properties(capsys):
    ds = [build_topology_graph(maps.random_rect_map(s)) for s in range(10)]
    rng = np.random.default_rng(5)
    mono = conv = fixed = sub = 0
    k = kernels.impl
    worst_move = worst_sub = 0.0
    for i in range(1000):
        d = ds[i % 10]
        enc, xs, xe = random_instance(rng, d)
        eps = default_eps(d)
        try:
            r = get_shortest_path(d, enc, xs, xe, trace=True)
        except ConvergenceError:
            conv += 1
            continue
        h = np.asarray(r.history)
        # a sweep never lengthens the path; allow the last bits of the length sum
        mono += int(np.any(np.diff(h) > 4 * np.spacing(h[:-1])))
        segs = segments_for(d, enc.cutlines)
        p = r.path
        move = max((math.dist(k.min_sum(*p[j - 1], *p[j + 1], *segs[j - 1]), p[j])
                    for j in range(1, len(p) - 1)), default=0.0)
        worst_move = max(worst_move, move)
        fixed += int(move > d.tol)
        # every contiguous run of interior vertices, re-solved with its ends pinned
        m = len(segs)
        for lo in range(1, m + 1):
            for hi in range(lo, m + 1):
                a, b = p[lo - 1], p[hi + 1]
                old = float(np.hypot(*np.diff(p[lo - 1:hi + 2], axis=0).T).sum())
                pts = np.ascontiguousarray(0.5 * (segs[lo - 1:hi, :2] + segs[lo - 1:hi, 2:]))
                new, _, _ = k.compress(*a, *b, segs[lo - 1:hi], pts, eps * 1e-3, MAX_SWEEPS, d.tol)
                worst_sub = max(worst_sub, (old - new) / eps)
                sub += int(abs(old - new) >= 10 * eps)
    ok = mono == conv == fixed == sub == 0
    report(capsys, 5, ok, f"1000 instances: {mono} non-monotone, {conv} over the sweep cap, "
                          f"{fixed} fixed-point moves > eps_geo (worst {worst_move:.1e}), "
                          f"{sub} sub-path gaps >= 10 eps (worst {worst_sub:.2f} eps)")


def test_6_warm_start_sweeps(capsys, bench_maps):
    sweeps = samples = 0
    per = []
    for name, d in bench_maps.items():
        a = maps.random_free_point(d.env, np.random.default_rng(3))
        s = set_init(d, a).stats
        sweeps += s["warm_sweeps"]
        samples += s["warm_samples"]
        per.append(f"{name} {s['warm_sweeps'] / max(1, s['warm_samples']):.2f}")
    mean = sweeps / samples
    report(capsys, 6, mean <= 6, f"mean {mean:.2f} sweeps per warm-started sample (limit 6); " + ", ".join(per))


def _homotopic_pair(rng, d):
    """Two polylines threading the same polygon walk through different interior points."""
    enc = random_walk(rng, d, int(rng.integers(len(d.polygons))), int(rng.integers(1, 9)))

    def line():
        pts = [point_in_polygon(rng, d.polygons[enc.nodes[0]])]
        for c, nxt in zip(enc.cutlines, enc.nodes[1:]):
            pts.append(d.cutlines[c].param(float(rng.uniform(0.2, 0.8))))
            pts.append(point_in_polygon(rng, d.polygons[nxt]))
        return pts

    return enc, line(), line()


def test_7_homotopy_class_counting(capsys):
    counts = []
    for n in range(4):
        env = maps.row_map(n)
        d = build_topology_graph(env)
        assert count_independent_obstacles(env) == n
        a, b = (20.0, 500.0), (980.0, 500.0)
        counts.append(simple_class_count(d, a, b, max_len=len(d.polygons) + 1))
        best = enumerate_class_optima(d, a, b, max_len=len(d.polygons) + 1, dense_k=256, refine=1)[0][1]
        assert best == pytest.approx(visibility_shortest(env, a, b).cost, rel=1e-6)
    ds = [build_topology_graph(maps.random_rect_map(s)) for s in range(5)]
    rng = np.random.default_rng(77)
    same = 0
    for i in range(100):
        enc, p1, p2 = _homotopic_pair(rng, ds[i % 5])
        e1, e2 = encode_path(ds[i % 5], p1), encode_path(ds[i % 5], p2)
        same += int(e1 == e2 == CdtEncoding(enc.nodes, enc.cutlines))
    ok = counts == [1, 2, 4, 8] and same == 100
    report(capsys, 7, ok, f"non-dominated classes for n=0..3: {counts} (expect 2^n); "
                          f"perturbed polylines with equal encodings: {same}/100")


def test_8_dissection_validity(capsys, bench_maps):
    bad = []
    for name, d in bench_maps.items():
        rep = validate_dissection(d, 10_000)
        cyc, obs = d.graph.independent_cycles(), count_independent_obstacles(d.env)
        if not rep.passed or rep.coverage != 1.0 or cyc != obs:
            bad.append(f"{name} (coverage {rep.coverage}, cycles {cyc} vs obstacles {obs})")
    report(capsys, 8, not bad, f"{len(bench_maps) - len(bad)}/{len(bench_maps)} maps valid with "
                               f"cycle count = independent obstacles" + (f"; failing: {bad}" if bad else ""))


def test_9_rewiring_direction(capsys, bench_maps):
    maze, clut = bench_maps["maze"], bench_maps["cluttered"]
    tm = set_init(maze, (40.0, 40.0)).stats["triggers"]
    tc = set_init(clut, (30.0, 30.0)).stats["triggers"]
    ok = tm <= len(maze.cutlines) and tc > tm
    report(capsys, 9, ok, f"maze {tm} triggers on {len(maze.cutlines)} cutlines; "
                          f"cluttered {tc} triggers on {len(clut.cutlines)} cutlines")


def test_10_bench_determinism(capsys):
    runs = []
    argv = ["bench", "random:3", "maze", "--goals", "10", "--seed", "11", "--trials", "2"]
    for _ in range(2):
        code = cli.main(argv)
        out, _ = capsys.readouterr()
        assert code == 0
        runs.append(json.loads(out))
    a, b = (strip_timings(r) for r in runs)

    def key(rep):
        return [(m["triggers"], [(g["cost"], g["encoding"]) for g in m["goals"]]) for m in rep["maps"]]

    ok = a == b and key(runs[0]) == key(runs[1])
    report(capsys, 10, ok, f"two seeded bench runs over {len(a['maps'])} maps: identical costs, "
                           f"encodings and trigger counts: {ok}")
