import math

import numpy as np
import pytest

from cdtdijkstra.dissection import build_topology_graph
from cdtdijkstra.encoding import CdtEncoding, encode_path
from cdtdijkstra.geometry import min_sum_on_segment
from cdtdijkstra.maps import random_rect_map
from cdtdijkstra.shortest_path import (ContractError, ConvergenceError, compress_sweep, default_eps,
                                       get_shortest_path, segments_for)

from .conftest import ABOVE_COST
from .helpers import random_instance


def test_single_polygon_is_straight(empty_map):
    r = get_shortest_path(empty_map, CdtEncoding((0,)), (1, 1), (2, 3))
    assert r.cost == pytest.approx(math.sqrt(5))
    assert r.iterations == 0
    assert r.path.tolist() == [[1, 1], [2, 3]]


def test_above_the_block(block_map):
    enc = encode_path(block_map, [(1, 5), (4, 7), (6, 7), (9, 5)])
    r = get_shortest_path(block_map, enc, (1, 5), (9, 5))
    assert r.cost == pytest.approx(ABOVE_COST, abs=1e-6)
    inner = r.path[1:-1]
    assert any(np.allclose(v, (4, 6), atol=1e-6) for v in inner)
    assert any(np.allclose(v, (6, 6), atol=1e-6) for v in inner)


def test_warm_start_is_no_slower(block_map):
    enc = encode_path(block_map, [(1, 5), (4, 7), (6, 7), (9, 5)])
    cold = get_shortest_path(block_map, enc, (1, 5), (9, 5.2))
    warm = get_shortest_path(block_map, enc, (1, 5), (9, 5.0), warm_start=cold.path)
    ref = get_shortest_path(block_map, enc, (1, 5), (9, 5.0))
    assert warm.iterations <= ref.iterations
    assert warm.cost == pytest.approx(ref.cost, abs=default_eps(block_map))


def test_contract_errors(block_map):
    enc = CdtEncoding((0,))
    inside0 = tuple(np.mean(np.asarray(block_map.polygons[0].vertices), axis=0))
    with pytest.raises(ContractError):
        get_shortest_path(block_map, enc, inside0, (1, 9))
    with pytest.raises(ContractError):
        get_shortest_path(block_map, enc, (math.nan, 1), inside0)
    enc2 = encode_path(block_map, [(1, 5), (4, 7), (6, 7), (9, 5)])
    with pytest.raises(ContractError):
        get_shortest_path(block_map, enc2, (1, 5), (9, 5), warm_start=[(1, 1)])


def test_sweep_cap_raises():
    # many nearly parallel cutlines converge slowly from the midpoints
    d = build_topology_graph(random_rect_map(3))
    rng = np.random.default_rng(1)
    for _ in range(50):
        enc, xs, xe = random_instance(rng, d, 15)
        if len(enc.cutlines) >= 4:
            r = get_shortest_path(d, enc, xs, xe)
            if r.iterations > 1:
                break
    with pytest.raises(ConvergenceError):
        get_shortest_path(d, enc, xs, xe, max_sweeps=1, eps=0.0)


def test_compress_sweep_identity_and_single_cut():
    assert compress_sweep([(0, 0), (3, 4)], []).tolist() == [[0, 0], [3, 4]]
    out = compress_sweep([(0, -1), (0.7, 0), (0, 1)], [((-1, 0), (1, 0))])
    assert out[1] == pytest.approx((0, 0))
    with pytest.raises(ContractError):
        compress_sweep([(0, 0), (1, 1)], [((-1, 0), (1, 0))])


def _instances(n, seed=0):
    rng = np.random.default_rng(seed)
    maps = [build_topology_graph(random_rect_map(s)) for s in range(5)]
    for i in range(n):
        d = maps[i % len(maps)]
        enc, xs, xe = random_instance(rng, d)
        yield d, enc, xs, xe


def test_sweep_never_increases_cost():
    for d, enc, xs, xe in _instances(100):
        segs = segments_for(d, enc.cutlines)
        mid = 0.5 * (segs[:, :2] + segs[:, 2:])
        v = np.vstack([xs, mid, xe])
        before = np.hypot(*np.diff(v, axis=0).T).sum()
        after = compress_sweep(v, segs)
        assert np.hypot(*np.diff(after, axis=0).T).sum() <= before + 1e-9


def test_history_monotone_and_fixed_point():
    for d, enc, xs, xe in _instances(60, seed=1):
        r = get_shortest_path(d, enc, xs, xe, trace=True)
        h = np.array(r.history)
        assert np.all(np.diff(h) <= 1e-9 * d.env.diagonal)
        # re-projecting every vertex leaves the path where it is
        segs = segments_for(d, enc.cutlines)
        p = r.path
        for k in range(1, len(p) - 1):
            s = segs[k - 1]
            q = min_sum_on_segment(p[k - 1], p[k + 1], ((s[0], s[1]), (s[2], s[3])))
            moved = math.hypot(q[0] - p[k][0], q[1] - p[k][1])
            assert moved <= d.tol


def test_shared_corner_does_not_trap_the_path():
    # every interior vertex starts on the corner all three cutlines share
    from cdtdijkstra.maps import random_rect_map as rm
    from cdtdijkstra.oracle import visibility_shortest

    env = rm(8)
    d = build_topology_graph(env)
    rng = np.random.default_rng(1008)
    from cdtdijkstra.maps import random_free_point
    a = random_free_point(env, rng)
    b = random_free_point(env, rng)
    enc = encode_path(d, [a, b])
    segs = segments_for(d, enc.cutlines)
    ends = [tuple(s[:2]) for s in segs] + [tuple(s[2:]) for s in segs]
    corner = max(set(ends), key=ends.count)
    if ends.count(corner) < len(segs):
        pytest.skip("cutlines do not share a corner on this build")
    warm = np.array([corner] * len(segs))
    r = get_shortest_path(d, enc, a, b, warm_start=warm)
    assert r.cost == pytest.approx(visibility_shortest(env, a, b).cost, rel=1e-6)
