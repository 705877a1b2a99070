import math
import threading

import numpy as np
import pytest

from cdtdijkstra import maps
from cdtdijkstra.dissection import NotInFreeSpace, build_topology_graph
from cdtdijkstra.oracle import flood_reachable, visibility_shortest
from cdtdijkstra.planner import (COST_DELTA, Planner, PlannerError, PlannerState, Unreachable,
                                 cutline_samples, get_goal, homotopy_classes_for_cutline,
                                 optimize_existing, set_init)
from cdtdijkstra.shortest_path import get_shortest_path

from .conftest import ABOVE_COST


@pytest.fixture(scope="module")
def block_state(block_map):
    return set_init(block_map, (1, 5), 0.5)


@pytest.fixture(scope="module")
def sealed():
    return build_topology_graph(maps.sealed_map())


@pytest.fixture(scope="module")
def rand_map():
    return build_topology_graph(maps.random_rect_map(3))


def test_samples_include_endpoints_and_respect_interval(block_map):
    for c in block_map.cutlines:
        s = cutline_samples(block_map, c.id, 0.7)
        assert len(s) >= 2
        assert tuple(s[0]) == tuple(c.endpoints.a) and tuple(s[-1]) == tuple(c.endpoints.b)
        assert np.hypot(*np.diff(s, axis=0).T).max() <= 0.7 + 1e-12


def test_empty_map_is_ready_with_no_sets(empty_map):
    st = set_init(empty_map, (3, 3))
    assert st.status == "ready"
    assert all(s.empty for s in st.sets) and len(st.sets) == len(empty_map.cutlines)
    r = get_goal(st, (9, 9))
    assert r.cost == pytest.approx(math.hypot(6, 6))


def test_block_map_sets_nonempty_and_small(block_state):
    for s in block_state.sets:
        assert not s.empty
        assert 1 <= len(s.distinct) <= 2


def test_records_are_consistent(block_state):
    d = block_state.dissection
    for s in block_state.sets:
        c = d.cutlines[s.cutline]
        assert s.distinct == {s.encodings[i] for i in set(s.owner.tolist())}
        for t in range(len(s.samples)):
            enc, cost, path = s.record(t)
            assert enc.last in (c.left, c.right)
            full = np.vstack([block_state.x_init, path])
            assert cost == pytest.approx(np.hypot(*np.diff(full, axis=0).T).sum(), abs=1e-9)
            # admissible lower bound
            assert cost >= math.dist(block_state.x_init, s.samples[t]) - 1e-12


def test_cutline_split_between_two_corridors(block_map):
    # (9, 1) sits on the cutline between the two lower polygons; the top-left
    # cutline is then reached around either side of the block
    st = set_init(block_map, (9, 1), 0.5)
    split = [s for s in st.sets if len(s.distinct) == 2]
    assert split
    s = split[0]
    assert set(s.owner.tolist()) == {0, 1}


def test_start_on_cutline_seeds_both_polygons(block_map):
    st = set_init(block_map, (9, 1), 0.5)
    assert len(st.init_polygons) == 2


def test_sealed_chamber_stays_empty(sealed):
    a = (10.0, 10.0)
    st = set_init(sealed, a, 1.0)
    comps = sealed.graph.components()
    mine = next(c for c in comps if sealed.containing(a)[0] in c)
    for s in st.sets:
        c = sealed.cutlines[s.cutline]
        assert s.empty == (c.left not in mine)
    with pytest.raises(Unreachable):
        get_goal(st, (80.0, 80.0))


def test_goal_in_obstacle_and_bad_init(block_map, block_state):
    with pytest.raises(NotInFreeSpace):
        get_goal(block_state, (5, 5))
    with pytest.raises(NotInFreeSpace):
        set_init(block_map, (5, 5))
    with pytest.raises(ValueError):
        set_init(block_map, (1, 5), 0.0)


def test_tie_break_prefers_smaller_encoding(block_state):
    r = get_goal(block_state, (9, 5))
    assert r.cost == pytest.approx(ABOVE_COST, rel=1e-9)
    assert str(r.encoding) == "1,0,2"
    assert r.path[0].tolist() == [1, 5] and r.path[-1].tolist() == [9, 5]


def test_goal_in_start_polygon_is_straight(block_state):
    r = get_goal(block_state, (1, 7))
    assert len(r.path) == 2
    assert r.cost == pytest.approx(2.0)
    assert r.encoding.nodes == (1,)


def test_goal_on_cutline_is_flagged(block_map):
    st = set_init(block_map, (5, 1), 0.5)
    assert get_goal(st, (2, 2)).on_cutline
    assert not get_goal(st, (5, 1.5)).on_cutline


def test_queries_do_not_mutate_state(rand_map):
    st = set_init(rand_map, maps.random_free_point(rand_map.env, np.random.default_rng(0)))
    h = st.state_hash()
    rng = np.random.default_rng(1)
    for _ in range(200):
        get_goal(st, maps.random_free_point(rand_map.env, rng))
    assert st.state_hash() == h


def test_costs_match_visibility_oracle(rand_map):
    env = rand_map.env
    rng = np.random.default_rng(5)
    a = maps.random_free_point(env, rng)
    st = set_init(rand_map, a)
    for _ in range(25):
        g = maps.random_free_point(env, rng)
        r = get_goal(st, g)
        assert r.cost == pytest.approx(visibility_shortest(env, a, g).cost, rel=1e-6)
        assert r.cost >= math.dist(a, g) - 1e-9


def test_goal_path_is_a_converged_class_path(rand_map):
    rng = np.random.default_rng(11)
    a = maps.random_free_point(rand_map.env, rng)
    st = set_init(rand_map, a)
    g = maps.random_free_point(rand_map.env, rng)
    r = get_goal(st, g)
    if len(r.encoding.nodes) > 1:
        ref = get_shortest_path(rand_map, r.encoding, a, g)
        assert r.cost == pytest.approx(ref.cost, rel=1e-6)


def test_reachability_matches_flood_fill(sealed):
    rng = np.random.default_rng(2)
    a = (10.0, 10.0)
    st = set_init(sealed, a, 1.0)
    for _ in range(40):
        g = maps.random_free_point(sealed.env, rng, margin=0.5)
        try:
            get_goal(st, g)
            ok = True
        except Unreachable:
            ok = False
        assert ok == flood_reachable(sealed.env, a, g)


def test_first_cutline_has_no_triggers(block_state):
    st = PlannerState(block_state.dissection, block_state.x_init, block_state.interval,
                      block_state.eps, list(block_state.sets), block_state.init_polygons)
    st.stats = dict.fromkeys(block_state.stats, 0)
    assert optimize_existing(st, 0, {0}) == 0


def test_stale_cost_is_recomputed_and_corrected(block_map):
    st = set_init(block_map, (1, 5), 0.5)
    d = block_map
    everything = set(range(len(d.cutlines)))
    before = st.stats["triggers"]
    victim = 0
    good = st.sets[victim].cost.copy()
    st.sets[victim].cost = good + 1.0  # stale: claims to be worse than it is
    n = optimize_existing(st, 2, everything)  # cutline 0 neighbours cutline 2 around polygon 1
    assert n >= 1
    assert st.stats["triggers"] == before + n
    np.testing.assert_allclose(st.sets[victim].cost, good, rtol=1e-12)


def test_unchanged_state_triggers_nothing(block_state):
    st = PlannerState(block_state.dissection, block_state.x_init, block_state.interval,
                      block_state.eps, list(block_state.sets), block_state.init_polygons)
    st.stats = dict.fromkeys(block_state.stats, 0)
    everything = set(range(len(st.sets)))
    assert optimize_existing(st, 0, everything) == 0
    assert st.stats["recomputations"] > 0


def test_recomputation_is_reproducible(block_state):
    everything = set(range(len(block_state.sets)))
    for c in range(len(block_state.sets)):
        s = homotopy_classes_for_cutline(block_state, c, everything - {c})
        assert s.distinct == block_state.sets[c].distinct
        assert np.all(s.cost <= block_state.sets[c].cost + COST_DELTA * 20)


def test_trigger_count_is_small_on_a_maze():
    d = build_topology_graph(maps.maze_map())
    st = set_init(d, (40.0, 40.0))
    assert st.stats["triggers"] <= len(d.cutlines)
    assert all(not s.empty for s in st.sets)


def test_snapshot_roundtrip(tmp_path, block_state):
    p = tmp_path / "state.json"
    block_state.save(p)
    back = PlannerState.load(p)
    assert back.state_hash() == block_state.state_hash()
    g = (9, 5)
    assert get_goal(back, g).cost == get_goal(block_state, g).cost


def test_snapshot_without_paths_still_answers(block_state):
    back = PlannerState.from_dict(block_state.to_dict(include_paths=False))
    assert get_goal(back, (9, 5)).cost == pytest.approx(ABOVE_COST, rel=1e-9)


def test_unready_state_refuses_queries(block_state):
    st = PlannerState(block_state.dissection, block_state.x_init, 1.0, 1e-6, [], ())
    with pytest.raises(PlannerError):
        get_goal(st, (9, 5))


def test_planner_swaps_snapshots(block_map):
    pl = Planner(block_map, interval=0.5)
    with pytest.raises(PlannerError):
        pl.query((9, 5))
    first = pl.reinit((1, 5))
    assert pl.query((9, 5)).cost == pytest.approx(ABOVE_COST)
    errors = []

    def reader():
        try:
            for _ in range(200):
                # old snapshot (long way round) or new one (goal is the start)
                c = pl.query((9, 5)).cost
                assert c == 0.0 or abs(c - ABOVE_COST) < 1e-9
        except Exception as exc:  # pragma: no cover - surfaced below
            errors.append(exc)

    threads = [threading.Thread(target=reader) for _ in range(4)]
    for t in threads:
        t.start()
    second = pl.reinit((9, 5))
    for t in threads:
        t.join()
    assert not errors
    assert pl.state is second and second is not first
    assert pl.query((1, 5)).cost == pytest.approx(ABOVE_COST)
