"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--maps 5] [--repeat 3]

Times a full SetInit and a batch of GetGoal queries per backend on seeded
random maps, and checks that both backends return the same costs.
"""
import argparse
import json
import statistics
import sys
import time

import numpy as np


def run(backend: str, n_maps: int, n_goals: int, repeat: int) -> dict:
    from cdtdijkstra import kernels, planner

    kernels.impl = kernels.backends()[backend]
    from cdtdijkstra.dissection import build_topology_graph
    from cdtdijkstra.maps import random_free_point, random_rect_map

    si, gg, costs = [], [], []
    for seed in range(n_maps):
        env = random_rect_map(seed)
        d = build_topology_graph(env)
        rng = np.random.default_rng(seed)
        a = random_free_point(env, rng)
        goals = [random_free_point(env, rng) for _ in range(n_goals)]
        for _ in range(repeat):
            st = planner.set_init(d, a)
            si.append(st.stats["set_init_ms"])
        for g in goals:
            t0 = time.perf_counter()
            r = planner.get_goal(st, g)
            gg.append((time.perf_counter() - t0) * 1e6)
            costs.append(r.cost)
    return {"backend": backend, "set_init_ms_median": statistics.median(si),
            "get_goal_us_median": statistics.median(gg), "costs": costs}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--maps", type=int, default=5)
    ap.add_argument("--goals", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    from cdtdijkstra.kernels import backends

    results = [run(b, args.maps, args.goals, args.repeat) for b in sorted(backends())]
    if len(results) == 2:
        gap = max(abs(x - y) / max(y, 1e-12) for x, y in zip(results[0]["costs"], results[1]["costs"]))
        print(f"max relative cost difference between backends: {gap:.3g}")
    for r in results:
        r.pop("costs")
        print(json.dumps(r))
    if len(results) == 2:
        c, p = (r for r in sorted(results, key=lambda r: r["backend"]))
        print(f"SetInit speed-up {p['set_init_ms_median'] / c['set_init_ms_median']:.1f}x, "
              f"GetGoal speed-up {p['get_goal_us_median'] / c['get_goal_us_median']:.1f}x")


if __name__ == "__main__":
    sys.exit(main())
