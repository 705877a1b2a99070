"""Benchmark harness: one SetInit per trial, a batch of goals, oracle gaps."""
from __future__ import annotations

import os
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import maps
from .dissection import build_topology_graph
from .env_model import Environment, grid_to_environment, load_occupancy_grid, load_polygon_env
from .oracle import visibility_shortest
from .planner import DEFAULT_INTERVAL, get_goal, set_init

REL_TOL = 1e-6
HARD_TOL = 5e-3


@dataclass
class GoalRow:
    goal: list
    cost: Optional[float]
    oracle_cost: Optional[float]
    rel_gap: Optional[float]
    encoding: Optional[str]
    get_goal_us: float
    error: Optional[str] = None


@dataclass
class BenchReport:
    map_id: str
    polygons: int
    cutlines: int
    dissection_ms: float
    init: list
    trials: int
    set_init_ms_mean: float
    set_init_ms_std: float
    all_init_ms_mean: float
    get_goal_us_mean: float
    get_goal_us_median: float
    get_goal_us_std: float
    triggers: int
    warm_sweeps_per_sample: float
    goals: list = field(default_factory=list)
    max_rel_gap: Optional[float] = None
    within_rel_tol: int = 0
    flagged: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def load_map(path) -> Environment:
    p = Path(path)
    data = p.read_bytes()
    ext = p.suffix.lower().lstrip(".")
    if ext in ("pgm", "png"):
        return grid_to_environment(load_occupancy_grid(data, ext))
    return load_polygon_env(data.decode("utf-8"))


def resolve_map_set(items, seed: int = 0) -> list:
    """(map id, environment factory) pairs for generator names, files and directories.

    Generator names: ``random:N`` (N seeded rectangle maps), ``row:N``,
    ``maze``, ``cluttered``.
    """
    out: list = []
    for item in items:
        if item.startswith("random:"):
            n = int(item.split(":", 1)[1])
            out.extend((f"random-{seed + i}", (lambda s=seed + i: maps.random_rect_map(s))) for i in range(n))
        elif item.startswith("row:"):
            n = int(item.split(":", 1)[1])
            out.append((f"row-{n}", lambda n=n: maps.row_map(n)))
        elif item in maps.BENCH_MAPS:
            out.append((item, maps.BENCH_MAPS[item]))
        elif os.path.isdir(item):
            for f in sorted(Path(item).iterdir()):
                if f.suffix.lower() in (".json", ".pgm", ".png"):
                    out.append((f.name, lambda f=f: load_map(f)))
        else:
            out.append((Path(item).name, lambda f=item: load_map(f)))
    return out


def bench_map(map_id: str, env: Environment, trials: int = 1, n_goals: int = 20, seed: int = 0,
              interval: float = DEFAULT_INTERVAL, eps: Optional[float] = None,
              oracle: bool = True, goal_fn: Optional[Callable] = None) -> BenchReport:
    goal_fn = goal_fn or get_goal
    d = build_topology_graph(env)
    rng = np.random.default_rng(seed)
    x_init = maps.random_free_point(env, rng)
    goals = [maps.random_free_point(env, rng) for _ in range(n_goals)]
    si, gg = [], []
    rows: list = []
    st = None
    for trial in range(max(1, trials)):
        st = set_init(d, x_init, interval, eps)
        si.append(st.stats["set_init_ms"])
        for k, g in enumerate(goals):
            t0 = time.perf_counter()
            try:
                r = goal_fn(st, g)
                err = None
            except (LookupError, ValueError) as exc:
                r, err = None, str(exc)
            us = (time.perf_counter() - t0) * 1e6
            gg.append(us)
            if trial == 0:
                rows.append(GoalRow(list(g), None if r is None else r.cost, None, None,
                                    None if r is None else str(r.encoding), us, err))
    if oracle:
        for row in rows:
            o = visibility_shortest(env, x_init, row.goal)
            row.oracle_cost = o.cost if o.reachable else None
            if row.cost is not None and row.oracle_cost:
                row.rel_gap = (row.cost - row.oracle_cost) / row.oracle_cost
    gaps = [abs(r.rel_gap) for r in rows if r.rel_gap is not None]
    # reachable in one method but not the other is a failure too
    mismatch = any((r.cost is None) != (r.oracle_cost is None) for r in rows) if oracle else False
    within = sum(g <= REL_TOL for g in gaps)
    flagged = bool(oracle and (mismatch or any(g > HARD_TOL for g in gaps)
                               or (rows and within < 0.99 * len(rows))))
    s = st.stats
    return BenchReport(
        map_id=map_id, polygons=len(d.polygons), cutlines=len(d.cutlines),
        dissection_ms=d.build_ms, init=list(x_init), trials=len(si),
        set_init_ms_mean=statistics.fmean(si), set_init_ms_std=statistics.pstdev(si),
        all_init_ms_mean=d.build_ms + statistics.fmean(si),
        get_goal_us_mean=statistics.fmean(gg) if gg else 0.0,
        get_goal_us_median=statistics.median(gg) if gg else 0.0,
        get_goal_us_std=statistics.pstdev(gg) if gg else 0.0,
        triggers=s["triggers"],
        warm_sweeps_per_sample=s["warm_sweeps"] / max(1, s["warm_samples"]),
        goals=rows, max_rel_gap=max(gaps) if gaps else None, within_rel_tol=within, flagged=flagged)


TIMING_FIELDS = {"dissection_ms", "set_init_ms_mean", "set_init_ms_std", "all_init_ms_mean",
                 "get_goal_us_mean", "get_goal_us_median", "get_goal_us_std", "get_goal_us"}


def strip_timings(obj):
    """Copy of a report with every timing field removed (for determinism checks)."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj
