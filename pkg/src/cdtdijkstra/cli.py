"""``cdt-dijkstra`` command line: dissect | plan | bench | render | oracle-check."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

from . import bench
from .dissection import (DissectionError, NotInFreeSpace, build_topology_graph, dissection_from_dict,
                         dissection_to_dict, save_dissection)
from .env_model import EmptyFreeSpaceError, EnvError, ParseError, count_independent_obstacles
from .oracle import visibility_shortest
from .planner import DEFAULT_INTERVAL, PlannerState, Unreachable, get_goal, set_init
from .render import render_svg, write_svg

log = logging.getLogger("cdtdijkstra")

EXIT_OK, EXIT_GOAL, EXIT_PARSE, EXIT_EMPTY, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _point(text: str) -> tuple:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}")
    if not (math.isfinite(x) and math.isfinite(y)):
        raise argparse.ArgumentTypeError(f"non-finite point {text!r}")
    return x, y


def _emit(row: dict, out=None) -> None:
    print(json.dumps(row, sort_keys=True), file=out or sys.stdout)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE)


def _dissection_from(path):
    """A dissection snapshot, or a map file dissected on the fly."""
    if str(path).lower().endswith(".json"):
        data = _load_json(path)
        if data.get("format") == "cdt-dissection/1":
            return dissection_from_dict(data)
    return build_topology_graph(_load_env(path))


def _load_env(path):
    try:
        return bench.load_map(path)
    except OSError as exc:
        raise CliError(str(exc), EXIT_IO)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE)


def _write_text(path, text: str) -> None:
    try:
        write_svg(path, text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO)


# commands ----------------------------------------------------------------

def cmd_dissect(args) -> int:
    env = _load_env(args.map)
    d = build_topology_graph(env)
    try:
        save_dissection(d, args.out)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO)
    if args.svg:
        _write_text(args.svg, render_svg(d))
    _emit({"map": str(args.map), "snapshot": str(args.out), "polygons": len(d.polygons),
           "cutlines": len(d.cutlines), "cycles": d.graph.independent_cycles(),
           "independent_obstacles": count_independent_obstacles(env), "dissection_ms": d.build_ms})
    return EXIT_OK


def cmd_plan(args) -> int:
    d = _dissection_from(args.snapshot)
    try:
        st = set_init(d, args.init, args.interval, args.eps)
    except NotInFreeSpace as exc:
        raise CliError(f"init: {exc}", EXIT_GOAL)
    si_ms = st.stats["set_init_ms"]
    rows, code = [], EXIT_OK
    for g in args.goals:
        t0 = time.perf_counter()
        try:
            r = get_goal(st, g)
        except (NotInFreeSpace, Unreachable) as exc:
            row = {"goal": list(g), "status": "error", "error": str(exc), "set_init_ms": si_ms}
            code = EXIT_GOAL
        else:
            us = (time.perf_counter() - t0) * 1e6
            row = {"goal": list(g), "status": "ok", "cost": r.cost, "encoding": str(r.encoding),
                   "set_init_ms": si_ms, "all_init_ms": d.build_ms + si_ms, "get_goal_us": us,
                   "on_cutline": r.on_cutline, "path": r.path.tolist()}
        rows.append(row)
        _emit(row)
    if args.report:
        rep = {"format": "cdt-plan-report/1", "init": list(args.init), "rows": rows,
               "triggers": st.stats["triggers"], "dissection": dissection_to_dict(d)}
        try:
            Path(args.report).write_text(json.dumps(rep, sort_keys=True))
        except OSError as exc:
            raise CliError(f"cannot write {args.report}: {exc}", EXIT_IO)
    if args.state_out:
        st.save(args.state_out)
    if args.svg:
        ok = [r for r in rows if r["status"] == "ok"]
        _write_text(args.svg, render_svg(d, [r["path"] for r in ok], args.init, [r["goal"] for r in ok],
                                         labels=[r["encoding"] for r in ok]))
    return code


def cmd_bench(args) -> int:
    reports = []
    for i, (map_id, factory) in enumerate(bench.resolve_map_set(args.maps, args.seed)):
        env = factory()
        rep = bench.bench_map(map_id, env, args.trials, args.goals, args.seed + i, args.interval,
                              args.eps, oracle=not args.no_oracle)
        reports.append(rep.to_dict())
        log.info("%s: %d cutlines, SetInit %.2f ms, GetGoal median %.1f us, max gap %s",
                 map_id, rep.cutlines, rep.set_init_ms_mean, rep.get_goal_us_median, rep.max_rel_gap)
    flagged = [r["map_id"] for r in reports if r["flagged"]]
    out = {"format": "cdt-bench-report/1", "seed": args.seed, "trials": args.trials,
           "goals_per_map": args.goals, "maps": reports, "flagged": flagged}
    text = json.dumps(out, sort_keys=True)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO)
    else:
        print(text)
    if flagged and args.strict:
        log.error("oracle gap beyond tolerance on: %s", ", ".join(flagged))
        return EXIT_GOAL
    return EXIT_OK


def cmd_render(args) -> int:
    data = _load_json(args.input)
    fmt = data.get("format")
    if fmt == "cdt-dissection/1":
        svg = render_svg(dissection_from_dict(data))
    elif fmt == "cdt-plan-report/1":
        d = dissection_from_dict(data["dissection"])
        ok = [r for r in data["rows"] if r.get("status") == "ok"]
        svg = render_svg(d, [r["path"] for r in ok], data["init"], [r["goal"] for r in ok],
                         labels=[r["encoding"] for r in ok])
    elif fmt == "cdt-planner/1":
        st = PlannerState.from_dict(data)
        svg = render_svg(st.dissection, init=st.x_init)
    else:
        raise CliError(f"{args.input}: unrecognised input format {fmt!r}", EXIT_PARSE)
    _write_text(args.out, svg)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    d = _dissection_from(args.map)
    env = d.env
    st = set_init(d, args.init, args.interval, args.eps)
    code = EXIT_OK
    for i, g in enumerate(args.goals):
        t0 = time.perf_counter()
        try:
            r = get_goal(st, g)
            cost = r.cost
        except (NotInFreeSpace, Unreachable):
            cost = math.inf
        t = time.perf_counter() - t0
        o = visibility_shortest(env, args.init, g)
        _emit({"instance": i, "method": "cdt", "cost": cost if math.isfinite(cost) else None, "time": t})
        _emit(o.to_row(i))
        if math.isfinite(cost) != o.reachable:
            code = EXIT_GOAL
        elif o.reachable and o.cost > 0 and abs(cost - o.cost) / o.cost > args.tol:
            code = EXIT_GOAL
    return code


# entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdt-dijkstra", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def planning(sp):
        sp.add_argument("--interval", type=float, default=DEFAULT_INTERVAL, help="cutline sample spacing")
        sp.add_argument("--eps", type=float, default=None, help="compression tolerance (default 1e-6 x diagonal)")

    s = sub.add_parser("dissect", help="convex dissection of a map file")
    s.add_argument("map")
    s.add_argument("--out", "-o", required=True, help="dissection snapshot (JSON)")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_dissect)

    s = sub.add_parser("plan", help="one SetInit, then one query per goal")
    s.add_argument("snapshot", help="dissection snapshot or map file")
    s.add_argument("--init", type=_point, required=True, metavar="X,Y")
    s.add_argument("goals", type=_point, nargs="+", metavar="X,Y")
    s.add_argument("--svg")
    s.add_argument("--report", help="write a plan report usable by 'render'")
    s.add_argument("--state-out", help="write the planner state snapshot")
    planning(s)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("bench", help="timing and oracle-gap benchmark")
    s.add_argument("maps", nargs="*", help="files, directories, or random:N | row:N | maze | cluttered")
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--goals", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--strict", action="store_true", help="nonzero exit when any map is flagged")
    s.add_argument("--no-oracle", action="store_true")
    s.add_argument("--out")
    planning(s)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("render", help="SVG of a dissection snapshot or plan report")
    s.add_argument("input")
    s.add_argument("--out", "-o", required=True)
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("oracle-check", help="compare planner costs with the visibility-graph optimum")
    s.add_argument("map", help="dissection snapshot or map file")
    s.add_argument("--init", type=_point, required=True, metavar="X,Y")
    s.add_argument("goals", type=_point, nargs="+", metavar="X,Y")
    s.add_argument("--tol", type=float, default=bench.HARD_TOL)
    planning(s)
    s.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("CDT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except EmptyFreeSpaceError as exc:
        print(f"empty free space: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (EnvError, DissectionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
