"""Command-line entry point: ``relaydeploy {plan,simulate,benchmark,gen-scenario}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .errors import ConnectivityViolation, InfeasiblePlanError, PlannerError
from .grid_world import load_scenario, scenario_from_dict
from .mission import audit_connectivity
from .pipeline import MissionPlanner, bs_fields, plan_to_json
from .visit_order import HEURISTICS

log = logging.getLogger("relaydeploy")

EXIT_USAGE = 2
EXIT_FAILURE = 1
EXIT_VIOLATION = 3


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def _planner(args):
    scenario = load_scenario(args.scenario)
    planner = MissionPlanner(scenario)
    if args.dump_fields:
        unit, _ = bs_fields(scenario)
        Path(args.dump_fields).write_text(unit.to_csv())
    if args.dump_clusters:
        Path(args.dump_clusters).write_text(planner.clusters.to_json())
    return scenario, planner


def cmd_plan(args) -> int:
    scenario, planner = _planner(args)
    run = planner.run(args.heuristic)
    _write(args.out, plan_to_json(run.plan, planner.clusters, run.result))
    log.info("%s: %d clusters, %d skipped", args.heuristic, planner.clusters.K,
             len(run.plan.skipped))
    return 0


def cmd_simulate(args) -> int:
    scenario, planner = _planner(args)
    try:
        run = planner.run(args.heuristic)
    except ConnectivityViolation as exc:
        log.error("%s", exc)
        return EXIT_VIOLATION
    violations = audit_connectivity(run.result, scenario, planner.cfg)
    doc = run.result.to_dict()
    doc["heuristic"] = args.heuristic
    doc["violations"] = violations
    _write(args.out, json.dumps(doc, indent=2))
    if args.timeline:
        Path(args.timeline).write_text(run.result.timeline_csv())
    if violations:
        log.error("%d goals completed without a link to the base station", len(violations))
        return EXIT_VIOLATION
    log.info("%s: total time %.1f s, coverage %.3f", args.heuristic,
             run.result.total_time, run.result.coverage)
    return 0


def cmd_benchmark(args) -> int:
    spec = bench.BenchmarkSpec.load(args.spec)
    try:
        rows = bench.run_benchmark(spec, jobs=args.jobs)
    except ConnectivityViolation as exc:
        log.error("benchmark aborted: %s", exc)
        return EXIT_VIOLATION
    summary = bench.summarise(rows)
    timing = not args.no_timing
    _write(args.out, bench.to_csv(summary, bench.REPORT_HEADER, timing))
    if args.raw:
        Path(args.raw).write_text(bench.to_csv(rows, bench.RAW_HEADER, timing))
    return 0


def cmd_gen_scenario(args) -> int:
    from .desk_maps import BUNDLED, bundled

    if args.bs is None:
        if args.map not in BUNDLED:
            raise PlannerError("--bs is required for maps other than the bundled ones")
        bs = list(bundled(args.map)[1])
    else:
        bs = list(args.bs)
    doc = {"map_path": args.map, "bs": bs, "robots": args.robots,
           "num_goals": args.goals, "seed": args.seed,
           "d_gamma_m": args.d_gamma, "velocity_mps": args.velocity}
    scenario = scenario_from_dict(doc)
    out = scenario.to_dict()
    out["map_path"] = args.map
    _write(args.out, json.dumps(out, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relaydeploy",
                                description="Plan and simulate connected multi-robot goal visits.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--heuristic", required=True, choices=HEURISTICS)
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--dump-fields", default=None, metavar="CSV",
                        help="write the base-station distance field")
        sp.add_argument("--dump-clusters", default=None, metavar="JSON",
                        help="write the relay clusters")

    sp = sub.add_parser("plan", help="compute clusters and a visit plan")
    scenario_args(sp)
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("simulate", help="plan, execute and audit a mission")
    scenario_args(sp)
    sp.add_argument("--timeline", default=None, metavar="CSV", help="write the event timeline")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("benchmark", help="sweep heuristics, teams and seeds")
    sp.add_argument("--spec", required=True, help="benchmark spec JSON file")
    sp.add_argument("--out", default=None, help="summary CSV (default: stdout)")
    sp.add_argument("--raw", default=None, help="per-seed CSV")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.add_argument("--no-timing", action="store_true",
                    help="zero the wall-clock columns so the output is reproducible")
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("gen-scenario", help="write a scenario with random goals")
    sp.add_argument("--map", required=True, help="map file or bundled map name")
    sp.add_argument("--bs", type=float, nargs=2, metavar=("X", "Y"), default=None)
    sp.add_argument("--robots", type=int, default=10)
    sp.add_argument("--goals", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--d-gamma", type=float, default=10.0)
    sp.add_argument("--velocity", type=float, default=0.2)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gen_scenario)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InfeasiblePlanError as exc:
        log.error("%s (skipped clusters: %s)", exc, list(exc.skipped))
        return EXIT_FAILURE
    except (PlannerError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
