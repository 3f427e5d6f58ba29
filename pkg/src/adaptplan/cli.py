"""Command line: plan, extract, simulate, bench, scaling."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import AdaptPlanError
from .extractor import generate_plans
from .harness.planners import ExternalPlanner, FixturePlanner, GreedyPlanner
from .harness.suite import SuiteConfig, format_summary, run_suite, scaling_csv, scaling_report, scaling_sweep
from .plan_graph import build_plan_network, relax
from .plan_io import parse_domain_problem, parse_time_triggered_plan, serialize_orderings
from .simulator import WorldConfig


def _problem(args):
    return parse_domain_problem(Path(args.domain).read_text(), Path(args.problem).read_text())


def _planner(args, problem):
    if getattr(args, "plan", None):
        return FixturePlanner.for_problems([(problem, Path(args.plan).read_text())])
    if args.planner == "external":
        if not args.command:
            raise SystemExit("--planner external needs --command")
        return ExternalPlanner(args.command.split(), Path(args.domain).read_text(), args.timeout)
    return GreedyPlanner()


def cmd_plan(args):
    problem = _problem(args)
    sys.stdout.write(_planner(args, problem).plan(problem).to_text())


def cmd_extract(args):
    problem = _problem(args)
    tt = parse_time_triggered_plan(Path(args.plan).read_text(), problem)
    net = build_plan_network(tt, problem)
    if not args.no_relax:
        net = relax(net)
    belief = problem.initial_state()
    if args.state:
        overrides = json.loads(Path(args.state).read_text())
        unknown = set(overrides) - set(belief.rho)
        if unknown:
            raise SystemExit(f"unknown propositions in state file: {sorted(unknown)}")
        belief = belief.with_rho({k: float(v) for k, v in overrides.items()})
    if args.dump_network:
        sys.stderr.write(net.dump())
    results = generate_plans(belief, net, now=args.now, threshold=args.threshold)
    sys.stdout.write(serialize_orderings(results))


def cmd_simulate(args):
    from .harness.episode import run_episode

    problem = _problem(args)
    cfg = WorldConfig.load(args.config) if args.config else WorldConfig()
    m = run_episode(args.mode, problem, _planner(args, problem), cfg, args.seed)
    if args.trace:
        sys.stderr.write("\n".join(m.trace) + "\n")
    report = {
        "success": m.success, "replans": m.replans, "actions": m.actions_executed,
        "extraction_calls": m.extraction_calls, "orderings_max": m.orderings_max, "end_time": round(m.end_time, 3),
    }
    sys.stdout.write(json.dumps(report, sort_keys=True) + "\n")


def cmd_bench(args):
    cfg = SuiteConfig.from_json(Path(args.config).read_text()) if args.config else SuiteConfig()
    _, summary = run_suite(cfg, args.out)
    sys.stdout.write(format_summary(summary))


def cmd_scaling(args):
    points = scaling_sweep(args.max_orders, args.seeds, args.max_nodes, fuzzy=not args.crisp_only)
    text = scaling_csv(points)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    sys.stderr.write(scaling_report(points))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptplan", description=__doc__)
    sub = parser.add_subparsers(dest="command_name", required=True)

    def problem_args(p):
        p.add_argument("domain", help="PDDL domain file")
        p.add_argument("problem", help="PDDL problem file")

    def planner_args(p):
        p.add_argument("--planner", choices=("greedy", "external"), default="greedy")
        p.add_argument("--command", help="external planner command; {domain} and {problem} are replaced")
        p.add_argument("--timeout", type=float, default=60.0)

    p = sub.add_parser("plan", help="run a planner adapter and print the plan")
    problem_args(p)
    planner_args(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("extract", help="print the valid orderings of a plan")
    problem_args(p)
    p.add_argument("plan", help="time-triggered plan file")
    p.add_argument("--state", help="JSON object of proposition -> probability overrides")
    p.add_argument("--now", type=float, default=0.0)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--no-relax", action="store_true", help="keep causal edges")
    p.add_argument("--dump-network", action="store_true", help="write the plan network to stderr")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("simulate", help="run one episode")
    problem_args(p)
    planner_args(p)
    p.add_argument("--plan", help="use this plan for the initial problem instead of planning")
    p.add_argument("--mode", choices=("RO", "RP"), default="RO")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="world config JSON")
    p.add_argument("--trace", action="store_true", help="write the episode trace to stderr")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run the benchmark suite")
    p.add_argument("--config", help="suite config JSON")
    p.add_argument("--out", default="bench_out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("scaling", help="time extraction on growing plans")
    p.add_argument("--max-orders", type=int, default=10)
    p.add_argument("--seeds", type=int, default=16)
    p.add_argument("--max-nodes", type=int, default=128)
    p.add_argument("--crisp-only", action="store_true")
    p.add_argument("--out", help="CSV output file (default stdout)")
    p.set_defaults(func=cmd_scaling)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except AdaptPlanError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
