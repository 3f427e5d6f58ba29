"""Plan providers: built-in greedy, stored fixtures, and an external command."""
from __future__ import annotations

import itertools
import subprocess
import tempfile
from pathlib import Path
from typing import Mapping, Optional, Sequence

from ..errors import InvalidPlanError, PlannerFailure, PlanSyntaxError
from ..model import PlanningProblem
from ..plan_graph import EPSILON, build_plan_network
from ..plan_io import PlanStep, TimeTriggeredPlan, parse_time_triggered_plan
from .benchmark import problem_hash, render_problem
from .domain import NOMINAL, ROBOT_DELIVERY_DOMAIN


def _args(problem, pred):
    return sorted({p.split()[1] for p in problem.propositions if p.split()[0] == pred})


def _schedule(problem, machine, carrier, helper, orders):
    """Sequential carrier schedule; returns (steps, {location: delivery time})."""
    true = problem.initial_true
    pos = {}
    for p in true:
        words = p.split()
        if words[0] == "robot_at":
            pos[words[1]] = words[2]

    def travel(a, b):
        return problem.initial_numerics[f"travel_time {a} {b}"]

    steps = []

    def act(name, start, duration):
        steps.append(PlanStep(round(start, 6), name, duration))
        return round(start + duration + EPSILON, 6)

    t_c = t_h = 0.0
    pos_c, pos_h = pos[carrier], pos[helper]
    holding = f"holding {carrier}" in true
    machine_on = f"machine_on {machine}" in true
    delivered = {}
    for loc in orders:
        if not holding:
            if pos_c != machine:
                t_c = act(f"goto {carrier} {pos_c} {machine}", t_c, travel(pos_c, machine))
                pos_c = machine
            if pos_h != machine:
                t_h = act(f"goto {helper} {pos_h} {machine}", t_h, travel(pos_h, machine))
                pos_h = machine
            if not machine_on:
                t_c = act(f"switch_on {carrier} {machine}", t_c, NOMINAL["switch_on"])
            t_c = act(f"load_at_machine {carrier} {helper} {machine}", max(t_c, t_h), NOMINAL["load_at_machine"])
            holding, machine_on = True, False
        if pos_c != loc:
            t_c = act(f"goto {carrier} {pos_c} {loc}", t_c, travel(pos_c, loc))
            pos_c = loc
        if f"unload_requested {carrier} {loc}" not in true:
            t_c = act(f"ask_unload {carrier} {loc}", t_c, NOMINAL["ask_unload"])
        t_c = act(f"wait_unload {carrier} {loc}", t_c, NOMINAL["wait_unload"])
        delivered[loc] = t_c - EPSILON
        holding = False
        true = true - {f"unload_requested {carrier} {loc}"}
    steps.sort(key=lambda s: s.time)
    return steps, delivered


def greedy_delivery_plan(problem: PlanningProblem) -> TimeTriggeredPlan:
    """Robot Delivery only: one machine, one carrier, one helper, orders in sequence.

    The carrier switches the machine on itself, so consecutive deliveries are
    chained by interference and the relaxed plan stays narrow.  Every
    (machine, carrier, helper) choice is tried and the shortest
    deadline-respecting schedule wins.
    """
    robots = _args(problem, "holding")
    machines = _args(problem, "machine_on")
    deadline = {t.proposition.split()[1]: t.time for t in problem.timed_literals
                if t.proposition.startswith("accepting ") and not t.value}
    if any(not pol or not p.startswith("delivered_at ") for p, pol in problem.goal.literals):
        raise PlannerFailure("greedy planner only handles delivered_at goals")
    pending = [p.split()[1] for p, _ in sorted(problem.goal.literals) if p not in problem.initial_true]
    if not pending:
        return TimeTriggeredPlan(())
    if len(robots) < 2 or not machines:
        raise PlannerFailure("need two robots and a machine")
    orders = sorted(pending, key=lambda l: (deadline.get(l, float("inf")), l))
    holders = [r for r in robots if f"holding {r}" in problem.initial_true]
    carriers = holders[:1] or robots
    best = None
    for m, c, h in itertools.product(machines, carriers, robots):
        if c == h:
            continue
        try:
            steps, delivered = _schedule(problem, m, c, h, orders)
        except KeyError:  # no road between two places
            continue
        if any(delivered[l] >= deadline.get(l, float("inf")) for l in orders):
            continue
        tt = TimeTriggeredPlan(tuple(steps))
        key = (tt.makespan, m, c, h)
        if best is None or key < best[0]:
            best = (key, tt)
    if best is None:
        raise PlannerFailure("no deadline-respecting greedy schedule")
    return best[1]


def validated(plan: TimeTriggeredPlan, problem: PlanningProblem) -> TimeTriggeredPlan:
    try:
        build_plan_network(plan, problem)
    except InvalidPlanError as exc:
        raise PlannerFailure(f"planner returned an invalid plan: {exc}") from exc
    return plan


class GreedyPlanner:
    name = "greedy"

    def plan(self, problem: PlanningProblem) -> TimeTriggeredPlan:
        return validated(greedy_delivery_plan(problem), problem)


class FixturePlanner:
    """Stored plan texts keyed by :func:`problem_hash`."""

    name = "fixture"

    def __init__(self, fixtures: Mapping[str, str]):
        self.fixtures = dict(fixtures)

    @classmethod
    def for_problems(cls, pairs) -> "FixturePlanner":
        return cls({problem_hash(p): text for p, text in pairs})

    def plan(self, problem: PlanningProblem) -> TimeTriggeredPlan:
        key = problem_hash(problem)
        if key not in self.fixtures:
            raise PlannerFailure(f"no fixture plan for problem {key}")
        return validated(parse_time_triggered_plan(self.fixtures[key], problem), problem)


class ExternalPlanner:
    """Run a planner executable and read a time-triggered plan from its stdout.

    ``command`` is an argument list; ``{domain}`` and ``{problem}`` are
    replaced by paths to temporary PDDL files.  Output lines that do not look
    like plan steps are ignored.
    """

    name = "external"

    def __init__(self, command: Sequence[str], domain_text: str = ROBOT_DELIVERY_DOMAIN,
                 timeout: float = 60.0):
        self.command = list(command)
        self.domain_text = domain_text
        self.timeout = timeout

    def plan(self, problem: PlanningProblem) -> TimeTriggeredPlan:
        with tempfile.TemporaryDirectory() as tmp:
            dom, prob = Path(tmp, "domain.pddl"), Path(tmp, "problem.pddl")
            dom.write_text(self.domain_text)
            prob.write_text(render_problem(problem))
            argv = [a.format(domain=dom, problem=prob) for a in self.command]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise PlannerFailure(f"planner did not run: {exc}") from exc
        if proc.returncode != 0:
            raise PlannerFailure(f"planner exited with status {proc.returncode}")
        lines = [ln for ln in proc.stdout.splitlines() if ":" in ln and "(" in ln and not ln.lstrip().startswith(";")]
        if not lines:
            raise PlannerFailure("planner output contains no plan")
        try:
            plan = parse_time_triggered_plan("\n".join(lines), problem)
        except PlanSyntaxError as exc:
            raise PlannerFailure(f"unreadable planner output: {exc}") from exc
        return validated(plan, problem)


def make_planner(kind: str, *, command: Optional[Sequence[str]] = None, fixtures=None, timeout: float = 60.0):
    if kind == "greedy":
        return GreedyPlanner()
    if kind == "fixture":
        return FixturePlanner(fixtures or {})
    if kind == "external":
        if not command:
            raise ValueError("external planner needs a command")
        return ExternalPlanner(command, timeout=timeout)
    raise ValueError(f"unknown planner {kind!r}")
