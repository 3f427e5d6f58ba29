"""Random Robot Delivery instances on a Euclidean map."""
from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import Optional

from ..model import PlanningProblem, TimedLiteral
from ..pddl import parse_domain_problem
from .domain import ROBOT_DELIVERY_DOMAIN

MAP_SIZE = 30.0


@dataclass(frozen=True)
class BenchmarkSpec:
    robots: int = 3
    machines: int = 3
    delivery_locations: int = 4
    orders: int = 2
    deadline_factor: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if min(self.robots, self.machines, self.delivery_locations, self.orders) < 1:
            raise ValueError("benchmark counts must be positive")
        if self.robots < 2:
            raise ValueError("loading needs two robots")
        if self.orders > self.delivery_locations:
            raise ValueError("each order needs its own delivery location")
        if self.deadline_factor is not None and self.deadline_factor <= 1:
            raise ValueError("deadline_factor must exceed 1")

    @property
    def instance_id(self) -> str:
        tag = f"r{self.robots}m{self.machines}l{self.delivery_locations}o{self.orders}-s{self.seed}"
        return tag + ("-dl" if self.deadline_factor else "")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def render_problem(problem: PlanningProblem) -> str:
    """PDDL problem text for a Robot Delivery ``PlanningProblem``.

    Object types are recovered from the proposition names, so this works on
    any state reached during execution, not only generated instances.
    """
    def args(pred):
        return sorted({p.split()[1] for p in problem.propositions if p.split()[0] == pred})

    robots = args("holding")
    machines = args("machine_on")
    locations = [l for l in args("accepting") if l not in machines]
    groups = [(robots, "robot"), (locations, "location"), (machines, "machine")]
    decl = "\n            ".join(f"{' '.join(names)} - {kind}" for names, kind in groups if names)
    lines = [f"(define (problem {problem.name})", "  (:domain robot_delivery)", f"  (:objects {decl})"]
    init = [f"({p})" for p in sorted(problem.initial_true)]
    init += [f"(= ({f}) {_fmt(v)})" for f, v in sorted(problem.initial_numerics.items())]
    for til in sorted(problem.timed_literals):
        lit = f"({til.proposition})" if til.value else f"(not ({til.proposition}))"
        init.append(f"(at {_fmt(til.time)} {lit})")
    lines.append("  (:init " + "\n         ".join(init) + ")")
    goal = [f"({p})" if pol else f"(not ({p}))" for p, pol in sorted(problem.goal.literals)]
    lines.append(f"  (:goal (and {' '.join(goal)}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


def problem_hash(problem: PlanningProblem) -> str:
    return hashlib.sha256(render_problem(problem).encode()).hexdigest()[:16]


def _instance_text(spec: BenchmarkSpec, deadlines: dict) -> str:
    rng = random.Random(f"robot-delivery:{spec.seed}")
    machines = [f"m{i}" for i in range(spec.machines)]
    locations = [f"wp{i}" for i in range(spec.delivery_locations)]
    robots = [f"r{i}" for i in range(spec.robots)]
    places = machines + locations
    xy = {p: (rng.uniform(0, MAP_SIZE), rng.uniform(0, MAP_SIZE)) for p in places}
    start = {r: rng.choice(locations) for r in robots}
    orders = sorted(rng.sample(locations, spec.orders), key=locations.index)
    init = [f"(robot_at {r} {start[r]})" for r in robots]
    init += [f"(accepting {l})" for l in locations]
    for a in places:
        for b in places:
            if a != b:
                d = max(1.0, round(math.dist(xy[a], xy[b]), 1))
                init.append(f"(= (travel_time {a} {b}) {_fmt(d)})")
    for l in orders:
        if l in deadlines:
            init.append(f"(at {_fmt(deadlines[l])} (not (accepting {l})))")
    machine_decl = f"\n            {' '.join(machines)} - machine" if machines else ""
    return (
        f"(define (problem {spec.instance_id.replace('.', '_')})\n"
        "  (:domain robot_delivery)\n"
        f"  (:objects {' '.join(robots)} - robot\n"
        f"            {' '.join(locations)} - location{machine_decl})\n"
        "  (:init " + "\n         ".join(init) + ")\n"
        f"  (:goal (and {' '.join(f'(delivered_at {l})' for l in orders)}))\n"
        ")\n"
    )


def generate_benchmark(spec: BenchmarkSpec) -> tuple:
    """Return ``(domain text, problem text)`` for ``spec``; deterministic in the seed.

    With a deadline factor, every ordered location stops accepting deliveries
    at ``deadline_factor`` times the greedy planner's makespan.
    """
    text = _instance_text(spec, {})
    if spec.deadline_factor:
        from .planners import greedy_delivery_plan

        problem = parse_domain_problem(ROBOT_DELIVERY_DOMAIN, text)
        horizon = spec.deadline_factor * greedy_delivery_plan(problem).makespan
        goals = [p.split()[1] for p, _ in problem.goal.literals]
        text = _instance_text(spec, {l: round(horizon, 3) for l in goals})
    return ROBOT_DELIVERY_DOMAIN, text


def load_instance(spec: BenchmarkSpec) -> PlanningProblem:
    return parse_domain_problem(*generate_benchmark(spec))


def shifted(problem: PlanningProblem, true, numerics, offset: float) -> PlanningProblem:
    """The problem re-rooted at a later state, with timed literals moved by ``-offset``."""
    tils = tuple(TimedLiteral(round(t.time - offset, 6), t.proposition, t.value)
                 for t in problem.timed_literals if t.time > offset)
    return PlanningProblem(problem.propositions, problem.fluents, problem.actions, frozenset(true),
                           dict(numerics), problem.goal, tils, problem.name)
