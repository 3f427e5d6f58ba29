"""Time-triggered plan text, ordering dumps, and the PDDL entry point.

A time-triggered plan line looks like::

    14.001: (switch_on r0 m0) [5.000]

Instantaneous actions may omit the bracketed duration.  Lines starting with
``;`` are comments.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .errors import GroundingError, PlanSyntaxError
from .model import DurativeAction, PlanningProblem
from .pddl import parse_domain_problem  # noqa: F401  (re-exported)

_FLOAT = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_LINE = re.compile(
    rf"^\s*(?P<t>{_FLOAT})\s*:\s*\(\s*(?P<body>[^()]*?)\s*\)\s*(?:\[\s*(?P<d>{_FLOAT})\s*\])?\s*$"
)


class PlanStep(NamedTuple):
    time: float
    action: str
    duration: float


@dataclass(frozen=True)
class TimeTriggeredPlan:
    steps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        for a, b in zip(self.steps, self.steps[1:]):
            if b.time < a.time:
                raise ValueError("plan steps must be sorted by dispatch time")
        for s in self.steps:
            if s.time < 0 or s.duration < 0:
                raise ValueError(f"negative time or duration in {s}")

    def __len__(self):
        return len(self.steps)

    @property
    def makespan(self) -> float:
        return max((s.time + s.duration for s in self.steps), default=0.0)

    def to_text(self) -> str:
        return "".join(f"{s.time:.3f}: ({s.action}) [{s.duration:.3f}]\n" for s in self.steps)


def parse_time_triggered_plan(text: str, problem: Optional[PlanningProblem] = None) -> TimeTriggeredPlan:
    steps = []
    arities = {}
    if problem is not None:
        for ident in problem.actions:
            parts = ident.split()
            arities.setdefault(parts[0], set()).add(len(parts) - 1)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";"):
            continue
        m = _LINE.match(line)
        if m is None:
            raise PlanSyntaxError(f"malformed plan line {stripped!r}", lineno)
        tokens = m.group("body").lower().split()
        if not tokens:
            raise PlanSyntaxError("empty action", lineno)
        action = " ".join(tokens)
        duration = float(m.group("d")) if m.group("d") is not None else 0.0
        if problem is not None:
            if tokens[0] not in arities:
                raise GroundingError(f"unknown action {tokens[0]!r}", lineno)
            if len(tokens) - 1 not in arities[tokens[0]]:
                raise GroundingError(
                    f"action {tokens[0]!r} has arity {sorted(arities[tokens[0]])}, got {len(tokens) - 1}",
                    lineno,
                )
            if action not in problem.actions:
                raise GroundingError(f"no grounding for ({action})", lineno)
            if isinstance(problem.actions[action], DurativeAction) and m.group("d") is None:
                raise PlanSyntaxError(f"durative action ({action}) needs a [duration]", lineno)
        steps.append(PlanStep(float(m.group("t")), action, duration))
    # stable sort keeps textual order among equal timestamps
    steps.sort(key=lambda s: s.time)
    return TimeTriggeredPlan(steps)


def ordering_sort_key(result):
    return (-result.q_total, tuple(result.sequence))


def serialize_orderings(results: Iterable) -> str:
    lines = []
    for r in sorted(results, key=ordering_sort_key):
        lines.append(f"Q={r.q_total:.12g} : {' '.join(r.sequence)}".rstrip() + "\n")
    return "".join(lines)
