"""Planning-domain types and the probabilistic (fuzzy) state.

Propositions and numeric fluents are identified by their grounded text,
e.g. ``"robot_at r0 wp1"`` or ``"travel_time wp1 m0"``.  A state carries a
truth probability ``rho`` for every proposition and a crisp value for every
fluent.  Conditions are evaluated as the product of their literal
probabilities; numeric comparisons contribute a crisp 0/1 factor.
"""
from __future__ import annotations

import enum
import math
import operator
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Union

from .errors import InconsistentApplicationError, MalformedConditionError

# An expression is a literal number, a fluent id, or (op, lhs, rhs).
Expr = Union[float, int, str, tuple]

COMPARATORS = {
    "<": operator.lt,
    "<=": operator.le,
    "=": lambda a, b: math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9),
    ">=": operator.ge,
    ">": operator.gt,
}
ARITHMETIC = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
}
NUMERIC_OPS = ("assign", "increase", "decrease")


class Timing(str, enum.Enum):
    AT_START = "at-start"
    OVER_ALL = "over-all"
    AT_END = "at-end"
    UNTIMED = "untimed"


def evaluate(expr: Expr, numerics: Mapping[str, float]) -> float:
    if isinstance(expr, (int, float)):
        return float(expr)
    if isinstance(expr, str):
        try:
            return numerics[expr]
        except KeyError:
            raise MalformedConditionError(f"unknown fluent {expr!r}") from None
    op, lhs, rhs = expr
    if op not in ARITHMETIC:
        raise MalformedConditionError(f"unknown arithmetic operator {op!r}")
    return ARITHMETIC[op](evaluate(lhs, numerics), evaluate(rhs, numerics))


def expr_fluents(expr: Expr) -> set:
    if isinstance(expr, str):
        return {expr}
    if isinstance(expr, tuple):
        return expr_fluents(expr[1]) | expr_fluents(expr[2])
    return set()


@dataclass(frozen=True)
class Condition:
    """Conjunction of literals and numeric comparisons sharing one timing tag."""

    literals: frozenset = frozenset()  # {(proposition, polarity)}
    numeric: tuple = ()  # ((lhs, comparator, rhs), ...)
    timing: Timing = Timing.UNTIMED

    def __post_init__(self):
        object.__setattr__(self, "literals", frozenset(self.literals))
        object.__setattr__(self, "numeric", tuple(self.numeric))
        positive = {p for p, pol in self.literals if pol}
        negative = {p for p, pol in self.literals if not pol}
        clash = positive & negative
        if clash:
            raise MalformedConditionError(
                f"proposition(s) {sorted(clash)} appear with both polarities"
            )
        for _, cmp, _ in self.numeric:
            if cmp not in COMPARATORS:
                raise MalformedConditionError(f"unknown comparator {cmp!r}")

    @property
    def is_empty(self) -> bool:
        return not self.literals and not self.numeric

    def propositions(self) -> set:
        return {p for p, _ in self.literals}

    def fluents(self) -> set:
        out = set()
        for lhs, _, rhs in self.numeric:
            out |= expr_fluents(lhs) | expr_fluents(rhs)
        return out

    def conjoin(self, other: "Condition", timing: Timing | None = None) -> "Condition":
        return Condition(
            self.literals | other.literals,
            self.numeric + tuple(c for c in other.numeric if c not in self.numeric),
            timing or self.timing,
        )


EMPTY_CONDITION = Condition()


@dataclass(frozen=True)
class Effect:
    propositional: Mapping[str, float] = field(default_factory=dict)
    numeric: tuple = ()  # ((fluent, op, expr), ...)
    timing: Timing = Timing.UNTIMED

    def __post_init__(self):
        object.__setattr__(self, "propositional", dict(self.propositional))
        object.__setattr__(self, "numeric", tuple(self.numeric))
        for p, psi in self.propositional.items():
            if not 0.0 <= psi <= 1.0:
                raise ValueError(f"effect probability for {p!r} outside [0, 1]: {psi}")
        for _, op, _ in self.numeric:
            if op not in NUMERIC_OPS:
                raise ValueError(f"unknown numeric effect {op!r}")

    @property
    def is_empty(self) -> bool:
        return not self.propositional and not self.numeric

    def adds(self) -> set:
        return {p for p, psi in self.propositional.items() if psi > 0.0}

    def deletes(self) -> set:
        return {p for p, psi in self.propositional.items() if psi < 1.0}

    def fluents(self) -> set:
        return {f for f, _, _ in self.numeric}

    def fluents_read(self) -> set:
        out = set()
        for _, _, expr in self.numeric:
            out |= expr_fluents(expr)
        return out


EMPTY_EFFECT = Effect()


@dataclass(frozen=True)
class DurativeAction:
    id: str
    at_start: Condition = EMPTY_CONDITION
    over_all: Condition = EMPTY_CONDITION
    at_end: Condition = EMPTY_CONDITION
    start_effect: Effect = EMPTY_EFFECT
    end_effect: Effect = EMPTY_EFFECT
    duration: tuple = (0.0, 0.0)
    # True when the domain fixes the duration by an equation rather than bounds.
    fixed_duration: bool = False

    def __post_init__(self):
        lb, ub = self.duration
        if not 0.0 <= lb <= ub:
            raise ValueError(f"{self.id}: invalid duration bounds {self.duration}")

    @property
    def name(self) -> str:
        return self.id.split()[0]


@dataclass(frozen=True)
class InstantaneousAction:
    id: str
    pre: Condition = EMPTY_CONDITION
    effect: Effect = EMPTY_EFFECT

    @property
    def name(self) -> str:
        return self.id.split()[0]


Action = Union[DurativeAction, InstantaneousAction]


class TimedLiteral(NamedTuple):
    time: float
    proposition: str
    value: bool


@dataclass(frozen=True)
class PlanningProblem:
    propositions: frozenset
    fluents: frozenset
    actions: Mapping[str, Action]
    initial_true: frozenset
    initial_numerics: Mapping[str, float]
    goal: Condition
    timed_literals: tuple = ()
    name: str = "problem"

    def __post_init__(self):
        object.__setattr__(self, "propositions", frozenset(self.propositions))
        object.__setattr__(self, "fluents", frozenset(self.fluents))
        object.__setattr__(self, "initial_true", frozenset(self.initial_true))
        missing = self.initial_true - self.propositions
        if missing:
            raise MalformedConditionError(f"initial state mentions unknown {sorted(missing)}")
        if set(self.initial_numerics) != set(self.fluents):
            raise MalformedConditionError("initial state must assign every fluent exactly once")
        unknown = (self.goal.propositions() - self.propositions) | (
            self.goal.fluents() - self.fluents
        )
        if unknown:
            raise MalformedConditionError(f"goal references unknown {sorted(unknown)}")

    def initial_state(self) -> "FuzzyState":
        return FuzzyState(
            {p: float(p in self.initial_true) for p in self.propositions},
            dict(self.initial_numerics),
        )


class NodeKind(str, enum.Enum):
    PLAN_START = "PlanStart"
    INSTANTANEOUS = "Instantaneous"
    ACTION_START = "ActionStart"
    ACTION_END = "ActionEnd"


@dataclass(frozen=True)
class PlanNode:
    id: str
    kind: NodeKind
    action: Optional[Action] = None
    mate: Optional[str] = None
    dispatch_time: float = 0.0
    prescribed_duration: float = 0.0

    @property
    def action_id(self) -> str:
        return self.action.id if self.action is not None else ""

    def effect(self) -> Effect:
        if self.kind is NodeKind.ACTION_START:
            return self.action.start_effect
        if self.kind is NodeKind.ACTION_END:
            return self.action.end_effect
        if self.kind is NodeKind.INSTANTANEOUS:
            return self.action.effect
        return EMPTY_EFFECT

    def condition(self) -> Condition:
        """Condition checked when the node is applied."""
        if self.kind is NodeKind.ACTION_START:
            return self.action.at_start.conjoin(self.action.over_all, Timing.AT_START)
        if self.kind is NodeKind.ACTION_END:
            return self.action.at_end
        if self.kind is NodeKind.INSTANTANEOUS:
            return self.action.pre
        return EMPTY_CONDITION


class Executing(NamedTuple):
    action: str
    node: str  # id of the ActionStart node
    started: Optional[float] = None


@dataclass(frozen=True)
class FuzzyState:
    rho: Mapping[str, float]
    numerics: Mapping[str, float] = field(default_factory=dict)
    executing: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "executing", frozenset(self.executing))

    def is_executing(self, start_node: str) -> bool:
        return any(e.node == start_node for e in self.executing)

    def crisp(self, cutoff: float = 0.5) -> frozenset:
        return frozenset(p for p, v in self.rho.items() if v >= cutoff)

    def with_rho(self, updates: Mapping[str, float]) -> "FuzzyState":
        rho = dict(self.rho)
        rho.update(updates)
        return FuzzyState(rho, self.numerics, self.executing)


def joint_probability(cond: Condition, state: FuzzyState) -> float:
    q = 1.0
    for p, positive in cond.literals:
        try:
            r = state.rho[p]
        except KeyError:
            raise MalformedConditionError(f"unknown proposition {p!r}") from None
        q *= r if positive else 1.0 - r
    for lhs, cmp, rhs in cond.numeric:
        if not COMPARATORS[cmp](evaluate(lhs, state.numerics), evaluate(rhs, state.numerics)):
            return 0.0
    return q


def apply_effect(state: FuzzyState, effect: Effect) -> tuple:
    """Return the updated (rho, numerics) pair for ``effect``."""
    rho = state.rho
    if effect.propositional:
        rho = dict(rho)
        rho.update(effect.propositional)
    numerics = state.numerics
    if effect.numeric:
        numerics = dict(numerics)
        for fluent, op, expr in effect.numeric:
            value = evaluate(expr, state.numerics)
            if op == "assign":
                numerics[fluent] = value
            elif op == "increase":
                numerics[fluent] = numerics[fluent] + value
            else:
                numerics[fluent] = numerics[fluent] - value
    return rho, numerics


def apply_node(state: FuzzyState, node: PlanNode, now: Optional[float] = None) -> FuzzyState:
    executing = state.executing
    if node.kind is NodeKind.ACTION_START:
        executing = executing | {Executing(node.action.id, node.id, now)}
    elif node.kind is NodeKind.ACTION_END:
        running = [e for e in executing if e.node == node.mate]
        if not running:
            raise InconsistentApplicationError(
                f"end of {node.action_id!r} applied but the action is not executing"
            )
        executing = executing - set(running)
    elif node.kind is NodeKind.PLAN_START:
        raise InconsistentApplicationError("the plan-start node cannot be applied")
    rho, numerics = apply_effect(state, node.effect())
    return FuzzyState(rho, numerics, executing)


def node_applicable(node: PlanNode, state: FuzzyState, threshold: float = 0.0) -> Optional[float]:
    if node.kind is NodeKind.PLAN_START:
        return None
    if node.kind is NodeKind.ACTION_END and not state.is_executing(node.mate):
        return None
    q = joint_probability(node.condition(), state)
    return q if q > threshold else None
