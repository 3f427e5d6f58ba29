"""Action selection and executor bookkeeping.

The policy takes the most probable valid ordering and acts on its first
node.  Probabilities of orderings that share a first node are deliberately
not added up: the orderings overlap, so their probabilities are not
independent events.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import ProtocolError
from .events import ActionCompleted, DispatchRejected, ExogenousFlip, Observation, Tick, TimedLiteralFired
from .extractor import OrderingResult, SearchFrontier, SkipConflict, predecessors_to_skip
from .model import FuzzyState, NodeKind, apply_node, node_applicable
from .plan_graph import PLAN_START, TOLERANCE, PlanNetwork, prune_executed
from .plan_io import ordering_sort_key
from .stn import solve


class DecisionKind(str, enum.Enum):
    DISPATCH = "dispatch"
    WAIT_UNTIL = "wait-until"
    AWAIT_END = "await-end"
    REPLAN = "replan"
    DONE = "done"


class ReplanReason(str, enum.Enum):
    NO_ORDERING = "no valid ordering"
    ACTION_FAILED = "action failed"
    PRECONDITION_FALSE = "precondition false at dispatch"
    TEMPORAL_VIOLATION = "temporal constraint violated"


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    node: Optional[str] = None
    time: Optional[float] = None
    reason: Optional[ReplanReason] = None
    chosen: Optional[OrderingResult] = None

    def __str__(self):
        detail = self.node or (f"{self.time:.3f}" if self.time is not None else None) or (
            self.reason.value if self.reason else "")
        return f"{self.kind.value} {detail}".rstrip()


def best_ordering(results) -> Optional[OrderingResult]:
    results = list(results)
    return min(results, key=ordering_sort_key) if results else None


def earliest_time(node: str, plan: PlanNetwork, now: float) -> Optional[float]:
    """Earliest feasible time of ``node`` as the next executed node, or None."""
    cons = [(e.src, e.dst, e.lb, e.ub) for e in plan.all_edges()]
    sol = solve([node], cons, PLAN_START, now)
    return None if sol is None else sol[0][node]


def select_next(results, now: float, plan: Optional[PlanNetwork] = None,
                belief: Optional[FuzzyState] = None) -> Decision:
    """Decide what to do next from a set of valid orderings.

    Without ``plan`` the node kinds and timing are unknown and the first node
    is dispatched outright.
    """
    best = best_ordering(results)
    if best is None:
        return Decision(DecisionKind.REPLAN, reason=ReplanReason.NO_ORDERING)
    if not best.sequence:
        return Decision(DecisionKind.DONE, chosen=best)
    first = best.sequence[0]
    if plan is None:
        return Decision(DecisionKind.DISPATCH, node=first, chosen=best)
    node = plan.nodes[first]
    if node.kind is NodeKind.ACTION_END:
        return Decision(DecisionKind.AWAIT_END, node=first, chosen=best)
    t = earliest_time(first, plan, now)
    if t is None:
        return Decision(DecisionKind.REPLAN, reason=ReplanReason.TEMPORAL_VIOLATION, chosen=best)
    if t > now + TOLERANCE:
        return Decision(DecisionKind.WAIT_UNTIL, node=first, time=t, chosen=best)
    if belief is not None and node_applicable(node, belief) is None:
        return Decision(DecisionKind.REPLAN, reason=ReplanReason.PRECONDITION_FALSE, chosen=best)
    return Decision(DecisionKind.DISPATCH, node=first, chosen=best)


Estimator = Callable[[FuzzyState, Observation, float], FuzzyState]


@dataclass(frozen=True)
class ExecutorState:
    """Live plan and belief of one executor.

    Times inside are relative to ``origin``, the absolute time at which the
    current plan started; feedback events carry absolute times.
    """

    plan: PlanNetwork
    belief: FuzzyState
    origin: float = 0.0
    now: float = 0.0
    executed: tuple = ()
    skipped: frozenset = frozenset()
    started_at: dict = field(default_factory=dict)
    running: dict = field(default_factory=dict)  # start (or instantaneous) node -> end node or None
    replan_count: int = 0
    action_count: int = 0
    last_observed: float = 0.0
    trace: tuple = ()

    def log(self, text: str) -> "ExecutorState":
        return replace(self, trace=self.trace + (f"{self.origin + self.now:.3f} {text}",))

    def at(self, absolute: float) -> "ExecutorState":
        return replace(self, now=max(self.now, absolute - self.origin))

    def frontier(self) -> SearchFrontier:
        return SearchFrontier(frozenset(n.id for n in self.plan.action_nodes()), (), self.belief)


def skip_set(ex: ExecutorState, node: str) -> frozenset:
    try:
        return predecessors_to_skip(node, ex.frontier(), ex.plan)
    except SkipConflict as exc:
        raise ProtocolError(f"dispatching {node} would skip running end {exc.args[0]}") from exc


def record_dispatch(ex: ExecutorState, node_id: str) -> ExecutorState:
    """Account for a dispatched start or instantaneous node."""
    if node_id not in ex.plan.nodes:
        raise ProtocolError(f"unknown node {node_id}")
    node = ex.plan.nodes[node_id]
    if node.kind not in (NodeKind.ACTION_START, NodeKind.INSTANTANEOUS):
        raise ProtocolError(f"{node_id} is not dispatchable")
    skip = skip_set(ex, node_id)
    started = dict(ex.started_at)
    started[node_id] = ex.now
    running = dict(ex.running)
    running[node_id] = node.mate
    plan = prune_executed(ex.plan, done={node_id}, skipped=skip, started_at=started)
    ex = replace(
        ex,
        plan=plan,
        belief=apply_node(ex.belief, node, ex.now),
        executed=ex.executed + (node_id,),
        skipped=ex.skipped | skip,
        started_at=started,
        running=running,
        action_count=ex.action_count + 1,
    )
    ex = ex.log(f"dispatch {node_id} ({node.action_id})")
    return ex.log(f"skip {' '.join(sorted(skip))}") if skip else ex


def deadline_violated(ex: ExecutorState) -> Optional[str]:
    """A node still to execute whose absolute upper bound has passed."""
    for e in ex.plan.deadline_edges:
        if e.src == PLAN_START and e.dst in ex.plan.nodes and e.ub != math.inf and e.ub < ex.now - TOLERANCE:
            return e.dst
    return None


def handle_feedback(ex: ExecutorState, event, estimator: Optional[Estimator] = None):
    """Fold one feedback event into the executor; returns ``(state, reason or None)``."""
    if isinstance(event, ActionCompleted):
        ex = ex.at(event.time)
        if event.node not in ex.running:
            raise ProtocolError(f"completion for unknown action node {event.node}")
        end = ex.running[event.node]
        running = {k: v for k, v in ex.running.items() if k != event.node}
        ex = replace(ex, running=running)
        if not event.success:
            return ex.log(f"failed {event.node} ({event.action})"), ReplanReason.ACTION_FAILED
        if end is None:
            return ex.log(f"done {event.node} ({event.action})"), None
        if end not in ex.plan.nodes:
            raise ProtocolError(f"end node {end} is not in the live plan")
        node = ex.plan.nodes[end]
        try:
            skip, reason = predecessors_to_skip(end, ex.frontier(), ex.plan), None
        except SkipConflict:
            # the world finished actions in an order the plan forbids
            skip, reason = frozenset(), ReplanReason.TEMPORAL_VIOLATION
        ex = replace(
            ex,
            plan=prune_executed(ex.plan, done={end}, skipped=skip),
            belief=apply_node(ex.belief, node, ex.now),
            executed=ex.executed + (end,),
            skipped=ex.skipped | skip,
        )
        ex = ex.log(f"done {end} ({event.action})")
        return (ex.log(f"skip {' '.join(sorted(skip))}") if skip else ex), reason
    if isinstance(event, DispatchRejected):
        ex = ex.at(event.time)
        if event.node not in ex.plan.nodes:
            raise ProtocolError(f"rejection for unknown node {event.node}")
        return ex.log(f"rejected {event.node}"), ReplanReason.PRECONDITION_FALSE
    if isinstance(event, Observation):
        ex = ex.at(event.time)
        unknown = [p for p, _ in event.pairs if p not in ex.belief.rho]
        if unknown:
            raise ProtocolError(f"observation of unknown propositions {unknown}")
        if estimator is not None:
            elapsed = ex.now - ex.last_observed
            ex = replace(ex, belief=estimator(ex.belief, event, elapsed), last_observed=ex.now)
        return ex, None
    if isinstance(event, TimedLiteralFired):
        ex = ex.at(event.time)
        if event.proposition not in ex.belief.rho:
            raise ProtocolError(f"unknown proposition {event.proposition}")
        return replace(ex, belief=ex.belief.with_rho({event.proposition: 1.0 if event.value else 0.0})), None
    if isinstance(event, ExogenousFlip):
        # the executor only learns about the world through observations
        return ex.at(event.time), None
    if isinstance(event, Tick):
        ex = ex.at(event.time)
        late = deadline_violated(ex)
        if late is not None:
            return ex.log(f"deadline passed for {late}"), ReplanReason.TEMPORAL_VIOLATION
        return ex, None
    raise ProtocolError(f"unknown event {event!r}")
