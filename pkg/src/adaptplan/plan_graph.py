"""Plan networks built from time-triggered plans.

Edges follow the convention ``lb <= time(dst) - time(src) <= ub``.  The
full network carries causal, interference and duration edges; the adaptable
network produced by :func:`relax` keeps only interference and duration
edges.  Absolute-time constraints (deadlines, executing actions) hang off
the plan-start node, which is pinned to time 0.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional

from .errors import InvalidPlanError, NetworkInconsistencyError
from .model import (
    COMPARATORS,
    Condition,
    DurativeAction,
    NodeKind,
    PlanNode,
    PlanningProblem,
    evaluate,
)
from .plan_io import TimeTriggeredPlan

EPSILON = 0.001
TOLERANCE = 1e-6
PLAN_START = "plan_start"


class EdgeLabel(str, enum.Enum):
    CAUSAL = "Causal"
    INTERFERENCE = "Interference"
    DURATION = "Duration"
    DEADLINE = "Deadline"


class TemporalEdge(NamedTuple):
    src: str
    dst: str
    lb: float
    ub: float
    label: EdgeLabel


@dataclass(frozen=True)
class PlanNetwork:
    nodes: Mapping[str, PlanNode]
    edges: tuple = ()
    deadline_edges: tuple = ()
    goal: Condition = field(default_factory=Condition)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "deadline_edges", tuple(self.deadline_edges))
        for e in self.all_edges():
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise NetworkInconsistencyError(f"edge {e} references an unknown node")
            if e.lb > e.ub:
                raise NetworkInconsistencyError(f"edge {e} has lb > ub")
            if e.src == e.dst:
                raise NetworkInconsistencyError(f"self-loop {e}")

    @property
    def start(self) -> PlanNode:
        return self.nodes[PLAN_START]

    def all_edges(self):
        return self.edges + self.deadline_edges

    def action_nodes(self):
        return [n for n in self.nodes.values() if n.kind is not NodeKind.PLAN_START]

    def count(self, label: EdgeLabel) -> int:
        return sum(1 for e in self.all_edges() if e.label is label)

    def dump(self) -> str:
        lines = []
        for n in self.nodes.values():
            lines.append(f"node {n.id} {n.kind.value} {n.action_id}".rstrip())
        for e in sorted(self.all_edges()):
            lines.append(f"edge {e.src} {e.dst} {e.lb:g} {e.ub:g} {e.label.value}")
        return "\n".join(lines) + "\n"


def _strict(gap: float) -> float:
    """Lower bound for a strict ordering that the original schedule satisfies."""
    return EPSILON if gap >= EPSILON - TOLERANCE else 0.0


def _contradicts(psi: float, polarity: bool) -> bool:
    return psi < 1.0 if polarity else psi > 0.0


def _point_condition(node: PlanNode) -> Condition:
    if node.kind is NodeKind.ACTION_START:
        return node.action.at_start
    return node.condition()


def _conflicts(a: PlanNode, b: PlanNode) -> bool:
    ea, eb = a.effect(), b.effect()
    for p, psi in ea.propositional.items():
        if p in eb.propositional and eb.propositional[p] != psi:
            return True
    for f, op, _ in ea.numeric:
        for g, op2, _ in eb.numeric:
            if f == g and "assign" in (op, op2):
                return True
    if ea.fluents() & eb.fluents_read() or eb.fluents() & ea.fluents_read():
        return True
    for eff, node in ((ea, b), (eb, a)):
        if _effect_breaks(eff, _point_condition(node)):
            return True
    return False


def _effect_breaks(eff, cond: Condition) -> bool:
    for p, pol in cond.literals:
        if p in eff.propositional and _contradicts(eff.propositional[p], pol):
            return True
    return bool(eff.fluents() & cond.fluents())


def _order(a: PlanNode, b: PlanNode):
    return (a, b) if (a.dispatch_time, a.id) <= (b.dispatch_time, b.id) else (b, a)


def _edge(src: PlanNode, dst: PlanNode) -> TemporalEdge:
    gap = dst.dispatch_time - src.dispatch_time
    return TemporalEdge(src.id, dst.id, _strict(gap), math.inf, EdgeLabel.INTERFERENCE)


def _mates(node: PlanNode):
    """(start, end) ids and times of the durative action owning ``node``."""
    if node.kind is NodeKind.ACTION_START:
        return (node.id, node.dispatch_time), (node.mate, node.dispatch_time + node.prescribed_duration)
    return (node.mate, node.dispatch_time - node.prescribed_duration), (node.id, node.dispatch_time)


def detect_interference(n1: PlanNode, n2: PlanNode) -> set:
    edges = set()
    if n1.action is None or n2.action is None or n1.id == n2.id or n1.mate == n2.id:
        return edges
    if _conflicts(n1, n2):
        src, dst = _order(n1, n2)
        edges.add(_edge(src, dst))
    for other, holder in ((n1, n2), (n2, n1)):
        if not isinstance(holder.action, DurativeAction):
            continue
        if not _effect_breaks(other.effect(), holder.action.over_all):
            continue
        (sid, st), (eid, et) = _mates(holder)
        for nid, t in ((sid, st), (eid, et)):
            ghost = PlanNode(nid, NodeKind.ACTION_START, holder.action, dispatch_time=t)
            src, dst = _order(other, ghost)
            edges.add(_edge(src, dst))
    return edges


def _node_id(index: int, suffix: str = "") -> str:
    return f"n{index:03d}{suffix}"


def build_plan_network(tt: TimeTriggeredPlan, problem: PlanningProblem) -> PlanNetwork:
    start = PlanNode(PLAN_START, NodeKind.PLAN_START)
    nodes = {PLAN_START: start}
    events = []  # (time, priority, seq, payload)
    durations = []
    for i, step in enumerate(tt.steps):
        action = problem.actions.get(step.action)
        if action is None:
            raise InvalidPlanError(f"unknown action ({step.action})")
        if isinstance(action, DurativeAction):
            s_id, e_id = _node_id(i, ".start"), _node_id(i, ".end")
            s = PlanNode(s_id, NodeKind.ACTION_START, action, e_id, step.time, step.duration)
            e = PlanNode(e_id, NodeKind.ACTION_END, action, s_id, step.time + step.duration, step.duration)
            nodes[s_id], nodes[e_id] = s, e
            events.append((s.dispatch_time, 2, len(events), s))
            events.append((e.dispatch_time, 0, len(events), e))
            lb, ub = action.duration
            d = step.duration
            if action.fixed_duration:
                lb = ub = d
            elif not lb - TOLERANCE <= d <= ub + TOLERANCE:
                raise InvalidPlanError(
                    f"prescribed duration {d} of ({action.id}) outside [{lb}, {ub}]", s_id
                )
            durations.append(TemporalEdge(s_id, e_id, lb, ub, EdgeLabel.DURATION))
        else:
            n = PlanNode(_node_id(i), NodeKind.INSTANTANEOUS, action, None, step.time, 0.0)
            nodes[n.id] = n
            events.append((n.dispatch_time, 2, len(events), n))
    for til in problem.timed_literals:
        events.append((til.time, 1, len(events), til))
    events.sort(key=lambda ev: ev[:3])

    true = set(problem.initial_true)
    numerics = dict(problem.initial_numerics)
    achiever = {(p, p in true): PLAN_START for p in problem.propositions}
    til_support = {}
    modifier = {f: PLAN_START for f in problem.fluents}
    running = {}
    causal, deadlines = set(), set()

    def holds(cond):
        return all((p in true) == pol for p, pol in cond.literals) and all(
            COMPARATORS[c](evaluate(l, numerics), evaluate(r, numerics)) for l, c, r in cond.numeric
        )

    for time, _, _, ev in events:
        if not isinstance(ev, PlanNode):
            true.add(ev.proposition) if ev.value else true.discard(ev.proposition)
            achiever[(ev.proposition, ev.value)] = PLAN_START
            til_support[(ev.proposition, ev.value)] = ev.time
            for nid, holder in running.items():
                if not holds(holder.action.over_all):
                    raise InvalidPlanError(
                        f"timed literal at {time} breaks over-all condition of ({holder.action_id})", nid
                    )
            continue
        node = ev
        cond = node.condition()
        if not holds(cond):
            raise InvalidPlanError(
                f"condition of {node.id} ({node.action_id}) does not hold at {time:.3f}", node.id
            )
        for lit in cond.literals:
            sup = achiever[lit]
            if sup == PLAN_START:
                causal.add(TemporalEdge(PLAN_START, node.id, 0.0, math.inf, EdgeLabel.CAUSAL))
                if lit in til_support and lit[1]:
                    deadlines.add(TemporalEdge(PLAN_START, node.id, til_support[lit], math.inf, EdgeLabel.DEADLINE))
            elif sup != node.id:
                causal.add(_causal(nodes[sup], node))
        for f in cond.fluents():
            sup = modifier[f]
            if sup == PLAN_START:
                causal.add(TemporalEdge(PLAN_START, node.id, 0.0, math.inf, EdgeLabel.CAUSAL))
            elif sup != node.id:
                causal.add(_causal(nodes[sup], node))
        eff = node.effect()
        new_numerics = dict(numerics)
        for f, op, expr in eff.numeric:
            v = evaluate(expr, numerics)
            new_numerics[f] = v if op == "assign" else new_numerics[f] + (v if op == "increase" else -v)
            modifier[f] = node.id
        numerics = new_numerics
        for p, psi in eff.propositional.items():
            value = psi >= 0.5
            true.add(p) if value else true.discard(p)
            achiever[(p, value)] = node.id
            til_support.pop((p, value), None)
        if node.kind is NodeKind.ACTION_START:
            running[node.id] = node
        elif node.kind is NodeKind.ACTION_END:
            running.pop(node.mate, None)
        for nid, holder in running.items():
            if not holds(holder.action.over_all):
                raise InvalidPlanError(
                    f"{node.id} ({node.action_id}) breaks over-all condition of ({holder.action_id})", node.id
                )

    for til in problem.timed_literals:
        if til.value:
            continue
        for node in nodes.values():
            if node.action is None or node.dispatch_time > til.time:
                continue
            needs = {p for p, pol in node.condition().literals if pol}
            if isinstance(node.action, DurativeAction):
                needs |= {p for p, pol in node.action.over_all.literals if pol}
            if til.proposition in needs:
                deadlines.add(TemporalEdge(PLAN_START, node.id, 0.0, til.time, EdgeLabel.DEADLINE))

    interference = set()
    action_nodes = [n for n in nodes.values() if n.action is not None]
    for i, a in enumerate(action_nodes):
        for b in action_nodes[i + 1:]:
            if a.mate == b.id:
                continue
            interference |= detect_interference(a, b)

    edges = sorted(causal) + sorted(durations) + sorted(interference)
    return PlanNetwork(nodes, edges, sorted(deadlines), problem.goal)


def _causal(src: PlanNode, dst: PlanNode) -> TemporalEdge:
    gap = dst.dispatch_time - src.dispatch_time
    return TemporalEdge(src.id, dst.id, _strict(gap), math.inf, EdgeLabel.CAUSAL)


def relax(net: PlanNetwork) -> PlanNetwork:
    return PlanNetwork(
        net.nodes,
        [e for e in net.edges if e.label is not EdgeLabel.CAUSAL],
        [e for e in net.deadline_edges if e.label is not EdgeLabel.CAUSAL],
        net.goal,
    )


def prune_executed(
    net: PlanNetwork,
    done=frozenset(),
    skipped=frozenset(),
    started_at: Optional[Mapping[str, float]] = None,
) -> PlanNetwork:
    """Remove finished/skipped nodes, anchoring still-running actions in absolute time."""
    removed = set(done) | set(skipped)
    if not removed:
        return net
    removed.discard(PLAN_START)
    unknown = removed - set(net.nodes)
    if unknown:
        raise NetworkInconsistencyError(f"cannot prune unknown nodes {sorted(unknown)}")
    started_at = started_at or {}
    anchored = []
    for node in net.nodes.values():
        if node.kind is not NodeKind.ACTION_START or node.id not in removed or node.mate in removed:
            continue
        if node.id not in done or node.id not in started_at:
            raise NetworkInconsistencyError(
                f"{node.id} removed while its end {node.mate} is kept and no start time is recorded"
            )
        t0 = started_at[node.id]
        for e in net.edges:
            if e.label is EdgeLabel.DURATION and e.src == node.id and e.dst == node.mate:
                anchored.append(TemporalEdge(PLAN_START, node.mate, t0 + e.lb, t0 + e.ub, EdgeLabel.DURATION))
    nodes = {k: v for k, v in net.nodes.items() if k not in removed}
    keep = lambda e: e.src not in removed and e.dst not in removed  # noqa: E731
    return PlanNetwork(
        nodes,
        [e for e in net.edges if keep(e)],
        [e for e in net.deadline_edges if keep(e)] + anchored,
        net.goal,
    )
