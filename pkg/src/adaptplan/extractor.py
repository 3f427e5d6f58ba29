"""Enumerate the valid total orderings of an adaptable plan.

Depth-first search over node sequences.  At each step every open node whose
condition probability exceeds the threshold is tried; choosing a node drops
(skips) every open node that would have had to precede it.  A branch is cut
when its prefix is temporally infeasible, recorded when the goal holds, and
abandoned when nothing is applicable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import CapacityError
from .model import FuzzyState, NodeKind, apply_node, joint_probability, node_applicable
from .plan_graph import PLAN_START, EdgeLabel, PlanNetwork
from .stn import IncrementalSTN, solve

DEFAULT_MAX_RESULTS = 100_000


@dataclass(frozen=True)
class OrderingResult:
    q_total: float
    sequence: tuple
    step_probs: tuple = ()
    skipped: frozenset = frozenset()
    goal_prob: float = 1.0


@dataclass
class SearchFrontier:
    open: frozenset
    prefix: tuple
    state: FuzzyState
    q_acc: float = 1.0
    skipped: frozenset = frozenset()


class SkipConflict(Exception):
    """Choosing a node would skip the end of an action that is running."""


def _constraints(plan):
    return [(e.src, e.dst, e.lb, e.ub) for e in plan.all_edges()]


def precedence(plan: PlanNetwork) -> dict:
    """Map each node to the set of nodes that must strictly precede it.

    ``b`` precedes ``a`` when some directed edge path from ``b`` to ``a``
    has a positive total lower bound, i.e. contains a positive-lb edge.
    Interference edges count as strict even when a timestamp tie in the
    source plan left them with a zero lower bound.
    """
    ids = list(plan.nodes)
    index = {n: i for i, n in enumerate(ids)}
    succ = [[] for _ in ids]
    pred = [[] for _ in ids]
    positive = []
    for e in plan.all_edges():
        u, v = index[e.src], index[e.dst]
        succ[u].append(v)
        pred[v].append(u)
        if e.lb > 0 or e.label is EdgeLabel.INTERFERENCE:
            positive.append((u, v))

    def closure(adj):
        bits = []
        for s in range(len(ids)):
            seen = 1 << s
            stack = [s]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if not seen >> y & 1:
                        seen |= 1 << y
                        stack.append(y)
            bits.append(seen)
        return bits

    reach = closure(succ)
    coreach = closure(pred)
    before = [0] * len(ids)
    for u, v in positive:
        r = reach[v]
        while r:
            low = r & -r
            a = low.bit_length() - 1
            before[a] |= coreach[u]
            r ^= low
    return {
        ids[a]: frozenset(ids[b] for b in range(len(ids)) if before[a] >> b & 1)
        for a in range(len(ids))
    }


def predecessors_to_skip(a: str, frontier: SearchFrontier, plan: PlanNetwork, prec=None) -> frozenset:
    """Open nodes that can no longer execute once ``a`` is chosen."""
    prec = prec if prec is not None else precedence(plan)
    open_ = frontier.open
    skip = set(prec[a] & open_)
    skip.discard(a)
    for b in list(skip):
        mate = plan.nodes[b].mate
        if mate is not None and mate in open_ and mate != a:
            skip.add(mate)
    for b in skip:
        node = plan.nodes[b]
        if node.kind is NodeKind.ACTION_END and frontier.state.is_executing(node.mate):
            raise SkipConflict(b)
    node = plan.nodes[a]
    if node.kind is NodeKind.ACTION_START and node.mate in skip:
        raise SkipConflict(node.mate)
    return frozenset(skip)


def valid_nodes(frontier: SearchFrontier, plan: PlanNetwork, threshold: float = 0.0) -> list:
    out = []
    for nid in sorted(frontier.open):
        q = node_applicable(plan.nodes[nid], frontier.state, threshold)
        if q is not None:
            out.append((q, nid))
    return out


def relaxed_table(plan: PlanNetwork) -> dict:
    """Per node: (condition literals, facts it may make true, facts it may make false)."""
    table = {}
    for node in plan.action_nodes():
        eff = node.effect().propositional
        table[node.id] = (
            tuple(node.condition().literals),
            frozenset(p for p, psi in eff.items() if psi > 0.0),
            frozenset(p for p, psi in eff.items() if psi < 1.0),
        )
    return table


def goal_reachable(frontier: SearchFrontier, plan: PlanNetwork, goal, table=None) -> bool:
    """Delete-relaxed test that the goal can still get a nonzero probability.

    Facts only accumulate possible truth values; numeric conditions are
    assumed satisfiable.  A False answer means no extension of the prefix can
    reach the goal, so pruning on it never loses an ordering.
    """
    table = table if table is not None else relaxed_table(plan)
    state = frontier.state
    can_true = {p for p, r in state.rho.items() if r > 0.0}
    can_false = {p for p, r in state.rho.items() if r < 1.0}

    def possible(literals):
        return all((p in can_true) if pol else (p in can_false) for p, pol in literals)

    goal_lits = tuple(goal.literals)
    if possible(goal_lits):
        return True
    fired = set()
    pending = []
    for nid in frontier.open:
        node = plan.nodes[nid]
        if node.kind is NodeKind.ACTION_END and node.mate not in frontier.open:
            if not state.is_executing(node.mate):
                continue
            fired.add(node.mate)
        pending.append(node)
    changed = True
    while changed:
        changed = False
        rest = []
        for node in pending:
            lits, adds, dels = table[node.id]
            if (node.kind is not NodeKind.ACTION_END or node.mate in fired) and possible(lits):
                can_true |= adds
                can_false |= dels
                fired.add(node.id)
                changed = True
            else:
                rest.append(node)
        pending = rest
        if changed and possible(goal_lits):
            return True
    return False


def check_temporal_consistency(prefix, plan, now: float = 0.0) -> bool:
    """Full (non-incremental) feasibility test of an ordered prefix."""
    edges = plan.all_edges() if isinstance(plan, PlanNetwork) else plan
    cons = [(e[0], e[1], e[2], e[3]) for e in edges]
    return solve(list(prefix), cons, PLAN_START, now) is not None


class _FullSTN:
    """Same interface as IncrementalSTN, recomputing from scratch."""

    def __init__(self, constraints, anchor, now):
        self.cons, self.anchor, self.now = constraints, anchor, now
        self.prefix = []

    def push(self, node):
        self.prefix.append(node)
        if solve(self.prefix, self.cons, self.anchor, self.now) is None:
            self.prefix.pop()
            return False
        return True

    def pop(self):
        self.prefix.pop()


def generate_plans(
    s0: FuzzyState,
    plan: PlanNetwork,
    *,
    now: float = 0.0,
    threshold: float = 0.0,
    max_results: int = DEFAULT_MAX_RESULTS,
    incremental: bool = True,
    prune_unreachable: bool = True,
    stats: Optional[dict] = None,
) -> list:
    """Return every valid ordering of ``plan`` from ``s0``, best first."""
    cons = _constraints(plan)
    stn = (IncrementalSTN if incremental else _FullSTN)(cons, PLAN_START, now)
    prec = precedence(plan)
    table = relaxed_table(plan)
    goal = plan.goal
    results = {}
    counters = {"prefixes": 0, "pruned_temporal": 0, "pruned_unreachable": 0, "dead_ends": 0}

    def order_nodes(frontier: SearchFrontier, steps: tuple):
        counters["prefixes"] += 1
        g = joint_probability(goal, frontier.state)
        if g > threshold:
            seq = frontier.prefix
            if seq not in results:
                if len(results) >= max_results:
                    raise CapacityError(f"more than {max_results} valid orderings")
                results[seq] = OrderingResult(frontier.q_acc * g, seq, steps, frontier.skipped, g)
            return
        if prune_unreachable and not goal_reachable(frontier, plan, goal, table):
            counters["pruned_unreachable"] += 1
            return
        phi = valid_nodes(frontier, plan, threshold)
        if not phi:
            counters["dead_ends"] += 1
            return
        for q, a in phi:
            try:
                skip = predecessors_to_skip(a, frontier, plan, prec)
            except SkipConflict:
                continue
            if not stn.push(a):
                counters["pruned_temporal"] += 1
                continue
            child = SearchFrontier(
                frontier.open - skip - {a},
                frontier.prefix + (a,),
                apply_node(frontier.state, plan.nodes[a]),
                frontier.q_acc * q,
                frontier.skipped | skip,
            )
            order_nodes(child, steps + (q,))
            stn.pop()

    open_ = frozenset(n.id for n in plan.action_nodes())
    order_nodes(SearchFrontier(open_, (), s0), ())
    if stats is not None:
        stats.update(counters)
        stats["results"] = len(results)
    return sorted(results.values(), key=lambda r: (-r.q_total, r.sequence))
