import math

import networkx as nx
import pytest

from adaptplan.errors import InvalidPlanError, NetworkInconsistencyError
from adaptplan.harness.domain import RUNNING_EXAMPLE_PLAN, RUNNING_EXAMPLE_PROBLEM, domain_text
from adaptplan.model import NodeKind, PlanNode
from adaptplan.plan_graph import (
    EPSILON,
    PLAN_START,
    EdgeLabel,
    PlanNetwork,
    TemporalEdge,
    build_plan_network,
    detect_interference,
    prune_executed,
    relax,
)
from adaptplan.plan_io import PlanStep, TimeTriggeredPlan, parse_domain_problem, parse_time_triggered_plan

from conftest import durative, instant, problem


def edges_between(net, src, dst, label=None):
    return [e for e in net.all_edges() if e.src == src and e.dst == dst and (label is None or e.label is label)]


def test_running_example_has_fifteen_nodes(example_net):
    kinds = [n.kind for n in example_net.nodes.values()]
    assert len(kinds) == 15
    assert kinds.count(NodeKind.ACTION_START) == kinds.count(NodeKind.ACTION_END) == 7


def test_initially_true_precondition_is_supported_by_plan_start():
    p = problem(["p", "q"], [instant("a", ["p"], ["q"])], init=["p"], goal=["q"])
    net = build_plan_network(TimeTriggeredPlan((PlanStep(0.0, "a", 0.0),)), p)
    assert edges_between(net, PLAN_START, "n000", EdgeLabel.CAUSAL)


def test_switch_on_supports_load(example_net):
    # n002 = switch_on r0 m0, n003 = load_at_machine r1 r0 m0
    (e,) = edges_between(example_net, "n002.end", "n003.start", EdgeLabel.CAUSAL)
    assert e.lb == EPSILON and e.ub == math.inf


def test_duration_edges_use_domain_interval(example_net):
    (e,) = edges_between(example_net, "n000.start", "n000.end", EdgeLabel.DURATION)
    assert (e.lb, e.ub) == pytest.approx((0.8 * 14, 1.3 * 14))


def test_disjoint_actions_do_not_interfere():
    a = PlanNode("a", NodeKind.INSTANTANEOUS, instant("a", ["p"], ["q"]))
    b = PlanNode("b", NodeKind.INSTANTANEOUS, instant("b", ["r"], ["s"]), dispatch_time=1.0)
    assert detect_interference(a, b) == set()


def test_delete_at_end_protects_an_over_all_interval():
    holder = durative("h", over=["p"], duration=(2.0, 2.0))
    breaker = durative("k", end_eff=["-p"], duration=(5.0, 5.0))
    h_end = PlanNode("h.end", NodeKind.ACTION_END, holder, "h.start", 2.0, 2.0)
    k_end = PlanNode("k.end", NodeKind.ACTION_END, breaker, "k.start", 5.0, 5.0)
    edges = detect_interference(k_end, h_end)
    assert TemporalEdge("h.end", "k.end", EPSILON, math.inf, EdgeLabel.INTERFERENCE) in edges
    assert TemporalEdge("h.start", "k.end", EPSILON, math.inf, EdgeLabel.INTERFERENCE) in edges


def test_conflicting_ends_get_one_edge_in_plan_order():
    adder = durative("add", end_eff=["p"])
    deleter = durative("del", end_eff=["-p"])
    a = PlanNode("a.end", NodeKind.ACTION_END, adder, "a.start", 3.0, 1.0)
    d = PlanNode("d.end", NodeKind.ACTION_END, deleter, "d.start", 1.0, 1.0)
    assert detect_interference(a, d) == {TemporalEdge("d.end", "a.end", EPSILON, math.inf, EdgeLabel.INTERFERENCE)}


def test_relax_only_causal_gives_edgeless_plan():
    nodes = {PLAN_START: PlanNode(PLAN_START, NodeKind.PLAN_START),
             "x": PlanNode("x", NodeKind.INSTANTANEOUS, instant("x"))}
    net = PlanNetwork(nodes, [TemporalEdge(PLAN_START, "x", 0.0, math.inf, EdgeLabel.CAUSAL)])
    assert relax(net).all_edges() == ()


def test_relax_keeps_duration_and_interference(example_net, example_relaxed):
    assert example_relaxed.nodes == example_net.nodes
    assert {e.label for e in example_relaxed.all_edges()} <= {EdgeLabel.DURATION, EdgeLabel.INTERFERENCE}
    assert example_relaxed.count(EdgeLabel.DURATION) == 7
    assert len(example_relaxed.all_edges()) + example_net.count(EdgeLabel.CAUSAL) == len(example_net.all_edges())
    assert relax(example_relaxed) == example_relaxed


def test_original_timestamps_satisfy_every_edge(example_net):
    t = {n.id: n.dispatch_time for n in example_net.nodes.values()}
    for e in example_net.all_edges():
        gap = t[e.dst] - t[e.src]
        assert e.lb - 1e-9 <= gap <= e.ub + 1e-9, e


def test_every_condition_literal_has_causal_support(example_net):
    for node in example_net.action_nodes():
        if node.condition().literals:
            assert any(e.dst == node.id and e.label is EdgeLabel.CAUSAL for e in example_net.edges), node.id


def test_strict_edges_are_acyclic(example_net):
    g = nx.DiGraph([(e.src, e.dst) for e in example_net.all_edges() if e.lb > 0])
    assert nx.is_directed_acyclic_graph(g)


def test_prune_nothing_is_identity(example_relaxed):
    assert prune_executed(example_relaxed) is example_relaxed


def test_prune_completed_action(example_relaxed):
    net = prune_executed(example_relaxed, done={"n001.start", "n001.end"})
    assert len(net.nodes) == 13
    assert not any("n001" in (e.src + e.dst) for e in net.all_edges())


def test_running_action_is_anchored_in_absolute_time():
    fixed = domain_text((1.0, 1.0))
    p = parse_domain_problem(fixed, RUNNING_EXAMPLE_PROBLEM)
    net = relax(build_plan_network(parse_time_triggered_plan(RUNNING_EXAMPLE_PLAN, p), p))
    pruned = prune_executed(net, done={"n000.start"}, started_at={"n000.start": 2.0})
    anchored = edges_between(pruned, PLAN_START, "n000.end")
    assert [(e.lb, e.ub) for e in anchored] == [(16.0, 16.0)]


def test_prune_start_without_time_is_rejected(example_relaxed):
    with pytest.raises(NetworkInconsistencyError):
        prune_executed(example_relaxed, done={"n000.start"})
    with pytest.raises(NetworkInconsistencyError):
        prune_executed(example_relaxed, done={"nope"})


def test_invalid_plan_names_the_failing_node(example):
    problem_, _ = example
    bad = parse_time_triggered_plan("0.0: (load_at_machine r1 r0 m0) [15.0]", problem_)
    with pytest.raises(InvalidPlanError) as err:
        build_plan_network(bad, problem_)
    assert err.value.node == "n000.start"


def test_duration_outside_domain_bounds_is_invalid(example):
    problem_, _ = example
    bad = parse_time_triggered_plan("0.0: (goto r0 wp1 m0) [30.0]", problem_)
    with pytest.raises(InvalidPlanError):
        build_plan_network(bad, problem_)


def test_deleting_timed_literal_adds_deadline_on_consumers():
    prob = RUNNING_EXAMPLE_PROBLEM.replace("(accepting wp1)", "(accepting wp1) (at 100 (not (accepting wp1)))")
    from adaptplan.harness.domain import ROBOT_DELIVERY_DOMAIN
    p = parse_domain_problem(ROBOT_DELIVERY_DOMAIN, prob)
    net = build_plan_network(parse_time_triggered_plan(RUNNING_EXAMPLE_PLAN, p), p)
    deadlines = {(e.dst, e.ub) for e in net.deadline_edges if e.label is EdgeLabel.DEADLINE}
    assert ("n006.start", 100.0) in deadlines


def test_deadline_violation_makes_plan_invalid():
    prob = RUNNING_EXAMPLE_PROBLEM.replace("(accepting wp1)", "(accepting wp1) (at 60 (not (accepting wp1)))")
    from adaptplan.harness.domain import ROBOT_DELIVERY_DOMAIN
    p = parse_domain_problem(ROBOT_DELIVERY_DOMAIN, prob)
    with pytest.raises(InvalidPlanError):
        build_plan_network(parse_time_triggered_plan(RUNNING_EXAMPLE_PLAN, p), p)


def test_dump_lists_nodes_and_edges(example_relaxed):
    lines = example_relaxed.dump().splitlines()
    assert sum(l.startswith("node ") for l in lines) == 15
    assert "edge n000.start n000.end 11.2 18.2 Duration" in lines
