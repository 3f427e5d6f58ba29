import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from adaptplan.dispatcher import (
    DecisionKind,
    ExecutorState,
    ReplanReason,
    handle_feedback,
    record_dispatch,
    select_next,
)
from adaptplan.errors import ProtocolError
from adaptplan.events import ActionCompleted, DispatchRejected, ExogenousFlip, Observation, Tick, TimedLiteralFired
from adaptplan.extractor import OrderingResult, generate_plans
from adaptplan.model import NodeKind, PlanNode
from adaptplan.plan_graph import PLAN_START, EdgeLabel, PlanNetwork, TemporalEdge
from adaptplan.simulator import WorldConfig, estimate

from conftest import instant, problem


def executor(example, example_relaxed):
    return ExecutorState(example_relaxed, example[0].initial_state())


def one_node_net(lb=0.0, ub=math.inf, pre=()):
    nodes = {PLAN_START: PlanNode(PLAN_START, NodeKind.PLAN_START),
             "a": PlanNode("a", NodeKind.INSTANTANEOUS, instant("a", pre))}
    return PlanNetwork(nodes, (), [TemporalEdge(PLAN_START, "a", lb, ub, EdgeLabel.DEADLINE)])


def test_policy_picks_first_node_of_most_probable_ordering():
    results = [OrderingResult(0.5, ("a", "b", "c")), OrderingResult(0.3, ("b", "a", "c")),
               OrderingResult(0.3, ("b", "c"))]
    d = select_next(results, 0.0)
    assert d.kind is DecisionKind.DISPATCH and d.node == "a"


def test_equal_probabilities_break_ties_lexicographically():
    d = select_next([OrderingResult(0.5, ("b",)), OrderingResult(0.5, ("a", "z"))], 0.0)
    assert d.node == "a"


def test_no_orderings_means_replan():
    d = select_next([], 0.0)
    assert d.kind is DecisionKind.REPLAN and d.reason is ReplanReason.NO_ORDERING


def test_empty_ordering_means_done():
    assert select_next([OrderingResult(1.0, ())], 0.0).kind is DecisionKind.DONE


def test_wait_until_earliest_feasible_time():
    d = select_next([OrderingResult(1.0, ("a",))], 1.0, one_node_net(lb=5.0))
    assert d.kind is DecisionKind.WAIT_UNTIL and d.time == pytest.approx(5.0)


def test_missed_window_is_a_temporal_violation():
    d = select_next([OrderingResult(1.0, ("a",))], 6.0, one_node_net(ub=3.0))
    assert d.reason is ReplanReason.TEMPORAL_VIOLATION


def test_false_precondition_in_belief_is_not_dispatched():
    net = one_node_net(pre=["p"])
    belief = problem(["p"], []).initial_state()
    d = select_next([OrderingResult(1.0, ("a",))], 0.0, net, belief)
    assert d.reason is ReplanReason.PRECONDITION_FALSE


def test_await_end_mid_execution(example, example_relaxed):
    ex = record_dispatch(executor(example, example_relaxed), "n000.start")
    results = generate_plans(ex.belief, ex.plan, now=ex.now)
    d = select_next(results, ex.now, ex.plan, ex.belief)
    assert d.kind is DecisionKind.AWAIT_END and d.node == "n000.end"


def test_success_prunes_and_updates_belief(example, example_relaxed):
    ex = record_dispatch(executor(example, example_relaxed), "n001.start")
    assert "n001.start" not in ex.plan.nodes and ex.action_count == 1
    ex, reason = handle_feedback(ex, ActionCompleted(9.0, "goto r1 wp0 m0", "n001.start", True))
    assert reason is None
    assert not {"n001.start", "n001.end"} & set(ex.plan.nodes)
    assert ex.belief.rho["robot_at r1 m0"] == 1.0 and ex.belief.rho["robot_at r1 wp0"] == 0.0
    assert ex.executed == ("n001.start", "n001.end") and ex.now == 9.0


def test_failure_triggers_replan(example, example_relaxed):
    ex = record_dispatch(executor(example, example_relaxed), "n001.start")
    _, reason = handle_feedback(ex, ActionCompleted(9.0, "goto r1 wp0 m0", "n001.start", False))
    assert reason is ReplanReason.ACTION_FAILED


def test_rejected_dispatch_triggers_replan(example, example_relaxed):
    _, reason = handle_feedback(executor(example, example_relaxed), DispatchRejected(0.0, "n002.start"))
    assert reason is ReplanReason.PRECONDITION_FALSE


def test_observation_leads_to_skipping_switch_on(example, example_relaxed):
    ex = executor(example, example_relaxed)
    cfg = WorldConfig(confidence=1.0)
    est = lambda b, o, e: estimate(b, o, cfg, e)
    ex, reason = handle_feedback(ex, Observation(0.0, (("machine_on m0", True),)), est)
    assert reason is None and ex.belief.rho["machine_on m0"] == 1.0
    best = select_next(generate_plans(ex.belief, ex.plan), ex.now, ex.plan, ex.belief).chosen
    assert "n002.start" in best.skipped and "n002.start" not in best.sequence


def test_timed_literal_sets_belief(example, example_relaxed):
    ex, _ = handle_feedback(executor(example, example_relaxed), TimedLiteralFired(3.0, "accepting wp1", False))
    assert ex.belief.rho["accepting wp1"] == 0.0


def test_exogenous_flip_is_invisible_to_the_executor(example, example_relaxed):
    ex = executor(example, example_relaxed)
    after, reason = handle_feedback(ex, ExogenousFlip(2.0, "machine_on m0", True))
    assert reason is None and after.belief == ex.belief and after.now == 2.0


def test_passed_deadline_on_tick(example, example_relaxed):
    ex = record_dispatch(executor(example, example_relaxed), "n000.start")  # end due by 18.2
    _, reason = handle_feedback(ex, Tick(18.0))
    assert reason is None
    _, reason = handle_feedback(ex, Tick(20.0))
    assert reason is ReplanReason.TEMPORAL_VIOLATION


@pytest.mark.parametrize("event", [
    ActionCompleted(1.0, "x", "n009.start", True),
    Observation(1.0, (("no such fact", True),)),
    TimedLiteralFired(1.0, "no such fact", True),
    DispatchRejected(1.0, "n009"),
    "not an event",
])
def test_unknown_references_are_protocol_errors(example, example_relaxed, event):
    with pytest.raises(ProtocolError):
        handle_feedback(executor(example, example_relaxed), event)


def test_dispatching_unknown_or_end_node_is_rejected(example, example_relaxed):
    ex = executor(example, example_relaxed)
    with pytest.raises(ProtocolError):
        record_dispatch(ex, "n042.start")
    with pytest.raises(ProtocolError):
        record_dispatch(ex, "n000.end")


def test_executed_nodes_leave_the_live_plan(example, example_relaxed):
    ex = executor(example, example_relaxed)
    for node, action, t in [("n000.start", "goto r0 wp1 m0", 14.0), ("n001.start", "goto r1 wp0 m0", 9.0)]:
        ex = record_dispatch(ex, node)
        ex, _ = handle_feedback(ex, ActionCompleted(t, action, node, True))
    assert not set(ex.executed) & set(ex.plan.nodes)
    assert len(ex.trace) == 4


@settings(max_examples=100)
@given(st.lists(st.tuples(st.sampled_from([0.1, 0.3, 0.5]), st.lists(st.sampled_from("abc"), max_size=3)),
                min_size=1, max_size=6), st.randoms())
def test_decision_does_not_depend_on_result_order(items, rnd):
    results = [OrderingResult(q, tuple(seq)) for q, seq in items]
    shuffled = results[:]
    rnd.shuffle(shuffled)
    assert select_next(results, 0.0) == select_next(shuffled, 0.0)
