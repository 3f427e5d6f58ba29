"""Run one execution episode against the simulator.

RO (re-ordering) extracts the valid orderings of the relaxed plan before
every decision and replans only when none is left or execution breaks.  RP
(replanning) follows the unrelaxed plan in its original order and replans on
any failure, rejected dispatch, or missed deadline.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace

from ..dispatcher import (
    DecisionKind,
    ExecutorState,
    ReplanReason,
    handle_feedback,
    record_dispatch,
    select_next,
)
from ..errors import PlannerFailure
from ..events import DispatchRejected, Tick
from ..extractor import OrderingResult, generate_plans
from ..model import NodeKind, PlanningProblem
from ..plan_graph import build_plan_network, relax
from ..simulator import Simulator, WorldConfig, estimate
from .benchmark import shifted


class Mode(str, enum.Enum):
    RO = "RO"
    RP = "RP"


@dataclass
class EpisodeMetrics:
    instance_id: str
    mode: str
    seed: int
    success: bool = False
    replans: int = 0
    actions_executed: int = 0
    extraction_calls: int = 0
    extraction_time_total: float = 0.0
    extraction_time_max: float = 0.0
    orderings_per_call: list = field(default_factory=list)
    end_time: float = 0.0
    executed: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def orderings_max(self) -> int:
        return max(self.orderings_per_call, default=0)


class _Stop(Exception):
    def __init__(self, success: bool, why: str):
        super().__init__(why)
        self.success = success


def fixed_order(plan) -> list:
    """Action nodes in the order the time-triggered plan executes them."""
    rank = {NodeKind.ACTION_END: 0, NodeKind.INSTANTANEOUS: 1, NodeKind.ACTION_START: 1}
    return sorted((n.id for n in plan.action_nodes()),
                  key=lambda i: (plan.nodes[i].dispatch_time, rank[plan.nodes[i].kind], i))


class Episode:
    def __init__(self, mode, problem: PlanningProblem, planner, cfg: WorldConfig, seed: int, *,
                 instance_id: str = "", max_replans: int = 10, max_decisions: int = 5000,
                 max_time: float = 1e5, threshold: float = 0.0):
        self.mode = Mode(mode)
        self.problem = problem
        self.planner = planner
        self.cfg = cfg.with_seed(seed)
        self.sim = Simulator(problem, self.cfg)
        self.metrics = EpisodeMetrics(instance_id or problem.name, self.mode.value, seed)
        self.max_replans = max_replans
        self.max_decisions = max_decisions
        self.max_time = max_time
        self.threshold = threshold
        self.ex = None
        self.order = []
        self.executed_before = []

    def log(self, text):
        self.metrics.trace.append(f"{self.sim.clock:.3f} {text}")

    def _estimator(self):
        if self.mode is Mode.RP:
            return None
        return lambda belief, obs, elapsed: estimate(belief, obs, self.cfg, elapsed)

    def _start_plan(self, problem, origin):
        try:
            tt = self.planner.plan(problem)
        except PlannerFailure as exc:
            raise _Stop(False, f"planner failure: {exc}") from exc
        net = build_plan_network(tt, problem)
        if self.mode is Mode.RO:
            net = relax(net)
        self.order = fixed_order(net)
        prev = self.ex
        self.ex = ExecutorState(net, problem.initial_state(), origin=origin)
        if prev is not None:
            self.metrics.executed.extend(prev.executed)
        self.log(f"plan {len(tt)} actions, {len(net.nodes)} nodes")

    def _extract(self):
        ex = self.ex
        if self.mode is Mode.RP:
            seq = tuple(n for n in self.order if n in ex.plan.nodes)
            return [OrderingResult(1.0, seq)]
        t0 = time.perf_counter()
        results = generate_plans(ex.belief, ex.plan, now=ex.now, threshold=self.threshold)
        dt = time.perf_counter() - t0
        m = self.metrics
        m.extraction_calls += 1
        m.extraction_time_total += dt
        m.extraction_time_max = max(m.extraction_time_max, dt)
        m.orderings_per_call.append(len(results))
        return results

    def _feed(self, events):
        reason = None
        estimator = self._estimator()
        for ev in list(events) + [Tick(self.sim.clock)]:
            self.ex, why = handle_feedback(self.ex, ev, estimator)
            if why is not None and reason is None:
                reason = why
        if reason is not None:
            self._replan(reason)

    def _replan(self, reason: ReplanReason):
        self.log(f"replan: {reason.value}")
        self.metrics.replans += 1
        if self.metrics.replans > self.max_replans:
            raise _Stop(False, "too many replans")
        while self.sim.world.running:
            self.sim.step(self.sim.next_completion())
        self.sim.step(self.sim.clock)
        self._check_goal()
        true, numerics = self.sim.snapshot()
        now = self.sim.clock
        sub = shifted(self.problem, true, numerics, now)
        count = self.ex.action_count
        self._start_plan(sub, now)
        self.ex = replace(self.ex, action_count=count)

    def _check_goal(self):
        if self.sim.goal_reached():
            raise _Stop(True, "goal reached")
        if self.sim.clock > self.max_time:
            raise _Stop(False, "time limit")

    def _decide(self):
        ex = self.ex
        results = self._extract()
        belief = ex.belief if self.mode is Mode.RO else None
        dec = select_next(results, ex.now, ex.plan, belief)
        self.log(f"decide {dec}")
        kind = dec.kind
        if kind is DecisionKind.DISPATCH:
            node = ex.plan.nodes[dec.node]
            if self.sim.dispatch(node, self.sim.clock):
                self.ex = record_dispatch(self.ex, dec.node)
                if node.kind is NodeKind.INSTANTANEOUS:
                    self._feed(self.sim.step(self.sim.clock))
            else:
                self._feed([DispatchRejected(self.sim.clock, dec.node)])
        elif kind is DecisionKind.WAIT_UNTIL:
            self._feed(self.sim.step(ex.origin + dec.time))
        elif kind is DecisionKind.AWAIT_END:
            t = self.sim.next_completion()
            if t is None:
                self._replan(ReplanReason.NO_ORDERING)
            else:
                self._feed(self.sim.step(t))
        elif kind is DecisionKind.REPLAN:
            self._replan(dec.reason)
        else:  # DONE: believed complete but the world disagrees
            if self.sim.world.running:
                self._feed(self.sim.step(self.sim.next_completion()))
            else:
                self._replan(ReplanReason.NO_ORDERING)

    def run(self) -> EpisodeMetrics:
        try:
            self._start_plan(self.problem, 0.0)
            for _ in range(self.max_decisions):
                self._check_goal()
                self._decide()
            raise _Stop(False, "decision limit")
        except _Stop as stop:
            self.metrics.success = stop.success
            self.log(str(stop))
        m = self.metrics
        if self.ex is not None:
            m.executed.extend(self.ex.executed)
            m.actions_executed = self.ex.action_count
        m.end_time = self.sim.clock
        return m


def run_episode(mode, problem, planner, cfg: WorldConfig, seed: int, **kwargs) -> EpisodeMetrics:
    return Episode(mode, problem, planner, cfg, seed, **kwargs).run()
