"""Non-physics world simulation and the state-probability estimator.

Randomness is drawn from independent streams keyed by the episode seed:
one per exogenously-changing proposition and one per (action, occurrence)
pair.  Two executors that dispatch the same action the same number of times
therefore see the same durations and failures, and both see the same
exogenous history regardless of what they dispatch.
"""
from __future__ import annotations

import fnmatch
import heapq
import itertools
import json
import math
import random
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

from .events import ActionCompleted, ExogenousFlip, Observation, TimedLiteralFired
from .model import COMPARATORS, DurativeAction, FuzzyState, NodeKind, PlanNode, PlanningProblem, evaluate


class ExogenousProcess(NamedTuple):
    pattern: str  # proposition or fnmatch pattern, e.g. "machine_on *"
    rate: float  # flips per second
    p_true: float = 1.0  # probability that a flip sets the proposition true


@dataclass(frozen=True)
class WorldConfig:
    action_failure_prob: float = 0.0
    duration_noise: tuple = (0.8, 1.3)
    exogenous: tuple = ()
    visible: tuple = ()  # proposition patterns reported by observations
    report_period: float = 0.0
    confidence: float = 0.9
    decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "duration_noise", tuple(self.duration_noise))
        object.__setattr__(self, "exogenous", tuple(ExogenousProcess(*e) for e in self.exogenous))
        object.__setattr__(self, "visible", tuple(self.visible))
        lo, hi = self.duration_noise
        if not 0 < lo <= hi:
            raise ValueError(f"bad duration noise {self.duration_noise}")
        if not 0.0 <= self.action_failure_prob <= 1.0:
            raise ValueError("action_failure_prob must be in [0, 1]")
        if any(e.rate < 0 for e in self.exogenous):
            raise ValueError("exogenous rates must be non-negative")

    @classmethod
    def degenerate(cls, seed: int = 0) -> "WorldConfig":
        return cls(duration_noise=(1.0, 1.0), seed=seed)

    def with_seed(self, seed: int) -> "WorldConfig":
        return WorldConfig(**{**asdict(self), "seed": seed})

    def to_json(self) -> str:
        data = asdict(self)
        data["exogenous"] = [list(e) for e in self.exogenous]
        return json.dumps(data, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "WorldConfig":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown world config keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "WorldConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())


def expand(patterns, propositions) -> list:
    out = []
    for pat in patterns:
        out.extend(sorted(p for p in propositions if fnmatch.fnmatchcase(p, pat)))
    return list(dict.fromkeys(out))


@dataclass
class Running:
    action: object
    node: str
    started: float
    finish: float
    fails: bool
    undo: dict


@dataclass
class GroundTruth:
    true: set
    numerics: dict
    running: dict = field(default_factory=dict)
    clock: float = 0.0

    def holds(self, cond) -> bool:
        return all((p in self.true) == pol for p, pol in cond.literals) and all(
            COMPARATORS[c](evaluate(l, self.numerics), evaluate(r, self.numerics))
            for l, c, r in cond.numeric
        )


class Simulator:
    """Ground-truth world advanced by :meth:`step`."""

    def __init__(self, problem: PlanningProblem, cfg: WorldConfig):
        self.problem = problem
        self.cfg = cfg
        self.world = GroundTruth(set(problem.initial_true), dict(problem.initial_numerics))
        self.trace = []
        self._heap = []
        self._seq = itertools.count()
        self._occurrences = {}
        self._last_report = 0.0
        self.visible = expand(cfg.visible, problem.propositions)
        for til in problem.timed_literals:
            self._push(til.time, 1, TimedLiteralFired(til.time, til.proposition, til.value))
        self._exo = {}
        for proc in cfg.exogenous:
            for p in expand([proc.pattern], problem.propositions):
                if proc.rate <= 0:
                    continue
                rng = random.Random(f"{cfg.seed}:exo:{p}")
                self._exo[p] = (proc, rng)
                self._schedule_flip(p, 0.0)

    @property
    def clock(self) -> float:
        return self.world.clock

    def _push(self, time, priority, payload):
        heapq.heappush(self._heap, (time, priority, next(self._seq), payload))

    def _schedule_flip(self, p, now):
        proc, rng = self._exo[p]
        t = now + rng.expovariate(proc.rate)
        value = rng.random() < proc.p_true
        self._push(t, 2, ExogenousFlip(t, p, value))

    def _log(self, time, text):
        self.trace.append(f"{time:.3f} {text}")

    def dispatch(self, node: PlanNode, now: Optional[float] = None) -> bool:
        """Start ``node``'s action; False if its preconditions fail in the world."""
        now = self.world.clock if now is None else now
        action = node.action
        if node.kind not in (NodeKind.ACTION_START, NodeKind.INSTANTANEOUS):
            raise ValueError(f"cannot dispatch {node.kind.value} node {node.id}")
        if not self.world.holds(node.condition()):
            self._log(now, f"reject {node.id} ({action.id})")
            return False
        k = self._occurrences.get(action.id, 0)
        self._occurrences[action.id] = k + 1
        rng = random.Random(f"{self.cfg.seed}:act:{action.id}:{k}")
        fails = rng.random() < self.cfg.action_failure_prob
        lo, hi = self.cfg.duration_noise
        noise = rng.uniform(lo, hi) if hi > lo else lo
        if isinstance(action, DurativeAction):
            duration = max(node.prescribed_duration * noise, 1e-6)
            undo = self._apply(action.start_effect)
            self.world.running[node.id] = Running(action, node.id, now, now + duration, fails, undo)
            self._push(now + duration, 0, node.id)
            self._check_invariants()
        else:
            if not fails:
                self._apply(action.effect)
            self._push(now, 0, ActionCompleted(now, action.id, node.id, not fails))
        self._log(now, f"dispatch {node.id} ({action.id})")
        return True

    def _apply(self, effect) -> dict:
        undo = {}
        for p, psi in effect.propositional.items():
            undo[p] = p in self.world.true
            if psi >= 0.5:
                self.world.true.add(p)
            else:
                self.world.true.discard(p)
        for f, op, expr in effect.numeric:
            undo.setdefault(("#", f), self.world.numerics[f])
            v = evaluate(expr, self.world.numerics)
            cur = self.world.numerics[f]
            self.world.numerics[f] = v if op == "assign" else cur + v if op == "increase" else cur - v
        return undo

    def _revert(self, undo):
        for key, old in undo.items():
            if isinstance(key, tuple):
                self.world.numerics[key[1]] = old
            elif old:
                self.world.true.add(key)
            else:
                self.world.true.discard(key)

    def _check_invariants(self):
        for run in self.world.running.values():
            if not run.fails and not self.world.holds(run.action.over_all):
                run.fails = True

    def next_completion(self) -> Optional[float]:
        times = [r.finish for r in self.world.running.values()]
        return min(times) if times else None

    def step(self, until: float) -> list:
        """Advance the world to ``until`` and return the events that happened."""
        if until < self.world.clock:
            raise ValueError("cannot step backwards")
        events = []
        period = self.cfg.report_period
        while True:
            t_heap = self._heap[0][0] if self._heap else math.inf
            t_obs = self._last_report + period if period > 0 else math.inf
            t = min(t_heap, t_obs)
            if t > until:
                break
            self.world.clock = max(self.world.clock, t)
            if t_obs <= t_heap:
                self._last_report = t_obs
                events.append(self.observe(t_obs))
                continue
            _, _, _, payload = heapq.heappop(self._heap)
            if isinstance(payload, str):
                events.append(self._complete(payload))
            elif isinstance(payload, ActionCompleted):
                self._log(payload.time, f"{'done' if payload.success else 'fail'} {payload.node} ({payload.action})")
                events.append(payload)
            elif isinstance(payload, ExogenousFlip):
                self._set(payload.proposition, payload.value)
                self._log(t, f"flip ({payload.proposition}) -> {payload.value}")
                self._schedule_flip(payload.proposition, t)
                events.append(payload)
            else:
                self._set(payload.proposition, payload.value)
                self._log(t, f"til ({payload.proposition}) -> {payload.value}")
                events.append(payload)
        self.world.clock = until
        return events

    def _set(self, p, value):
        if value:
            self.world.true.add(p)
        else:
            self.world.true.discard(p)
        self._check_invariants()

    def _complete(self, node_id) -> ActionCompleted:
        run = self.world.running.pop(node_id)
        t = run.finish
        ok = not run.fails and self.world.holds(run.action.at_end)
        if ok:
            self._apply(run.action.end_effect)
            self._check_invariants()
        else:
            self._revert(run.undo)
        self._log(t, f"{'done' if ok else 'fail'} {node_id} ({run.action.id})")
        return ActionCompleted(t, run.action.id, node_id, ok)

    def observe(self, time: Optional[float] = None) -> Observation:
        time = self.world.clock if time is None else time
        return Observation(time, tuple((p, p in self.world.true) for p in self.visible))

    def snapshot(self) -> tuple:
        """Crisp copy of the full ground truth, used when replanning."""
        return frozenset(self.world.true), dict(self.world.numerics)

    def goal_reached(self) -> bool:
        return self.world.holds(self.problem.goal)


def estimate(belief: FuzzyState, obs: Observation, cfg: WorldConfig, elapsed: float = 0.0,
             confidence: Optional[float] = None) -> FuzzyState:
    """Fold an observation into the belief; unobserved facts decay toward 0.5."""
    conf = cfg.confidence if confidence is None else confidence
    seen = dict(obs.pairs)
    rho = dict(belief.rho)
    if cfg.decay > 0 and elapsed > 0:
        keep = (1.0 - cfg.decay) ** elapsed
        for p, r in rho.items():
            if p not in seen:
                rho[p] = 0.5 + (r - 0.5) * keep
    for p, value in seen.items():
        rho[p] = conf if value else 1.0 - conf
    numerics = dict(belief.numerics)
    numerics.update(dict(obs.numerics))
    return FuzzyState(rho, numerics, belief.executing)
