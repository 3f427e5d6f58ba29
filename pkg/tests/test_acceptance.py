"""End-to-end acceptance checks; a PASS/FAIL line per check is printed at the end of the run."""
import functools
import itertools
import random
import time

import pytest
from scipy.stats import binomtest

from adaptplan.cli import main
from adaptplan.dispatcher import DecisionKind, select_next
from adaptplan.extractor import OrderingResult, generate_plans
from adaptplan.harness.domain import RUNNING_EXAMPLE_PLAN, RUNNING_EXAMPLE_PROBLEM, ROBOT_DELIVERY_DOMAIN
from adaptplan.harness.episode import Episode
from adaptplan.harness.planners import FixturePlanner
from adaptplan.harness.suite import SuiteConfig, run_rows, scaling_sweep
from adaptplan.plan_graph import build_plan_network, relax
from adaptplan.plan_io import parse_domain_problem, parse_time_triggered_plan
from adaptplan.simulator import WorldConfig

import oracles
from test_extractor import ORIGINAL_ORDER, chain

RESULTS = {}


def criterion(number, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            RESULTS[number] = (title, "FAIL", "")
            detail = fn(*args, **kwargs)
            RESULTS[number] = (title, "PASS", detail or "")
        return run
    return wrap


@criterion(1, "running example reconstructs the original order with Q = 1 in < 1 s")
def test_running_example_reconstruction():
    t0 = time.perf_counter()
    problem = parse_domain_problem(ROBOT_DELIVERY_DOMAIN, RUNNING_EXAMPLE_PROBLEM)
    net = relax(build_plan_network(parse_time_triggered_plan(RUNNING_EXAMPLE_PLAN, problem), problem))
    results = generate_plans(problem.initial_state(), net)
    elapsed = time.perf_counter() - t0
    q = {r.sequence: r.q_total for r in results}
    assert len(ORIGINAL_ORDER) == 14 and q.get(ORIGINAL_ORDER) == 1.0
    assert elapsed < 1.0
    return f"{len(results)} orderings, {elapsed:.3f} s"


@criterion(2, "machine already on: switch_on skipped in the best ordering and in execution")
def test_skip_scenario(example, example_relaxed):
    problem, _ = example
    best = generate_plans(problem.initial_state().with_rho({"machine_on m0": 1.0}), example_relaxed)[0]
    switch = {"n002.start", "n002.end"}
    assert switch <= best.skipped and not switch & set(best.sequence)
    cfg = WorldConfig(duration_noise=(1.0, 1.0), visible=("machine_on *",), report_period=1.0, confidence=1.0)
    ep = Episode("RO", problem, FixturePlanner.for_problems([(problem, RUNNING_EXAMPLE_PLAN)]), cfg, seed=0)
    ep.sim.world.true.add("machine_on m0")
    m = ep.run()
    assert m.success and not any("switch_on" in line for line in ep.sim.trace)
    return f"{m.actions_executed} actions executed"


@criterion(3, "probability chain gives <0.5, [a0, a1]> with step probabilities (0.5, 1.0)")
def test_probability_chain():
    problem, net = chain()
    results = generate_plans(problem.initial_state().with_rho({"p0": 0.5}), net)
    r = next(r for r in results if r.sequence == ("n000", "n001"))
    assert abs(r.q_total - 0.5) <= 1e-12
    assert all(abs(a - b) <= 1e-12 for a, b in zip(r.step_probs, (0.5, 1.0))) and len(r.step_probs) == 2


@criterion(4, "policy example dispatches a")
def test_policy_example():
    results = [OrderingResult(0.5, ("a", "b", "c")), OrderingResult(0.3, ("b", "a", "c")),
               OrderingResult(0.3, ("b", "c"))]
    d = select_next(results, 0.0)
    assert d.kind is DecisionKind.DISPATCH and d.node == "a"


@criterion(5, "200 random plans match the brute-force oracle exactly in < 60 s")
def test_oracle_equivalence():
    rng = random.Random(20240501)
    t0 = time.perf_counter()
    total = 0
    for _ in range(200):
        problem, _, net = oracles.random_plan(rng, max_nodes=8)
        s0 = oracles.perturbed_state(rng, problem, (0.0, 1.0), flips=rng.randint(0, 2))
        ours = {r.sequence: r.q_total for r in generate_plans(s0, net)}
        assert ours == oracles.brute_force(s0, net)
        total += len(ours)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    return f"{total} orderings, {elapsed:.1f} s"


@criterion(6, "every extraction on generated plans up to 128 nodes takes < 10 s")
def test_extraction_scaling():
    points = scaling_sweep(max_orders=10, seeds=2, max_nodes=128)
    worst = max(points, key=lambda p: p.seconds)
    assert max(p.nodes for p in points) > 100
    assert worst.seconds < 10.0
    return f"{len(points)} calls up to {max(p.nodes for p in points)} nodes, slowest {worst.seconds:.2f} s"


@criterion(7, "RO replans less than RP and executes no more actions (paired sign test p < 0.05)")
def test_ro_vs_rp_direction():
    t0 = time.perf_counter()
    cfg = SuiteConfig(instances=30, deadline_instances=0, repetitions=10)
    rows = run_rows(cfg)
    by_key = {(r["instance_id"], r["seed"], r["mode"]): r for r in rows}
    pairs = [(int(by_key[k + ("RO",)]["replans"]), int(by_key[k + ("RP",)]["replans"]))
             for k in sorted({(r["instance_id"], r["seed"]) for r in rows})]
    assert len(pairs) == 300
    mean = lambda mode, col: sum(int(r[col]) for r in rows if r["mode"] == mode) / len(pairs)
    better = sum(ro < rp for ro, rp in pairs)
    worse = sum(ro > rp for ro, rp in pairs)
    p = binomtest(better, better + worse, 0.5, alternative="greater").pvalue
    elapsed = time.perf_counter() - t0
    assert mean("RO", "replans") < mean("RP", "replans")
    assert mean("RO", "actions") <= mean("RP", "actions")
    assert p < 0.05 and elapsed < 1800
    return (f"replans {mean('RO', 'replans'):.2f} vs {mean('RP', 'replans'):.2f}, actions "
            f"{mean('RO', 'actions'):.2f} vs {mean('RP', 'actions'):.2f}, sign test {better}:{worse} p={p:.2g}, "
            f"{elapsed:.0f} s")


@criterion(8, "two bench runs with the same config produce byte-identical CSV")
def test_bench_determinism(tmp_path, capsys):
    config = tmp_path / "suite.json"
    config.write_text('{"instances": 4, "deadline_instances": 2, "repetitions": 2, "base_seed": 11}')
    outs = []
    for run in ("a", "b"):
        assert main(["bench", "--config", str(config), "--out", str(tmp_path / run)]) == 0
        outs.append((tmp_path / run / "episodes.csv").read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]
    return f"{len(outs[0].splitlines()) - 1} rows"


@criterion(9, "1000 extraction results replay through the validator without violations")
def test_soundness_replay():
    rng = random.Random(7)
    checked = violations = 0
    for _ in itertools.count():
        if checked >= 1000:
            break
        problem, _, net = oracles.random_plan(rng, max_nodes=10)
        s0 = oracles.perturbed_state(rng, problem, (0.0, 1.0), flips=rng.randint(0, 3))
        for r in generate_plans(s0, net)[:20]:
            violations += bool(oracles.replay(s0, net, r))
            checked += 1
    assert violations == 0
    return f"{checked} results"
