import pytest

from adaptplan.harness.domain import running_example
from adaptplan.model import Condition, DurativeAction, Effect, InstantaneousAction, PlanningProblem
from adaptplan.plan_graph import build_plan_network, relax


def lits(*names):
    """``lits("p", "-q")`` -> literals p and not q."""
    return frozenset((n.lstrip("-"), not n.startswith("-")) for n in names)


def cond(*names):
    return Condition(lits(*names))


def eff(*names):
    return Effect({n.lstrip("-"): 0.0 if n.startswith("-") else 1.0 for n in names})


def instant(name, pre=(), effects=()):
    return InstantaneousAction(name, cond(*pre), eff(*effects))


def durative(name, start=(), over=(), end=(), start_eff=(), end_eff=(), duration=(1.0, 1.0)):
    return DurativeAction(name, cond(*start), cond(*over), cond(*end), eff(*start_eff), eff(*end_eff), duration)


def problem(props, actions, init=(), goal=(), tils=()):
    return PlanningProblem(frozenset(props), frozenset(), {a.id: a for a in actions},
                           frozenset(init), {}, cond(*goal), tuple(tils))


@pytest.fixture(scope="session")
def example():
    return running_example()


@pytest.fixture(scope="session")
def example_net(example):
    return build_plan_network(example[1], example[0])


@pytest.fixture(scope="session")
def example_relaxed(example_net):
    return relax(example_net)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance")
    for number in sorted(mod.RESULTS):
        title, status, detail = mod.RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {title}" + (f"  [{detail}]" if detail else ""))
