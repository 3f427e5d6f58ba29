"""
Re-ordering the running example
===============================

Two robots deliver an order: r1 is loaded at machine m0, which r0 has to
switch on first.  We relax the plan, list its valid orderings, and watch the
machine's state change which ordering wins.
"""

from adaptplan import build_plan_network, generate_plans, relax, select_next
from adaptplan.harness.domain import running_example
from adaptplan.plan_io import serialize_orderings

problem, plan = running_example()
print(plan.to_text())

# %%
# The relaxed network keeps durations and interference, nothing else.
net = relax(build_plan_network(plan, problem))
print(net.dump())

# %%
# From the crisp initial state every ordering is certain.
results = generate_plans(problem.initial_state(), net)
print(serialize_orderings(results))

# %%
# A coin flip on the machine: orderings that skip switch_on drop to 0.5.
fuzzy = problem.initial_state().with_rho({"machine_on m0": 0.5})
for r in generate_plans(fuzzy, net)[:5]:
    print(f"{r.q_total:.2f}", "skips" if r.skipped else "     ", " ".join(r.sequence))

# %%
# Once the machine is known to be on, the best ordering leaves switch_on out.
on = problem.initial_state().with_rho({"machine_on m0": 1.0})
decision = select_next(generate_plans(on, net), 0.0, net, on)
print(decision, "| skipped:", sorted(decision.chosen.skipped))
