"""
Re-ordering versus replanning on Robot Delivery
===============================================

A reduced version of the paired experiment: a handful of generated
instances, each run with the same world seeds under both executors, with
machines occasionally switched on by someone else.  Then a short extraction
timing sweep.
"""

from adaptplan.harness.suite import SuiteConfig, format_summary, run_rows, scaling_report, scaling_sweep, summarize

cfg = SuiteConfig(instances=6, deadline_instances=3, repetitions=3)
rows = run_rows(cfg)
print(format_summary(summarize(rows)))

# %%
# Paired view: how often did each executor need fewer replans?
pairs = {}
for r in rows:
    pairs.setdefault((r["instance_id"], r["seed"]), {})[r["mode"]] = int(r["replans"])
ro_wins = sum(p["RO"] < p["RP"] for p in pairs.values())
rp_wins = sum(p["RO"] > p["RP"] for p in pairs.values())
print(f"fewer replans: RO {ro_wins}, RP {rp_wins}, ties {len(pairs) - ro_wins - rp_wins}")

# %%
# Extraction time as plans grow (one seed per size keeps this quick).
points = scaling_sweep(max_orders=8, seeds=1)
for p in points:
    print(f"{p.nodes:4d} nodes  {p.belief:5s}  {p.orderings:5d} orderings  {p.seconds:7.3f} s")
print(scaling_report(points))
