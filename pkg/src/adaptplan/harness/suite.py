"""Benchmark suite, CSV report, and the extraction scaling sweep."""
from __future__ import annotations

import csv
import io
import json
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..extractor import generate_plans
from ..plan_graph import build_plan_network, relax
from ..simulator import WorldConfig
from .benchmark import BenchmarkSpec, load_instance
from .episode import run_episode
from .planners import make_planner

CSV_COLUMNS = ("instance_id", "mode", "seed", "success", "replans", "actions",
               "extract_ms_total", "extract_ms_max", "orderings_max")

EXOGENOUS_HELP = WorldConfig(
    exogenous=(("machine_on *", 0.02, 1.0),),
    visible=("machine_on *",),
    report_period=1.0,
)


@dataclass(frozen=True)
class SuiteConfig:
    instances: int = 30
    deadline_instances: int = 9
    repetitions: int = 10
    modes: tuple = ("RO", "RP")
    robots: int = 3
    deadline_factor: float = 1.5
    base_seed: int = 0
    planner: str = "greedy"
    planner_command: tuple = ()
    timings: bool = False
    workers: int = 1
    world: dict = field(default_factory=lambda: json.loads(EXOGENOUS_HELP.to_json()))

    @classmethod
    def from_json(cls, text: str) -> "SuiteConfig":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown suite config keys {sorted(unknown)}")
        for key in ("modes", "planner_command"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def world_config(self) -> WorldConfig:
        return WorldConfig.from_json(json.dumps(self.world))

    def specs(self) -> list:
        """Instance specs: the deadline-free set, then the first few again with deadlines."""
        base = [
            BenchmarkSpec(robots=self.robots, machines=3 + i % 3, delivery_locations=4 + i % 5,
                          orders=2 + i % 2, seed=self.base_seed + i)
            for i in range(self.instances)
        ]
        dl = [BenchmarkSpec(**{**asdict(s), "deadline_factor": self.deadline_factor})
              for s in base[: self.deadline_instances]]
        return base + dl


def _job(args):
    cfg, spec, mode, seed = args
    problem = load_instance(spec)
    planner = make_planner(cfg.planner, command=cfg.planner_command or None)
    m = run_episode(mode, problem, planner, cfg.world_config(), seed, instance_id=spec.instance_id)
    ms = (lambda s: f"{1000 * s:.3f}") if cfg.timings else (lambda s: "0")
    return {
        "instance_id": spec.instance_id,
        "mode": mode,
        "seed": str(seed),
        "success": str(int(m.success)),
        "replans": str(m.replans),
        "actions": str(m.actions_executed),
        "extract_ms_total": ms(m.extraction_time_total),
        "extract_ms_max": ms(m.extraction_time_max),
        "orderings_max": str(m.orderings_max),
    }


def run_rows(cfg: SuiteConfig) -> list:
    jobs = [(cfg, spec, mode, cfg.base_seed + rep)
            for spec in cfg.specs() for rep in range(cfg.repetitions) for mode in cfg.modes]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            return list(pool.map(_job, jobs, chunksize=4))
    return [_job(j) for j in jobs]


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def summarize(rows) -> dict:
    """Per (mode, deadline) group: episodes, coverage, mean replans and actions."""
    groups = {}
    for r in rows:
        key = (r["mode"], "deadline" if r["instance_id"].endswith("-dl") else "no-deadline")
        groups.setdefault(key, []).append(r)
    out = {}
    for (mode, kind), rs in sorted(groups.items()):
        out[f"{mode}/{kind}"] = {
            "episodes": len(rs),
            "coverage": statistics.fmean(int(r["success"]) for r in rs),
            "replans": statistics.fmean(int(r["replans"]) for r in rs),
            "actions": statistics.fmean(int(r["actions"]) for r in rs),
        }
    return out


def format_summary(summary: dict) -> str:
    lines = ["# deadlines use the built-in greedy planner's makespan as the reference duration",
             f"{'group':<22} {'episodes':>8} {'coverage':>9} {'replans':>8} {'actions':>8}"]
    for key, s in summary.items():
        lines.append(f"{key:<22} {s['episodes']:>8} {s['coverage']:>9.3f} {s['replans']:>8.3f} {s['actions']:>8.3f}")
    return "\n".join(lines) + "\n"


def run_suite(cfg: SuiteConfig, out_dir=None) -> tuple:
    """Run every instance x repetition x mode; returns ``(csv text, summary)``."""
    rows = run_rows(cfg)
    text = rows_to_csv(rows)
    summary = summarize(rows)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "episodes.csv").write_text(text)
        (out / "summary.txt").write_text(format_summary(summary))
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return text, summary


def read_rows(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))


@dataclass(frozen=True)
class ScalingPoint:
    instance_id: str
    belief: str
    nodes: int
    orderings: int
    prefixes: int
    seconds: float


def scaling_sweep(max_orders: int = 10, seeds: int = 16, max_nodes: int = 128,
                  fuzzy: bool = True, base_seed: int = 0) -> list:
    """Time one extraction per generated plan, growing the number of orders.

    Two robots and one machine; orders (and delivery locations) grow so the
    plan network reaches ``max_nodes``.  With ``fuzzy`` each plan is also
    extracted from a belief where the machine's state is a coin flip, which
    opens skip branches.
    """
    points = []
    for orders in range(1, max_orders + 1):
        for s in range(seeds):
            spec = BenchmarkSpec(robots=2, machines=1, delivery_locations=orders, orders=orders,
                                 seed=base_seed + s)
            problem = load_instance(spec)
            net = relax(build_plan_network(make_planner("greedy").plan(problem), problem))
            if len(net.nodes) > max_nodes:
                continue
            beliefs = [("crisp", problem.initial_state())]
            if fuzzy:
                beliefs.append(("fuzzy", problem.initial_state().with_rho({"machine_on m0": 0.5})))
            for label, belief in beliefs:
                stats = {}
                t0 = time.perf_counter()
                results = generate_plans(belief, net, stats=stats)
                points.append(ScalingPoint(spec.instance_id, label, len(net.nodes), len(results),
                                           stats["prefixes"], time.perf_counter() - t0))
    return points


def scaling_csv(points) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance_id", "belief", "nodes", "orderings", "prefixes", "seconds"])
    for p in points:
        writer.writerow([p.instance_id, p.belief, p.nodes, p.orderings, p.prefixes, f"{p.seconds:.4f}"])
    return buf.getvalue()


def scaling_report(points) -> str:
    worst = max(points, key=lambda p: p.seconds)
    return (f"{len(points)} extraction calls, nodes {min(p.nodes for p in points)}-"
            f"{max(p.nodes for p in points)}, slowest {worst.seconds:.3f} s "
            f"({worst.nodes} nodes, {worst.orderings} orderings)\n")
