import json
import subprocess
import sys

import pytest

from adaptplan.cli import main
from adaptplan.harness.domain import RUNNING_EXAMPLE_PLAN, RUNNING_EXAMPLE_PROBLEM, ROBOT_DELIVERY_DOMAIN


def parse_orderings(text):
    """``[(q, sequence), ...]`` from ``Q=<q> : <nodes>`` lines."""
    out = []
    for line in text.splitlines():
        q, _, seq = line.partition(" : ")
        out.append((float(q[2:]), tuple(seq.split())))
    return out


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, text in [("domain.pddl", ROBOT_DELIVERY_DOMAIN), ("problem.pddl", RUNNING_EXAMPLE_PROBLEM),
                       ("plan.txt", RUNNING_EXAMPLE_PLAN)]:
        paths[name] = tmp_path / name
        paths[name].write_text(text)
    return {k: str(v) for k, v in paths.items()}


def test_plan_prints_a_plan(files, capsys):
    assert main(["plan", files["domain.pddl"], files["problem.pddl"]]) == 0
    out = capsys.readouterr().out
    assert "(switch_on r1 m0)" in out and "(wait_unload r1 wp1)" in out


def test_extract_lists_orderings(files, capsys, tmp_path):
    assert main(["extract", files["domain.pddl"], files["problem.pddl"], files["plan.txt"]]) == 0
    results = parse_orderings(capsys.readouterr().out)
    assert results[0][0] == 1.0 and len(results) == 13
    state = tmp_path / "state.json"
    state.write_text(json.dumps({"machine_on m0": 1.0}))
    assert main(["extract", files["domain.pddl"], files["problem.pddl"], files["plan.txt"],
                 "--state", str(state), "--dump-network"]) == 0
    captured = capsys.readouterr()
    assert "n002.start" not in parse_orderings(captured.out)[0][1]
    assert captured.err.startswith("node plan_start")


def test_simulate_reports_metrics(files, capsys, tmp_path):
    cfg = tmp_path / "world.json"
    cfg.write_text('{"duration_noise": [1.0, 1.0]}')
    assert main(["simulate", files["domain.pddl"], files["problem.pddl"], "--plan", files["plan.txt"],
                 "--mode", "RP", "--seed", "3", "--config", str(cfg)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report == {"success": True, "replans": 0, "actions": 7, "extraction_calls": 0,
                      "orderings_max": 0, "end_time": 68.0}


def test_bench_writes_reports(capsys, tmp_path):
    cfg = tmp_path / "suite.json"
    cfg.write_text(json.dumps({"instances": 1, "deadline_instances": 0, "repetitions": 1}))
    out = tmp_path / "out"
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    assert "RO/no-deadline" in capsys.readouterr().out
    assert len((out / "episodes.csv").read_text().splitlines()) == 3


def test_scaling_writes_csv(capsys, tmp_path):
    out = tmp_path / "scaling.csv"
    assert main(["scaling", "--max-orders", "1", "--seeds", "1", "--crisp-only", "--out", str(out)]) == 0
    assert out.read_text().startswith("instance_id,belief,nodes")
    assert "1 extraction calls" in capsys.readouterr().err


def test_library_errors_exit_with_status_one(files, capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0.0: (load_at_machine r1 r0 m0) [15.0]")
    assert main(["extract", files["domain.pddl"], files["problem.pddl"], str(bad)]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "adaptplan", "plan", files["domain.pddl"], files["problem.pddl"]],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "(goto" in proc.stdout
