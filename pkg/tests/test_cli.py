import json
import math
import subprocess
import sys

import pytest

from remsim.cli import main

DYADIC = """
actors:
  count: 6
covariates:
  actor: actors.csv
model:
  effects:
    - kind: baseline
      param: -1.5
    - kind: difference
      variable: dept
      param: -0.5
    - kind: inertia
      scaling: std
      param: 0.2
stop:
  max_time: 30
seed: 11
reps: 2
observed: observed.csv
gof:
  replicates: 5
  beta: model
  indices:
    - kind: outdegree_dist
    - kind: pshift_census
intervention:
  effect_index: 1
  start: 10
  durations: [5]
  strengths: [0.0, 0.5]
  strategies: [all, {strategy: random, fraction: 0.3}]
  bin_width: 5
  outcome_variable: dept
"""

ACTOR = """
actors:
  count: 6
covariates:
  actor: actors.csv
model:
  family: actor
  rate_effects:
    - kind: baseline
  choice_effects:
    - kind: distinct_choice
      variable: dept
      d_star: 0.5
      param: 1.0
stop:
  max_events: 40
seed: 5
"""

OBSERVED = "time,sender,receiver\n" + "".join(f"{0.7 * (k + 1):g},{k % 6},{(k + 1 + k // 6) % 6}\n" for k in range(30))


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "actors.csv").write_text("id,time,dept\n" + "".join(f"{i},0,{i % 2}\n" for i in range(6)))
    (tmp_path / "observed.csv").write_text(OBSERVED)
    (tmp_path / "dyadic.yaml").write_text(DYADIC)
    (tmp_path / "actor.yaml").write_text(ACTOR)
    return tmp_path


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


@pytest.mark.parametrize("command,config", [
    ("simulate", "dyadic.yaml"), ("simulate-actor", "actor.yaml"), ("estimate", "dyadic.yaml"),
    ("gof", "dyadic.yaml"), ("intervene", "dyadic.yaml"),
])
def test_rerun_is_byte_identical(workdir, capsys, command, config):
    runs = []
    for k in range(2):
        out = workdir / f"run{k}"
        assert main([command, "--config", str(workdir / config), "--seed", "7", "--out", str(out), "--quiet"]) == 0
        runs.append((outputs(out), capsys.readouterr().out))
    assert runs[0] == runs[1]
    assert runs[0][0]


def test_simulate_seed_override_and_files(workdir):
    out = workdir / "o"
    assert main(["simulate", "--config", str(workdir / "dyadic.yaml"), "--seed", "7", "--reps", "3",
                 "--out", str(out), "--quiet"]) == 0
    meta = json.loads((out / "simulate.json").read_text())
    assert [r["seed"] for r in meta["replicates"]] == [7, 6, 5]
    assert sorted(outputs(out)) == ["events_0000.csv", "events_0001.csv", "events_0002.csv", "simulate.json"]
    other = workdir / "p"
    main(["simulate", "--config", str(workdir / "dyadic.yaml"), "--seed", "8", "--out", str(other), "--quiet"])
    assert (other / "events_0000.csv").read_bytes() != (out / "events_0000.csv").read_bytes()


def test_estimate_baseline_closed_form(workdir, capsys):
    cfg = workdir / "base.yaml"
    cfg.write_text("actors:\n  count: 6\nmodel:\n  effects:\n    - kind: baseline\nobserved: observed.csv\n")
    assert main(["estimate", "--config", str(cfg), "--out", str(workdir / "e")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) >= {"beta_hat", "std_errors", "loglik", "converged"}
    assert doc["beta_hat"][0] == pytest.approx(math.log(30 / (30 * 21.0)), abs=1e-8)


def test_gof_replicate_rows(workdir):
    out = workdir / "g"
    assert main(["gof", "--config", str(workdir / "dyadic.yaml"), "--reps", "100", "--out", str(out), "--quiet"]) == 0
    report = json.loads((out / "gof_report.json").read_text())
    assert report["n_replicates"] == 100
    for name in ("outdegree_dist", "pshift_census"):
        lines = (out / f"gof_{name}.csv").read_text().splitlines()
        assert lines[1].startswith("observed,")
        assert [ln.split(",")[0] for ln in lines[2:]] == [str(r) for r in range(100)]


def test_intervene_outputs(workdir):
    out = workdir / "i"
    assert main(["intervene", "--config", str(workdir / "dyadic.yaml"), "--reps", "2", "--out", str(out), "--quiet"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["cells"]) == 4 and summary["reps"] == 2
    assert (out / "sweep.csv").read_text().startswith("duration,strength,strategy,bin_start")


def test_exit_codes_and_stderr(workdir, capsys):
    cfg = str(workdir / "dyadic.yaml")
    assert main(["simulate"]) == 1
    assert main(["bogus", "--config", cfg]) == 1
    assert main(["simulate", "--config", str(workdir / "none.yaml")]) == 1
    assert main(["simulate", "--config", cfg, "--reps", "0"]) == 1
    assert main(["simulate", "--config", cfg, "--seed", "-1"]) == 1
    assert main(["simulate", "--config", cfg, "--jobs", "0"]) == 1
    assert main(["simulate-actor", "--config", cfg]) == 1
    assert main(["gof", "--config", str(workdir / "actor.yaml")]) == 1
    captured = capsys.readouterr()
    assert captured.out == "" and "remsim:" in captured.err


def test_runtime_failure_exit_two(workdir, capsys):
    cfg = workdir / "empty.yaml"
    cfg.write_text("actors:\n  count: 3\nmodel:\n  effects:\n    - kind: baseline\n"
                   "riskset:\n  schedule:\n    - from_time: 0.000001\n      include: []\n"
                   "stop:\n  max_events: 50\n")
    out = workdir / "x"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 2
    assert "run failed" in capsys.readouterr().err
    assert not out.exists()


def test_bad_observed_file_is_validation_error(workdir, capsys):
    (workdir / "observed.csv").write_text("time,sender,receiver\n1,0,1\n1,1,0\n")
    assert main(["estimate", "--config", str(workdir / "dyadic.yaml"), "--out", str(workdir / "e")]) == 1
    assert "observed.csv:3" in capsys.readouterr().err
    assert not (workdir / "e").exists()


def test_console_entry_point(workdir):
    res = subprocess.run([sys.executable, "-m", "remsim.cli", "simulate-actor", "--config", str(workdir / "actor.yaml"),
                          "--out", str(workdir / "s")], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == ""
    assert "replicate 0" in res.stderr
