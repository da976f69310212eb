"""CLI tests: file outputs, manifests, reproducibility, exit codes."""
from __future__ import annotations

import csv
import json

import pytest
from fastapi.testclient import TestClient

from rooneybench.cli import main
from rooneybench.montecarlo import BoundComparison, BoundComparisonRow
from rooneybench.core import ModelConfig
from rooneybench.service import ExperimentParams, SessionStore, create_app
from botlib import run_bot_session


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_simulate_writes_trajectory_and_manifest(tmp_path):
    out = tmp_path / "run"
    code = main([
        "simulate", "--out", str(out), "--n", "40", "--k", "5", "--ell", "1",
        "--horizon", "25", "--seed", "3",
    ])
    assert code == 0
    rows = _read_csv(out / "trajectory.csv")
    assert rows[0] == ["t", "beta", "a_before", "a_after", "delta", "U", "U_obs",
                       "U_X", "U_Y", "num_x_selected"]
    assert len(rows) == 26
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert manifest["config"]["n"] == 40
    assert manifest["root_seed"] == 3
    assert manifest["outputs"] == ["trajectory.csv"]


def test_simulate_reproducible_byte_identical(tmp_path):
    args = ["simulate", "--n", "30", "--k", "4", "--ell", "1", "--horizon", "10",
            "--seed", "9"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert a == b


def test_missing_config_file_exits_nonzero(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--config", str(tmp_path / "nope.json")])
    assert exc.value.code == 2
    assert "not found" in capsys.readouterr().err


def test_invalid_override_reports_field(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["simulate", "--out", str(tmp_path), "--ell", "7", "--k", "5"])
    err = capsys.readouterr().err
    assert "ell" in err


def test_config_file_with_flag_override(tmp_path):
    config = {"n": 30, "k": 4, "ell": 1, "rho": 0.5, "a1": 2.0, "b": 2.0,
              "horizon": 5, "seed": 1,
              "utility_dist": {"kind": "uniform", "lo": 0.0, "hi": 10.0}}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    out = tmp_path / "out"
    main(["simulate", "--config", str(path), "--out", str(out), "--horizon", "7"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["horizon"] == 7  # flag wins
    assert manifest["config"]["utility_dist"]["hi"] == 10.0
    assert len(_read_csv(out / "trajectory.csv")) == 8


def test_rooney_improves_final_evidence_across_seeds(tmp_path):
    # Batch comparison: same seed with ell=0 vs ell=1; the constrained run
    # should end with at least as much evidence in a clear majority of seeds.
    wins = 0
    seeds = 60
    for seed in range(seeds):
        final_a = {}
        for ell in (0, 1):
            out = tmp_path / f"s{seed}_ell{ell}"
            main(["simulate", "--out", str(out), "--n", "50", "--k", "5",
                  "--ell", str(ell), "--horizon", "25", "--seed", str(seed)])
            rows = _read_csv(out / "trajectory.csv")
            final_a[ell] = float(rows[-1][3])
        if final_a[1] >= final_a[0]:
            wins += 1
    assert wins / seeds >= 0.8


def test_sweep_csv(tmp_path):
    out = tmp_path / "sweep"
    code = main([
        "sweep", "--out", str(out), "--n", "24", "--k", "4", "--horizon", "6",
        "--axis", "ell", "--values", "1,2", "--replicates", "30", "--seed", "4",
    ])
    assert code == 0
    rows = _read_csv(out / "sweep.csv")
    assert rows[0] == ["axis", "value", "t", "mean_beta", "ci", "replicates"]
    assert len(rows) == 1 + 2 * 6
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["sweep"]["axis"] == "ell"


def test_verify_bounds_success_exit_zero(tmp_path):
    out = tmp_path / "bounds"
    code = main([
        "verify-bounds", "--out", str(out), "--n", "30", "--k", "5", "--ell", "1",
        "--horizon", "8", "--replicates", "60", "--seed", "6",
    ])
    assert code == 0
    rows = _read_csv(out / "bounds.csv")
    assert rows[0] == ["t", "mean_beta", "ci", "bound_lower", "bound_upper",
                       "satisfied", "vacuous", "n0_ok"]
    assert all(row[5] == "true" for row in rows[1:])


def test_violations_detected_in_comparison():
    config = ModelConfig(n=20, k=4, ell=1, rho=0.5, a1=2.0, b=2.0)
    comparison = BoundComparison(config=config)
    comparison.rows.append(BoundComparisonRow(
        t=1, mean_beta=0.2, ci_halfwidth=0.01, bound_lower=0.5,
        bound_upper=None, vacuous=False, n0_ok=None, satisfied=False,
    ))
    comparison.rows.append(BoundComparisonRow(
        t=2, mean_beta=0.2, ci_halfwidth=0.01, bound_lower=None,
        bound_upper=1.4, vacuous=True, n0_ok=True, satisfied=True,
    ))
    assert len(comparison.violations()) == 1
    assert comparison.violations()[0].t == 1


def test_probe_asymptotic_csv(tmp_path):
    out = tmp_path / "probe"
    code = main([
        "probe-asymptotic", "--out", str(out), "--n", "20", "--k", "2",
        "--ell", "0", "--checkpoints", "5,50", "--replicates", "40", "--seed", "2",
    ])
    assert code == 0
    rows = _read_csv(out / "probe.csv")
    assert rows[0] == ["t", "mean_beta", "ci", "replicates"]
    assert [row[0] for row in rows[1:]] == ["5", "50"]


def test_analyze_emits_tables(tmp_path):
    params = ExperimentParams(total_rounds=20)
    store = SessionStore(service_seed=88, params=params)
    summaries = []
    with TestClient(create_app(store)) as client:
        for i in range(4):
            summaries.append(
                run_bot_session(client, "rooney", num_blue=lambda t: 2 + t % 2)
            )
        for i in range(4):
            summaries.append(
                run_bot_session(client, "control", num_blue=lambda t: t % 2)
            )
    sessions_path = tmp_path / "sessions.jsonl"
    with open(sessions_path, "w") as fh:
        for s in summaries:
            fh.write(json.dumps(s) + "\n")
    out = tmp_path / "analysis"
    code = main(["analyze", "--sessions", str(sessions_path), "--out", str(out),
                 "--late-window", "15"])
    assert code == 0
    metrics = _read_csv(out / "metrics.csv")
    assert metrics[0] == ["condition", "pooling", "metric", "mean", "sd", "n"]
    conditions = {row[0] for row in metrics[1:]}
    assert conditions == {"rooney", "control"}
    report = json.loads((out / "report.json").read_text())
    assert "num_blue_over_required" in report["tests"]
    tests_rows = _read_csv(out / "tests.csv")
    assert len(tests_rows) >= 2


def test_analyze_without_sessions_fails(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    code = main(["analyze", "--sessions", str(empty), "--out", str(tmp_path / "o")])
    assert code == 2
