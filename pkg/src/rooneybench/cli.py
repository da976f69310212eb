"""Command-line entry point: simulate, sweep, verify-bounds,
probe-asymptotic, analyze, and serve.

Every run writes its outputs plus a manifest recording the resolved
configuration; rerunning from the same manifest reproduces the CSV outputs
byte-identically (numeric fields are formatted at 12 significant digits).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from typing import List, Optional

from . import __version__
from .analysis import ExperimentSession, session_report
from .core import ConfigurationError, ModelConfig, UpdateRuleSpec, UtilityDistribution
from .dynamics import run_trajectory
from .montecarlo import compare_bounds, long_horizon_probe, sweep

log = logging.getLogger("rooneybench")

_MODEL_FIELDS = ("n", "k", "ell", "rho", "a1", "b", "horizon", "seed")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _write_csv(path: str, header: List[str], rows: List[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _utility_dist_from(data: dict) -> UtilityDistribution:
    kind = data.get("kind", "uniform")
    if kind == "uniform":
        return UtilityDistribution.uniform(data.get("lo", 0.0), data.get("hi", 1.0))
    if kind == "truncated-normal":
        return UtilityDistribution.truncated_normal(
            data["location"], data["scale"], data.get("lo", 0.0), data.get("hi", 1.0)
        )
    if kind == "truncated-powerlaw":
        return UtilityDistribution.truncated_powerlaw(
            data["exponent"], data.get("lo", 0.0), data.get("hi", 1.0)
        )
    raise ConfigurationError(f"config.utility_dist.kind: unknown kind {kind!r}")


def _update_rule_from(data: dict) -> UpdateRuleSpec:
    kind = data.get("kind", "ratio")
    if kind == "ratio":
        return UpdateRuleSpec.ratio()
    if kind == "affine":
        return UpdateRuleSpec.affine(data["c"])
    if kind == "power":
        return UpdateRuleSpec.power(data["gamma"])
    raise ConfigurationError(f"config.update_rule.kind: unknown kind {kind!r}")


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        print(f"error: config file not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _resolve_model(config: dict, args: argparse.Namespace) -> ModelConfig:
    """Config-file values overridden by any explicitly passed flags."""
    merged = {
        "n": 100, "k": 10, "ell": 1, "rho": 0.5, "a1": 2.0, "b": 2.0,
        "horizon": 25, "seed": 0,
    }
    merged.update({k: v for k, v in config.items() if k in _MODEL_FIELDS})
    for name in _MODEL_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    try:
        return ModelConfig(
            utility_dist=_utility_dist_from(config.get("utility_dist", {})),
            update_rule=_update_rule_from(config.get("update_rule", {})),
            **merged,
        )
    except (ConfigurationError, KeyError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _model_snapshot(config: ModelConfig) -> dict:
    snap = {name: getattr(config, name) for name in _MODEL_FIELDS}
    snap["utility_dist"] = {
        k: v for k, v in asdict(config.utility_dist).items() if v is not None
    }
    snap["update_rule"] = {
        k: v for k, v in asdict(config.update_rule).items() if v is not None
    }
    return snap


def _write_manifest(
    out_dir: str, subcommand: str, config_snapshot: dict, seed: int,
    outputs: List[str], started: float,
) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config_snapshot,
        "root_seed": seed,
        "outputs": sorted(os.path.basename(p) for p in outputs),
        "tool_version": __version__,
        "duration_seconds": round(time.time() - started, 3),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_out(args) -> str:
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    started = time.time()
    config = _resolve_model(_load_config(args.config), args)
    out_dir = _prepare_out(args)
    trajectory = run_trajectory(config)
    rows = [
        [r.t, r.beta, r.a_before, r.a_after, r.delta, r.u_latent, r.u_observed,
         r.u_x, r.u_y, r.num_x_selected]
        for r in trajectory.rounds
    ]
    path = os.path.join(out_dir, "trajectory.csv")
    _write_csv(
        path,
        ["t", "beta", "a_before", "a_after", "delta", "U", "U_obs", "U_X", "U_Y",
         "num_x_selected"],
        rows,
    )
    snapshot = _model_snapshot(config)
    if trajectory.warnings:
        snapshot["warnings"] = trajectory.warnings
    _write_manifest(out_dir, "simulate", snapshot, config.seed, [path], started)
    print(f"wrote {path} ({len(rows)} rounds)")
    return 0


def cmd_sweep(args) -> int:
    started = time.time()
    config = _resolve_model(_load_config(args.config), args)
    out_dir = _prepare_out(args)
    values = _parse_values(args.axis, args.values)
    result = sweep(config, args.axis, values, args.replicates,
                   parallelism=args.parallelism)
    rows = []
    for value, estimates in result.points:
        for est in estimates:
            rows.append([args.axis, value, est.t, est.mean_beta, est.ci_halfwidth,
                         est.replicates])
    path = os.path.join(out_dir, "sweep.csv")
    _write_csv(path, ["axis", "value", "t", "mean_beta", "ci", "replicates"], rows)
    snapshot = _model_snapshot(config)
    snapshot["sweep"] = {"axis": args.axis, "values": values,
                         "replicates": args.replicates}
    _write_manifest(out_dir, "sweep", snapshot, config.seed, [path], started)
    print(f"wrote {path}")
    return 0


def cmd_verify_bounds(args) -> int:
    started = time.time()
    config = _resolve_model(_load_config(args.config), args)
    out_dir = _prepare_out(args)
    comparison = compare_bounds(config, args.replicates, parallelism=args.parallelism)
    rows = [
        [r.t, r.mean_beta, r.ci_halfwidth, r.bound_lower, r.bound_upper,
         r.satisfied, r.vacuous, r.n0_ok]
        for r in comparison.rows
    ]
    path = os.path.join(out_dir, "bounds.csv")
    _write_csv(
        path,
        ["t", "mean_beta", "ci", "bound_lower", "bound_upper", "satisfied",
         "vacuous", "n0_ok"],
        rows,
    )
    snapshot = _model_snapshot(config)
    snapshot["replicates"] = args.replicates
    _write_manifest(out_dir, "verify-bounds", snapshot, config.seed, [path], started)
    violations = comparison.violations()
    if violations:
        for row in violations:
            print(f"VIOLATION at t={row.t}: mean={row.mean_beta:.6f} "
                  f"ci={row.ci_halfwidth:.6f} "
                  f"bound={(row.bound_lower if config.ell else row.bound_upper):.6f}")
        return 1
    print(f"wrote {path}; all bounds satisfied")
    return 0


def cmd_probe_asymptotic(args) -> int:
    started = time.time()
    config = _resolve_model(_load_config(args.config), args)
    out_dir = _prepare_out(args)
    checkpoints = [int(v) for v in args.checkpoints.split(",") if v]
    result = long_horizon_probe(config, args.replicates, checkpoints,
                                parallelism=args.parallelism)
    rows = [
        [est.t, est.mean_beta, est.ci_halfwidth, est.replicates]
        for est in result.checkpoints
    ]
    path = os.path.join(out_dir, "probe.csv")
    _write_csv(path, ["t", "mean_beta", "ci", "replicates"], rows)
    snapshot = _model_snapshot(config)
    snapshot["probe"] = {"checkpoints": checkpoints, "replicates": args.replicates,
                         "increasing_fraction": result.increasing_fraction}
    _write_manifest(out_dir, "probe-asymptotic", snapshot, config.seed, [path], started)
    print(f"wrote {path}; increasing fraction {result.increasing_fraction:.3f}")
    return 0


def _load_sessions(paths: List[str]) -> List[ExperimentSession]:
    sessions = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            text = fh.read().strip()
        if not text:
            continue
        if text.startswith("["):
            payloads = json.loads(text)
        else:
            payloads = [json.loads(line) for line in text.splitlines() if line.strip()]
        if isinstance(payloads, dict):
            payloads = [payloads]
        sessions.extend(ExperimentSession.from_summary(p) for p in payloads)
    return sessions


def cmd_analyze(args) -> int:
    started = time.time()
    out_dir = _prepare_out(args)
    sessions = _load_sessions(args.sessions)
    if not sessions:
        print("error: no sessions found in the given files", file=sys.stderr)
        return 2
    report = session_report(sessions, late_window=args.late_window)

    metrics_rows = []
    for condition, group in report["groups"].items():
        for pooling in ("pooled", "by_participant"):
            for metric, stats in group[pooling].items():
                metrics_rows.append([
                    condition, pooling, metric,
                    stats["mean"], stats["sd"], stats["n"],
                ])
    metrics_path = os.path.join(out_dir, "metrics.csv")
    _write_csv(metrics_path, ["condition", "pooling", "metric", "mean", "sd", "n"],
               metrics_rows)

    tests_rows = [
        [metric, t["statistic"], t["degrees_of_freedom"], t["p_value"],
         t["means"][0], t["means"][1], t["sds"][0], t["sds"][1]]
        for metric, t in report["tests"].items()
    ]
    tests_path = os.path.join(out_dir, "tests.csv")
    _write_csv(
        tests_path,
        ["metric", "t_statistic", "df", "p_value", "mean_rooney", "mean_control",
         "sd_rooney", "sd_control"],
        tests_rows,
    )

    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")

    _write_manifest(
        out_dir, "analyze",
        {"sessions": sorted(os.path.basename(p) for p in args.sessions),
         "late_window": args.late_window},
        0, [metrics_path, tests_path, report_path], started,
    )
    _print_report(report)
    return 0


def _print_report(report: dict) -> None:
    print(f"late window: last {report['late_window']} rounds")
    for condition, group in report["groups"].items():
        print(f"\n[{condition}] sessions={group['sessions']}")
        for metric, stats in group["pooled"].items():
            print(f"  {metric:28s} mean={stats['mean']:.4f} sd={stats['sd']:.4f} "
                  f"(pooled n={stats['n']})")
        trend = group.get("latent_fraction_trend")
        if trend:
            print(f"  per-iteration trend: slope={trend['slope']:.5f} "
                  f"(p={trend['slope_p']:.4g})")
    for metric, test in report["tests"].items():
        print(f"\nWelch test [{metric}]: t={test['statistic']:.3f} "
              f"df={test['degrees_of_freedom']:.1f} p={test['p_value']:.4g}")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ExperimentParams, SessionStore, create_app

    config = _load_config(args.config)
    params_data = config.get("params", {})
    params = ExperimentParams(**params_data)
    store = SessionStore(
        service_seed=args.seed if args.seed is not None else config.get("seed", 0),
        params=params,
        log_path=args.log_path or config.get("log_path"),
    )
    app = create_app(store, static_dir=args.static_dir or config.get("static_dir"))
    port = args.port or config.get("port", 8000)
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return 0


def _parse_values(axis: str, raw: str) -> list:
    parts = [p for p in raw.split(",") if p]
    if axis in ("n", "k", "ell"):
        return [int(p) for p in parts]
    return [float(p) for p in parts]


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", help="output directory", default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--k", type=int, default=None)
    parser.add_argument("--ell", type=int, default=None)
    parser.add_argument("--rho", type=float, default=None)
    parser.add_argument("--a1", type=float, default=None)
    parser.add_argument("--b", type=float, default=None)
    parser.add_argument("--horizon", type=int, default=None)
    parser.add_argument("--replicates", type=int, default=500)
    parser.add_argument("--parallelism", type=int, default=1)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("ROONEYBENCH_LOG", "WARNING").upper())
    parser = argparse.ArgumentParser(
        prog="rooneybench",
        description="Constrained-selection bias dynamics workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory, write CSV")
    _add_model_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="estimate E[beta^t] along one parameter axis")
    _add_model_flags(p)
    p.add_argument("--axis", required=True, choices=["n", "k", "ell", "rho", "a1", "b"])
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-bounds", help="compare MC estimates to theorem bounds")
    _add_model_flags(p)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("probe-asymptotic", help="long-horizon E[beta^t] checkpoints")
    _add_model_flags(p)
    p.add_argument("--checkpoints", default="100,1000,10000",
                   help="comma-separated 1-based rounds")
    p.set_defaults(func=cmd_probe_asymptotic)

    p = sub.add_parser("analyze", help="session metrics, Welch tests, trends")
    p.add_argument("--sessions", nargs="+", required=True,
                   help="session summary JSON/JSONL files")
    p.add_argument("--late-window", type=int, default=15)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="run the experiment service")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--log-path", default=None)
    p.add_argument("--static-dir", default=None)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
