"""Command-line entry point.

Subcommands: ``approx`` (phase-count sweep of the defect-distribution fit),
``solve`` (policy computation and artifact export), ``bench`` (five-policy
cost comparison), ``multi`` (the multi-task variant), and ``validate`` (the
structural property suite). Experiments come from ``--config`` (JSON) or a
built-in ``--preset``; outputs are CSV and JSON files under ``--out``.

Exit codes: 0 ok, 2 config error, 3 certificate failure under --strict,
4 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    ConfigError,
    load_config,
    run_approx,
    run_bench,
    run_multi,
    run_solve,
    run_validate,
    write_csv,
)
from .presets import PRESETS, preset_config
from .solvers import policy_to_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3
EXIT_VALIDATION = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="path to a JSON experiment config")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="built-in experiment")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--reps", type=int, help="override the replication count")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument(
        "--threads",
        type=int,
        default=0,
        help="worker threads, 0 = auto (computation is vectorized in-process; "
        "the flag is accepted for interface stability)",
    )
    parser.add_argument(
        "--strict",
        action="store_true",
        help="exit with code 3 when a structural certificate fails",
    )
    parser.add_argument(
        "--trace",
        type=int,
        default=0,
        metavar="N",
        help="also write a per-period trace of the solved policy on N replications",
    )


def _resolve_config(args) -> dict:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("give exactly one of --config or --preset")
    cfg = preset_config(args.preset) if args.preset else load_config(args.config)
    cfg = load_config(cfg)  # validates either source
    if args.seed is not None:
        cfg["seed"] = int(args.seed)
    if args.reps is not None:
        cfg["reps"] = int(args.reps)
    return cfg


def _cmd_approx(args) -> int:
    cfg = _resolve_config(args)
    rows, curve = run_approx(cfg)
    write_csv(args.out / "approx_sweep.csv", rows)
    write_csv(args.out / "approx_curve.csv", curve)
    for row in rows:
        print(f"m2={row['m2']:>3d}  lambda={row['lambda']:.4f}  sup_norm_error={row['sup_norm_error']:.4f}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    cfg = _resolve_config(args)
    policy, report = run_solve(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "policy.json").write_text(json.dumps(policy_to_json(policy)))
    (args.out / "solve_report.json").write_text(json.dumps(report, indent=2))
    print(f"solver: {report['solver']}")
    print(f"thresholds: {report['thresholds']}")
    print(f"certificates: {report['certificates']}")
    bad_cert = not report["certificates"]["hazard_block_monotone"] or not report["certificates"]["obs_tp2"]
    if bad_cert and args.strict:
        return EXIT_CERTIFICATE
    return EXIT_OK


def _cmd_bench(args, multi: bool = False) -> int:
    cfg = _resolve_config(args)
    rows, details = (run_multi if multi else run_bench)(cfg)
    name = "multi" if multi else "bench"
    write_csv(args.out / f"{name}.csv", rows)
    for kind, table in details.get("tuning_tables", {}).items():
        if table:
            write_csv(args.out / f"tuning_{kind}.csv", table)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "solve_report.json").write_text(json.dumps(details["report"], indent=2))
    width = max(len(r["policy"]) for r in rows)
    for row in rows:
        print(
            f"{row['policy']:<{width}}  cost={row['mean_cost']:>9.1f} ±{row['ci95']:.1f}"
            f"  success={row['success_prob']:.3f}  failure={row['failure_prob']:.3f}"
        )
    if multi:
        print(f"multi-task certificates: {details['certificate_multi']}")
    if args.trace > 0:
        from .experiments import build_cost, build_truth
        from .simulation import trace_rows

        cfg_full = cfg
        truth, cost = build_truth(cfg_full), build_cost(cfg_full)
        write_csv(
            args.out / f"{name}_trace.csv",
            trace_rows(details["policy"], truth, cost, args.trace, int(cfg_full.get("seed", 0))),
        )
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _resolve_config(args)
    checks = run_validate(cfg)
    write_csv(args.out / "validate_report.csv", checks)
    width = max(len(c["check"]) for c in checks)
    failed = 0
    for c in checks:
        print(f"{c['check']:<{width}}  {c['status']:<4}  {c['detail']}")
        failed += c["status"] == "fail"
    return EXIT_VALIDATION if failed else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="missionabort",
        description="Mission-abort policy toolkit: solvers, benchmarks, Monte Carlo evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("approx", "phase-count sweep of the defect-distribution approximation"),
        ("solve", "solve the configured instance and export the policy artifact"),
        ("bench", "tune benchmarks and compare all policies by simulation"),
        ("multi", "multi-task comparison with repair-cost accounting"),
        ("validate", "run the structural property suites"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    args = parser.parse_args(argv)
    try:
        if args.command == "approx":
            return _cmd_approx(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "multi":
            return _cmd_bench(args, multi=True)
        if args.command == "validate":
            return _cmd_validate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
