"""Config-driven command-line front-end.

Subcommands: simulate, bounds, verify, ci-coverage, enumerate, diagnose.
Each reads a YAML manifest (plus optional flag overrides), writes its
artifacts under the configured output directory, and prints a one-line
JSON summary.  Exit status: 0 on success with all checks passing, 2 when a
verification or coverage criterion fails, 1 on config/domain errors (with
a machine-readable error envelope on stdout).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import reports
from .bounds import THEOREMS
from .config import ExperimentConfig, load_config
from .errors import BpreError
from .exact import exact_statistic_distribution
from .harness import (
    coverage_experiment,
    normal_tail_diagnostic,
    verify_bound,
)
from .offspring import moment_profile
from .simulate import simulate_trajectory

_USAGE_ERROR = 1
_VERIFICATION_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit code 2 reserved for failed checks
        print(json.dumps({"error": {"code": "USAGE", "message": message}}))
        raise SystemExit(_USAGE_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bprelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "write trajectory CSV"),
        ("bounds", "write bound-curve CSV for the selected theorems"),
        ("verify", "Monte Carlo domination check of the tail bounds"),
        ("ci-coverage", "empirical coverage of the interval constructions"),
        ("enumerate", "exact tail CSV from the enumeration oracle"),
        ("diagnose", "empirical tail against the standard normal tail"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the YAML manifest")
        p.add_argument("--seed", type=int, help="override the manifest seed")
        p.add_argument("--replicas", type=int, help="override the replica count")
        p.add_argument("--out-dir", help="override the output directory")
        p.add_argument("--engine", choices=["auto", "cython", "python"], help="override the engine")
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.replicas is not None:
        overrides["replicas"] = args.replicas
        overrides["coverage_replicas"] = args.replicas
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.engine is not None:
        overrides["engine"] = args.engine
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary(**fields) -> int:
    print(json.dumps(reports._plain(fields), sort_keys=True))
    return 0


def _cmd_simulate(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg) / "trajectories.csv"
    rows = []
    for replica in range(cfg.trajectories):
        traj = simulate_trajectory(
            cfg.env, cfg.n0 + cfg.n, policy=cfg.policy, seed=cfg.seed,
            replica_id=replica, engine=cfg.engine,
        )
        rows.extend(reports.trajectory_rows(traj, replica=replica))
    reports.write_csv(out, reports.TRAJECTORY_HEADER, rows)
    return _summary(command="simulate", output=str(out), trajectories=cfg.trajectories)


def _cmd_bounds(cfg: ExperimentConfig) -> int:
    profile = moment_profile(cfg.env, alpha=cfg.alpha, p=cfg.fuk_nagaev_p)
    out = _out_dir(cfg) / "bounds.csv"
    rows = []
    for tid in cfg.theorems:
        p = dataclasses.replace(profile, p=cfg.theorem_p(tid))
        rows.extend(reports.bound_curve_rows(tid, cfg.grid_for(tid, p), cfg.n, p))
    reports.write_csv(out, reports.BOUNDS_HEADER, rows)
    return _summary(command="bounds", output=str(out), theorems=list(cfg.theorems))


def _cmd_verify(cfg: ExperimentConfig) -> int:
    profile = moment_profile(cfg.env, alpha=cfg.alpha, p=2.0)
    n_grid = cfg.n_grid if cfg.n_grid else (cfg.n,)
    run_reports = []
    for tid in cfg.theorems:
        p = cfg.theorem_p(tid)
        grid = cfg.grid_for(tid, dataclasses.replace(profile, p=p))
        run_reports.append(
            verify_bound(
                cfg.env, tid, grid, n_grid, n0=cfg.n0, replicas=cfg.replicas,
                seed=cfg.seed, policy=cfg.policy, alpha=cfg.alpha, p=p,
                engine=cfg.engine,
            )
        )
    out = _out_dir(cfg)
    json_path = out / "verification.json"
    csv_path = out / "verification.csv"
    reports.write_json(json_path, reports.verification_json(run_reports))
    rows = [row for rep in run_reports for row in reports.verification_rows(rep)]
    reports.write_csv(csv_path, reports.VERIFY_HEADER, rows)
    all_passed = all(r.all_passed for r in run_reports)
    _summary(
        command="verify",
        outputs=[str(json_path), str(csv_path)],
        all_passed=all_passed,
        theorems=list(cfg.theorems),
    )
    return 0 if all_passed else _VERIFICATION_FAILURE


def _cmd_coverage(cfg: ExperimentConfig) -> int:
    run_reports = [
        coverage_experiment(
            cfg.env, est, cfg.n0, cfg.n, delta, replicas=cfg.coverage_replicas,
            seed=cfg.seed, policy=cfg.policy, alpha=cfg.alpha, engine=cfg.engine,
        )
        for est in cfg.estimators
        for delta in cfg.delta_grid()
    ]
    out = _out_dir(cfg) / "coverage.json"
    reports.write_json(out, reports.coverage_json(run_reports))
    all_passed = all(r.passed for r in run_reports)
    _summary(command="ci-coverage", output=str(out), all_passed=all_passed)
    return 0 if all_passed else _VERIFICATION_FAILURE


def _cmd_enumerate(cfg: ExperimentConfig) -> int:
    dist = exact_statistic_distribution(
        cfg.env, cfg.n0, cfg.n, z_cap=cfg.z_cap, scale=cfg.scale
    )
    grid = cfg.x_grid if cfg.x_grid else tuple(
        float(v) for v in sorted(set(round(x, 12) for x in dist.values))
    )
    out = _out_dir(cfg) / "exact_tails.csv"
    reports.write_csv(out, reports.EXACT_HEADER, reports.exact_tail_rows(dist, grid))
    return _summary(
        command="enumerate", output=str(out),
        atoms=len(dist.values), truncated_mass=float(dist.truncated_mass),
    )


def _cmd_diagnose(cfg: ExperimentConfig) -> int:
    if cfg.x_grid:
        grid = cfg.x_grid
    else:
        sup = cfg.n ** (1.0 / 6.0)
        grid = tuple(x for x in (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0) if x <= sup)
    report = normal_tail_diagnostic(
        cfg.env, cfg.n0, cfg.n, grid, replicas=cfg.replicas, seed=cfg.seed,
        policy=cfg.policy, engine=cfg.engine,
    )
    out = _out_dir(cfg) / "normal_diagnostic.csv"
    reports.write_csv(out, reports.DIAGNOSE_HEADER, reports.diagnostic_rows(report))
    return _summary(command="diagnose", output=str(out), points=len(report.points))


_COMMANDS = {
    "simulate": _cmd_simulate,
    "bounds": _cmd_bounds,
    "verify": _cmd_verify,
    "ci-coverage": _cmd_coverage,
    "enumerate": _cmd_enumerate,
    "diagnose": _cmd_diagnose,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _load(args)
        return _COMMANDS[args.command](cfg)
    except BpreError as exc:
        print(json.dumps({"error": {"code": exc.code, "message": str(exc)}}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
