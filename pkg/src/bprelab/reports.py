"""Stable JSON and CSV serialization for reports and curves.

Column sets are fixed and golden-tested; floats are written with
shortest-roundtrip repr, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .bounds import THEOREMS
from .exact import StatDistribution
from .harness import CoverageReport, DiagnosticReport, VerificationReport
from .offspring import MomentProfile
from .simulate import Trajectory

SCHEMA_VERSION = 1

TRAJECTORY_HEADER = ["replica", "k", "z", "ln_z", "s", "ln_w", "env_idx", "approx_flag"]
BOUNDS_HEADER = ["x", "raw_value", "clamped_value", "component_1", "component_2", "theorem_id", "scale"]
VERIFY_HEADER = [
    "theorem_id", "scale", "n0", "n", "x", "p_hat", "std_err", "bound_raw",
    "bound_clamped", "passed", "p_hat_exact", "std_err_exact",
    "replicas_used", "exact_replicas", "rejected",
]
EXACT_HEADER = ["x", "prob", "truncated_mass", "prob_upper", "scale", "n0", "n", "z_cap"]
DIAGNOSE_HEADER = ["x", "p_hat", "std_err", "normal_tail", "ratio", "in_regime", "n0", "n", "replicas"]


def _plain(value):
    """Convert numpy scalars and containers to stable built-in types."""
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def json_dumps(payload: dict) -> str:
    """Deterministic JSON: sorted keys, no whitespace drift."""
    return json.dumps(_plain(payload), sort_keys=True, indent=2)


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json_dumps(payload) + "\n")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def trajectory_rows(traj: Trajectory, replica: int = 0):
    """CSV rows (k, Z_k when exact / blank when approximate, ln Z_k, S_k,
    ln W_k, env state applied at k, approx flag)."""
    n = traj.n_generations
    for k in range(n + 1):
        approx = bool(traj.approx_flag[k])
        yield (
            replica,
            k,
            None if approx else traj.z[k],
            float(traj.ln_z[k]),
            float(traj.s[k]),
            float(traj.ln_w[k]),
            traj.env_idx[k] if k < n else None,
            approx,
        )


def bound_curve_rows(theorem_id: str, x_grid, n: int, profile: MomentProfile):
    info = THEOREMS[theorem_id]
    for x in x_grid:
        bound = info.evaluate(float(x), n, profile)
        parts = list(bound.components.values())
        yield (
            float(x),
            bound.value,
            bound.clamped,
            parts[0] if parts else None,
            parts[1] if len(parts) > 1 else None,
            theorem_id,
            info.scale,
        )


def verification_rows(report: VerificationReport):
    for pt in report.points:
        yield (
            report.theorem_id,
            report.scale,
            report.n0,
            pt.n,
            pt.x,
            pt.p_hat,
            pt.std_err,
            pt.bound_raw,
            pt.bound_clamped,
            pt.passed,
            pt.p_hat_exact,
            pt.std_err_exact,
            pt.replicas_used,
            pt.exact_replicas,
            pt.rejected,
        )


def verification_json(reports: list[VerificationReport]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "all_passed": all(r.all_passed for r in reports),
        "reports": [r.to_json_dict() for r in reports],
    }


def coverage_json(reports: list[CoverageReport]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "all_passed": all(r.passed for r in reports),
        "reports": [r.to_json_dict() for r in reports],
    }


def exact_tail_rows(dist: StatDistribution, x_grid):
    for x in x_grid:
        prob = dist.tail(float(x))
        yield (
            float(x),
            float(prob),
            float(dist.truncated_mass),
            float(prob + dist.truncated_mass),
            dist.scale,
            dist.n0,
            dist.n,
            dist.z_cap,
        )


def diagnostic_rows(report: DiagnosticReport):
    for pt in report.points:
        ratio = pt.ratio if math.isfinite(pt.ratio) else None
        yield (
            pt.x,
            pt.p_hat,
            pt.std_err,
            pt.normal_tail,
            ratio,
            pt.in_regime,
            report.n0,
            report.n,
            report.replicas,
        )
