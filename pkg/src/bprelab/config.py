"""Experiment configuration: YAML manifests plus command-line overrides.

A single hierarchical config drives every subcommand; reproducible
manifests for the benchmark environments are checked into ``configs/``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .bounds import ALL_THEOREM_IDS, PER_GENERATION, STANDARDIZED, THEOREMS, TheoremInfo
from .errors import BpreError, ConfigError
from .offspring import EnvironmentModel, MomentProfile, make_environment, make_offspring_law
from .simulate import GrowthPolicy

_STANDARDIZED_FRACS = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0)
_BOUNDED_DOMAIN_FRACS = (0.02, 0.05, 0.1, 0.2, 0.3, 0.45, 0.6, 0.75, 0.9)
_RANGE_FRACS = (0.05, 0.1, 0.2, 0.3, 0.45, 0.6, 0.8, 1.0, 1.25, 1.5)


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvironmentModel
    n0: int = 0
    n: int = 16
    n_grid: tuple = ()
    x_grid: tuple = ()
    x_grids: dict = field(default_factory=dict)
    scale: str = STANDARDIZED
    theorems: tuple = ALL_THEOREM_IDS
    estimators: tuple = ("mu_bernstein", "z_bernstein")
    delta: float = 0.1
    deltas: tuple = ()
    replicas: int = 100_000
    coverage_replicas: int = 10_000
    trajectories: int = 1
    seed: int = 20240901
    alpha: float = 0.5
    fuk_nagaev_p: float = 2.0
    von_bahr_esseen_p: float = 2.0
    z_cap: int = 4096
    policy: GrowthPolicy = GrowthPolicy()
    engine: str = "auto"
    out_dir: str = "results"

    def theorem_p(self, theorem_id: str) -> float:
        if theorem_id == "von_bahr_esseen":
            return self.von_bahr_esseen_p
        return self.fuk_nagaev_p

    def grid_for(self, theorem_id: str, profile: MomentProfile) -> tuple:
        """Explicit per-theorem grid, else the shared grid, else a grid
        derived from the theorem's domain."""
        if theorem_id in self.x_grids:
            return tuple(self.x_grids[theorem_id])
        info = THEOREMS[theorem_id]
        if self.x_grid and (info.scale == self.scale):
            return self.x_grid
        return default_x_grid(info, profile)

    def delta_grid(self) -> tuple:
        return self.deltas if self.deltas else (self.delta,)


def default_x_grid(info: TheoremInfo, profile: MomentProfile) -> tuple:
    """Domain-aware grid: standardized units, or fractions of the domain."""
    if info.scale == STANDARDIZED:
        return _STANDARDIZED_FRACS
    sup = info.domain_sup(profile)
    if math.isfinite(sup):
        return tuple(f * sup for f in _BOUNDED_DOMAIN_FRACS)
    return tuple(f * profile.range for f in _RANGE_FRACS)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _sorted_grid(values, name: str) -> tuple:
    grid = tuple(float(v) for v in values)
    _require(len(grid) > 0, f"{name} must be non-empty")
    _require(all(b > a for a, b in zip(grid, grid[1:])), f"{name} must be sorted ascending")
    return grid


def environment_from_dict(spec: dict) -> EnvironmentModel:
    _require(isinstance(spec, dict), "env must be a mapping")
    _require("states" in spec and "weights" in spec, "env needs 'states' and 'weights'")
    states = []
    for i, st in enumerate(spec["states"]):
        _require(
            isinstance(st, dict) and "values" in st and "probs" in st,
            f"env.states[{i}] needs 'values' and 'probs'",
        )
        values, probs = st["values"], st["probs"]
        _require(len(values) == len(probs), f"env.states[{i}]: values/probs length mismatch")
        states.append(make_offspring_law(list(zip(values, probs))))
    return make_environment(states, spec["weights"])


def config_from_dict(raw: dict) -> ExperimentConfig:
    _require(isinstance(raw, dict), "config must be a mapping")
    known = {
        "env", "n0", "n", "n_grid", "x_grid", "x_grids", "scale", "theorems",
        "estimators", "delta", "deltas", "replicas", "coverage_replicas",
        "trajectories", "seed", "alpha", "fuk_nagaev_p", "von_bahr_esseen_p",
        "z_cap", "growth", "engine", "out_dir",
    }
    unknown = set(raw) - known
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    _require("env" in raw, "config needs an 'env' section")

    env = environment_from_dict(raw["env"])

    growth = raw.get("growth", {})
    _require(isinstance(growth, dict), "growth must be a mapping")
    policy = GrowthPolicy(
        exact_threshold=int(growth.get("exact_threshold", 10_000_000)),
        mode_above_threshold=growth.get("mode_above_threshold", "clt_approx"),
    )

    theorems = raw.get("theorems", "all")
    if theorems in ("all", ["all"]):
        theorems = ALL_THEOREM_IDS
    else:
        theorems = tuple(theorems)
        for t in theorems:
            _require(t in THEOREMS, f"unknown theorem {t!r}")

    scale = raw.get("scale", STANDARDIZED)
    _require(scale in (STANDARDIZED, PER_GENERATION), f"unknown scale {scale!r}")

    x_grids = raw.get("x_grids", {})
    _require(isinstance(x_grids, dict), "x_grids must map theorem ids to grids")
    x_grids = {k: _sorted_grid(v, f"x_grids[{k}]") for k, v in x_grids.items()}
    for t in x_grids:
        _require(t in THEOREMS, f"x_grids references unknown theorem {t!r}")

    cfg = ExperimentConfig(
        env=env,
        n0=int(raw.get("n0", 0)),
        n=int(raw.get("n", 16)),
        n_grid=tuple(int(v) for v in raw.get("n_grid", ())),
        x_grid=_sorted_grid(raw["x_grid"], "x_grid") if "x_grid" in raw else (),
        x_grids=x_grids,
        scale=scale,
        theorems=theorems,
        estimators=tuple(raw.get("estimators", ("mu_bernstein", "z_bernstein"))),
        delta=float(raw.get("delta", 0.1)),
        deltas=tuple(float(d) for d in raw.get("deltas", ())),
        replicas=int(raw.get("replicas", 100_000)),
        coverage_replicas=int(raw.get("coverage_replicas", 10_000)),
        trajectories=int(raw.get("trajectories", 1)),
        seed=int(raw.get("seed", 20240901)),
        alpha=float(raw.get("alpha", 0.5)),
        fuk_nagaev_p=float(raw.get("fuk_nagaev_p", 2.0)),
        von_bahr_esseen_p=float(raw.get("von_bahr_esseen_p", 2.0)),
        z_cap=int(raw.get("z_cap", 4096)),
        policy=policy,
        engine=raw.get("engine", "auto"),
        out_dir=str(raw.get("out_dir", "results")),
    )
    _require(cfg.n0 >= 0, "n0 must be >= 0")
    _require(cfg.n >= 1, "n must be >= 1")
    _require(cfg.replicas >= 1 and cfg.coverage_replicas >= 1, "replica counts must be >= 1")
    _require(0.0 < cfg.delta <= 1.0, "delta must lie in (0, 1]")
    for d in cfg.deltas:
        _require(0.0 < d <= 1.0, f"delta {d} must lie in (0, 1]")
    _require(
        all(b > a for a, b in zip(cfg.n_grid, cfg.n_grid[1:])),
        "n_grid must be sorted ascending",
    )
    for est in cfg.estimators:
        _require(
            est in ("mu_bernstein", "mu_bounded", "z_bernstein", "z_bounded"),
            f"unknown estimator {est!r}",
        )
    return cfg


def load_config(path) -> ExperimentConfig:
    """Parse a YAML manifest into a validated :class:`ExperimentConfig`."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config failed to parse: {exc}") from None
    try:
        return config_from_dict(raw)
    except ConfigError:
        raise
    except BpreError as exc:
        # domain/model errors keep their own codes for the CLI envelope
        raise exc
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None


__all__ = [
    "ExperimentConfig",
    "config_from_dict",
    "default_x_grid",
    "environment_from_dict",
    "load_config",
]
