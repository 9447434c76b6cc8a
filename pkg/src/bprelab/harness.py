"""Monte Carlo verification harness.

Estimates tails of the growth statistic, checks every tail bound for
empirical domination (the estimate minus three standard errors must stay
below the clamped bound), measures coverage of the interval constructions,
and runs martingale and normal-tail diagnostics.  All runs are
deterministic functions of (seed, configuration) and independent of
execution order, since each replica owns a stream keyed by its id.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bounds import THEOREMS, BoundValue, TheoremInfo
from .errors import Degenerate, DomainError, HypothesisUnmet
from .intervals import delta_bernstein, delta_bounded
from .offspring import (
    EnvironmentModel,
    MomentProfile,
    bernstein_condition_holds,
    central_moment,
    moment_profile,
)
from .simulate import DEFAULT_POLICY, GrowthPolicy, GrowthSample, resolve_engine, sample_growth

DEFAULT_TAIL_REPLICAS = 100_000
DEFAULT_COVERAGE_REPLICAS = 10_000


@lru_cache(maxsize=32)
def _cached_sample(env, n0, n, replicas, seed, policy, engine, track_s) -> GrowthSample:
    return sample_growth(
        env, n0, n, replicas=replicas, seed=seed, policy=policy, engine=engine, track_s=track_s
    )


def clear_sample_cache() -> None:
    """Drop memoized replica batches (used by determinism tests)."""
    _cached_sample.cache_clear()


def _growth_moments(env: EnvironmentModel, scale: str):
    mu = env.mu
    if scale == "per_generation":
        return mu, None
    if scale == "standardized":
        sigma2 = central_moment(env, 2)
        if sigma2 == 0.0:
            raise Degenerate("standardized scale undefined: ln m(state) is constant")
        return mu, math.sqrt(sigma2)
    raise DomainError(f"unknown scale {scale!r}")


@dataclass(frozen=True)
class TailEstimate:
    """Empirical tail of the growth statistic at one threshold.

    ``replicas`` counts completed replicas (rejected ones are excluded and
    reported); ``exact_replicas`` counts those with no approximate step.
    """

    x: float
    scale: str
    p_hat: float
    replicas: int
    std_err: float
    seed: int
    n0: int
    n: int
    exact_replicas: int
    rejected: int = 0


def _binomial_se(p_hat: float, count: int) -> float:
    return math.sqrt(p_hat * (1.0 - p_hat) / count)


def estimate_tail(
    env: EnvironmentModel,
    n0: int,
    n: int,
    x: float,
    scale: str = "standardized",
    replicas: int = DEFAULT_TAIL_REPLICAS,
    seed: int = 0,
    policy: GrowthPolicy = DEFAULT_POLICY,
    engine: str = "auto",
) -> TailEstimate:
    """Fraction of replicas whose statistic is >= x.

    Deterministic given (seed, replicas, env, policy): the same call always
    returns the identical estimate.
    """
    mu, sigma = _growth_moments(env, scale)
    sample = _cached_sample(env, n0, n, replicas, seed, policy, resolve_engine(engine), False)
    stat = sample.statistic(scale, mu, sigma)
    completed = sample.completed
    used = int(np.count_nonzero(completed))
    if used == 0:
        raise DomainError("no completed replicas: every path hit the reject threshold")
    hits = int(np.count_nonzero(stat[completed] >= x))
    p_hat = hits / used
    return TailEstimate(
        x=float(x),
        scale=scale,
        p_hat=p_hat,
        replicas=used,
        std_err=_binomial_se(p_hat, used),
        seed=seed,
        n0=n0,
        n=n,
        exact_replicas=sample.n_exact,
        rejected=sample.n_rejected,
    )


# ---------------------------------------------------------------------------
# bound verification


_OVERRIDE_FIELDS = {
    "bernstein": {"H": "bernstein_H"},
    "semi_exp": {"u": "u"},
    "fuk_nagaev": {"std_abs_p_moment": "std_abs_p_moment"},
    "von_bahr_esseen": {"abs_p_moment": "abs_p_moment"},
    "hoeffding_sharp": {"H": "upper"},
    "hoeffding_relaxed": {"H": "upper"},
}
_RANGE_THEOREMS = ("rio_sharp", "rio_factored", "rio_corollary", "azuma_hoeffding")


def _apply_override(theorem_id: str, profile: MomentProfile, override: dict | None) -> MomentProfile:
    if not override:
        return profile
    if theorem_id in _RANGE_THEOREMS:
        if set(override) - {"R"}:
            raise DomainError(f"{theorem_id} accepts only an R override")
        if "R" in override:
            return dataclasses.replace(profile, lower=0.0, upper=float(override["R"]))
        return profile
    allowed = _OVERRIDE_FIELDS.get(theorem_id, {})
    unknown = set(override) - set(allowed)
    if unknown:
        raise DomainError(f"{theorem_id} does not accept overrides {sorted(unknown)}")
    return dataclasses.replace(
        profile, **{allowed[k]: float(v) for k, v in override.items()}
    )


def hypothesis_issues(
    theorem_id: str,
    env: EnvironmentModel,
    profile: MomentProfile,
    k_max: int = 50,
) -> list:
    """Reasons why the theorem's moment hypothesis fails for this profile.

    Exact finite sums over the environment decide each condition; an empty
    list means the hypothesis holds and the bound must dominate the truth.
    """
    _theorem(theorem_id)
    issues = []
    if theorem_id == "bernstein":
        if not bernstein_condition_holds(env, profile.bernstein_H, k_max):
            issues.append(
                f"H = {profile.bernstein_H} violates the factorial moment growth "
                f"condition for some k <= {k_max}"
            )
    elif theorem_id == "semi_exp":
        exact_u = moment_profile(env, profile.alpha, profile.p).u
        if profile.u < exact_u * (1.0 - 1e-12):
            issues.append(f"u = {profile.u} below the exact functional {exact_u}")
    elif theorem_id == "fuk_nagaev":
        if profile.p < 2.0:
            issues.append(f"p = {profile.p} must be >= 2")
        else:
            exact_m = moment_profile(env, profile.alpha, profile.p).std_abs_p_moment
            if profile.std_abs_p_moment < exact_m * (1.0 - 1e-12):
                issues.append("standardized absolute moment below its exact value")
    elif theorem_id == "von_bahr_esseen":
        if not 1.0 < profile.p <= 2.0:
            issues.append(f"p = {profile.p} must lie in (1, 2]")
        else:
            exact_m = moment_profile(env, profile.alpha, profile.p).abs_p_moment
            if profile.abs_p_moment < exact_m * (1.0 - 1e-12):
                issues.append("absolute moment below its exact value")
    elif theorem_id in ("hoeffding_sharp", "hoeffding_relaxed"):
        true_upper = moment_profile(env, profile.alpha, profile.p).upper
        if profile.upper < true_upper * (1.0 - 1e-12):
            issues.append(f"H = {profile.upper} below the exact upper endpoint {true_upper}")
    elif theorem_id in _RANGE_THEOREMS:
        true_range = moment_profile(env, profile.alpha, profile.p).range
        if profile.range < true_range * (1.0 - 1e-12):
            issues.append(f"R = {profile.range} below the exact range {true_range}")
    return issues


def _theorem(theorem_id: str) -> TheoremInfo:
    try:
        return THEOREMS[theorem_id]
    except KeyError:
        raise DomainError(f"unknown theorem {theorem_id!r}") from None


@dataclass(frozen=True)
class VerificationPoint:
    x: float
    n: int
    p_hat: float
    std_err: float
    bound_raw: float
    bound_clamped: float
    passed: bool
    replicas_used: int
    exact_replicas: int
    rejected: int
    p_hat_exact: float | None = None
    std_err_exact: float | None = None


@dataclass(frozen=True, eq=False)
class VerificationReport:
    """Per-point domination results for one theorem on one environment."""

    theorem_id: str
    scale: str
    n0: int
    replicas: int
    seed: int
    hypothesis_issues: tuple
    points: tuple

    @property
    def all_passed(self) -> bool:
        return all(p.passed for p in self.points)

    @property
    def pass_rate(self) -> float:
        if not self.points:
            return 1.0
        return sum(1 for p in self.points if p.passed) / len(self.points)

    def to_json_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "scale": self.scale,
            "n0": self.n0,
            "replicas": self.replicas,
            "seed": self.seed,
            "hypothesis_issues": list(self.hypothesis_issues),
            "all_passed": self.all_passed,
            "pass_rate": self.pass_rate,
            "points": [
                {
                    "x": p.x,
                    "n": p.n,
                    "p_hat": p.p_hat,
                    "std_err": p.std_err,
                    "bound_raw": p.bound_raw,
                    "bound_clamped": p.bound_clamped,
                    "passed": p.passed,
                    "replicas_used": p.replicas_used,
                    "exact_replicas": p.exact_replicas,
                    "rejected": p.rejected,
                    "p_hat_exact": p.p_hat_exact,
                    "std_err_exact": p.std_err_exact,
                }
                for p in self.points
            ],
        }


def _domination_pass(p_hat: float, std_err: float, bound_clamped: float) -> bool:
    return p_hat - 3.0 * std_err <= bound_clamped + 1e-12


def verify_bound(
    env: EnvironmentModel,
    theorem_id: str,
    x_grid,
    n_grid,
    n0: int = 0,
    replicas: int = DEFAULT_TAIL_REPLICAS,
    seed: int = 0,
    policy: GrowthPolicy = DEFAULT_POLICY,
    alpha: float = 0.5,
    p: float | None = None,
    k_max: int = 50,
    constants_override: dict | None = None,
    engine: str = "auto",
) -> VerificationReport:
    """Check that the bound dominates the Monte Carlo tail on a grid.

    For each grid point the pass criterion is p_hat - 3 SE <= clamped
    bound: the bound must dominate the true probability, and the slack
    turns the almost-sure inequality into a statistically sound test.  When
    approximate replicas occurred, exact-only estimates are reported next
    to the all-replica ones.  Deliberately invalid constants (via
    ``constants_override``) are allowed through, but the hypothesis
    violation is recorded so failures are attributed to the misuse.
    """
    info = _theorem(theorem_id)
    if p is None:
        p = 2.0
    if theorem_id == "fuk_nagaev" and p < 2.0:
        raise HypothesisUnmet(f"fuk_nagaev needs p >= 2, got {p}")
    if theorem_id == "von_bahr_esseen" and not 1.0 < p <= 2.0:
        raise HypothesisUnmet(f"von_bahr_esseen needs p in (1, 2], got {p}")
    base_profile = moment_profile(env, alpha=alpha, p=p, k_max=k_max)
    profile = _apply_override(theorem_id, base_profile, constants_override)
    issues = tuple(hypothesis_issues(theorem_id, env, profile, k_max=k_max))

    x_grid = [float(x) for x in x_grid]
    n_grid = [int(v) for v in n_grid]
    if not x_grid or not n_grid:
        raise DomainError("x_grid and n_grid must be non-empty")
    mu, sigma = env.mu, base_profile.sigma
    engine = resolve_engine(engine)

    points = []
    for n in n_grid:
        sup = info.domain_sup(profile)
        sample = _cached_sample(env, n0, n, replicas, seed, policy, engine, False)
        stat = sample.statistic(info.scale, mu, sigma)[sample.completed]
        exact_mask = (~sample.approx_any & sample.completed)[sample.completed]
        used = len(stat)
        n_exact = int(np.count_nonzero(exact_mask))
        has_approx = n_exact < used
        for x in x_grid:
            if x < 0 or (x == 0 and info.open_at_zero) or x > sup or (x == sup and info.open_at_sup):
                raise DomainError(
                    f"x = {x} outside the domain of {theorem_id} (sup = {sup})"
                )
            bound: BoundValue = info.evaluate(x, n, profile)
            p_hat = float(np.count_nonzero(stat >= x)) / used
            se = _binomial_se(p_hat, used)
            p_hat_exact = std_err_exact = None
            if has_approx and n_exact > 0:
                p_hat_exact = float(np.count_nonzero(stat[exact_mask] >= x)) / n_exact
                std_err_exact = _binomial_se(p_hat_exact, n_exact)
            points.append(
                VerificationPoint(
                    x=x,
                    n=n,
                    p_hat=p_hat,
                    std_err=se,
                    bound_raw=bound.value,
                    bound_clamped=bound.clamped,
                    passed=_domination_pass(p_hat, se, bound.clamped),
                    replicas_used=used,
                    exact_replicas=n_exact,
                    rejected=sample.n_rejected,
                    p_hat_exact=p_hat_exact,
                    std_err_exact=std_err_exact,
                )
            )
    return VerificationReport(
        theorem_id=theorem_id,
        scale=info.scale,
        n0=n0,
        replicas=replicas,
        seed=seed,
        hypothesis_issues=issues,
        points=tuple(points),
    )


# ---------------------------------------------------------------------------
# interval coverage


_ESTIMATORS = ("mu_bernstein", "mu_bounded", "z_bernstein", "z_bounded")


@dataclass(frozen=True)
class CoverageReport:
    """Empirical coverage of one interval construction."""

    estimator_id: str
    n0: int
    n: int
    delta: float
    delta_n: float
    replicas_used: int
    rejected: int
    covered: int
    coverage: float
    threshold: float
    passed: bool
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "estimator_id": self.estimator_id,
            "n0": self.n0,
            "n": self.n,
            "delta": self.delta,
            "delta_n": self.delta_n,
            "replicas_used": self.replicas_used,
            "rejected": self.rejected,
            "covered": self.covered,
            "coverage": self.coverage,
            "threshold": self.threshold,
            "passed": self.passed,
            "seed": self.seed,
        }


def coverage_experiment(
    env: EnvironmentModel,
    estimator_id: str,
    n0: int,
    n: int,
    delta: float,
    replicas: int = DEFAULT_COVERAGE_REPLICAS,
    seed: int = 0,
    policy: GrowthPolicy = DEFAULT_POLICY,
    alpha: float = 0.5,
    p: float = 2.0,
    engine: str = "auto",
) -> CoverageReport:
    """Fraction of replicas whose interval contains the truth.

    For the mu intervals the truth is mu itself; for the prediction
    intervals it is the realized Z_{n0+n}.  Both reduce to the event
    ln(Z_{n0+n}/Z_{n0}) <= n (mu + Delta_n).  The run passes when coverage
    is at least 1 - delta minus three binomial standard errors.
    """
    if estimator_id not in _ESTIMATORS:
        raise DomainError(f"unknown estimator {estimator_id!r}; choose from {_ESTIMATORS}")
    profile = moment_profile(env, alpha=alpha, p=p)
    if estimator_id.endswith("bernstein"):
        d = delta_bernstein(n, delta, profile.sigma, profile.bernstein_H)
    else:
        d = delta_bounded(n, delta, profile.range)
    sample = _cached_sample(
        env, n0, n, replicas, seed, policy, resolve_engine(engine), False
    )
    ln_ratio = sample.ln_ratio[sample.completed]
    used = len(ln_ratio)
    if used == 0:
        raise DomainError("no completed replicas")
    covered = int(np.count_nonzero(ln_ratio <= n * (profile.mu + d)))
    coverage = covered / used
    threshold = (1.0 - delta) - 3.0 * math.sqrt(delta * (1.0 - delta) / used)
    return CoverageReport(
        estimator_id=estimator_id,
        n0=n0,
        n=n,
        delta=delta,
        delta_n=d,
        replicas_used=used,
        rejected=sample.n_rejected,
        covered=covered,
        coverage=coverage,
        threshold=threshold,
        passed=coverage >= threshold,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class MartingaleReport:
    """Sample mean of the normalized population W_n against its unit mean."""

    n: int
    replicas_used: int
    mean_w: float
    std_err: float
    passed: bool
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "replicas_used": self.replicas_used,
            "mean_w": self.mean_w,
            "std_err": self.std_err,
            "passed": self.passed,
            "seed": self.seed,
        }


def martingale_check(
    env: EnvironmentModel,
    n: int,
    replicas: int = DEFAULT_COVERAGE_REPLICAS,
    seed: int = 0,
    policy: GrowthPolicy = DEFAULT_POLICY,
    engine: str = "auto",
) -> MartingaleReport:
    """Check E W_n = 1 on exact-arithmetic replicas only.

    W_n = Z_n / exp(S_n) has mean one; the check passes when the sample
    mean sits within four standard errors of 1.  Replicas that used the
    normal approximation are excluded.
    """
    if n == 0:
        return MartingaleReport(n=0, replicas_used=replicas, mean_w=1.0, std_err=0.0,
                                passed=True, seed=seed)
    sample = _cached_sample(
        env, 0, n, replicas, seed, policy, resolve_engine(engine), True
    )
    exact = sample.completed & ~sample.approx_any
    if not exact.any():
        raise HypothesisUnmet(
            "no exact replicas: raise exact_threshold or lower n for the martingale check"
        )
    w = np.exp(sample.ln_z_end[exact] - sample.s_end[exact])
    mean_w = float(w.mean())
    std_err = float(w.std(ddof=1) / math.sqrt(len(w))) if len(w) > 1 else 0.0
    return MartingaleReport(
        n=n,
        replicas_used=int(len(w)),
        mean_w=mean_w,
        std_err=std_err,
        passed=abs(mean_w - 1.0) <= 4.0 * std_err if std_err > 0 else mean_w == 1.0,
        seed=seed,
    )


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    erfc is evaluated by the C library's rational minimax approximation,
    accurate to well below 1e-10 everywhere.
    """
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class DiagnosticPoint:
    x: float
    p_hat: float
    std_err: float
    normal_tail: float
    ratio: float
    in_regime: bool


@dataclass(frozen=True, eq=False)
class DiagnosticReport:
    """Empirical tail against the standard normal tail (informational).

    The comparison is meaningful in the moderate range x = o(sqrt n); the
    ``in_regime`` flag marks x <= n^(1/6).  No pass criterion: the
    normal-approximation error constant is model dependent.
    """

    n0: int
    n: int
    replicas: int
    seed: int
    points: tuple

    def to_json_dict(self) -> dict:
        return {
            "n0": self.n0,
            "n": self.n,
            "replicas": self.replicas,
            "seed": self.seed,
            "points": [dataclasses.asdict(pt) for pt in self.points],
        }


def normal_tail_diagnostic(
    env: EnvironmentModel,
    n0: int,
    n: int,
    x_grid,
    replicas: int = DEFAULT_TAIL_REPLICAS,
    seed: int = 0,
    policy: GrowthPolicy = DEFAULT_POLICY,
    engine: str = "auto",
) -> DiagnosticReport:
    """Ratio of the empirical standardized tail to 1 - Phi(x) per grid point."""
    mu, sigma = _growth_moments(env, "standardized")
    sample = _cached_sample(env, n0, n, replicas, seed, policy, resolve_engine(engine), False)
    stat = sample.statistic("standardized", mu, sigma)[sample.completed]
    used = len(stat)
    regime_sup = n ** (1.0 / 6.0)
    points = []
    for x in (float(v) for v in x_grid):
        p_hat = float(np.count_nonzero(stat >= x)) / used
        tail = 1.0 - normal_cdf(x)
        points.append(
            DiagnosticPoint(
                x=x,
                p_hat=p_hat,
                std_err=_binomial_se(p_hat, used),
                normal_tail=tail,
                ratio=p_hat / tail,
                in_regime=x <= regime_sup,
            )
        )
    return DiagnosticReport(
        n0=n0, n=n, replicas=replicas, seed=seed, points=tuple(points)
    )
