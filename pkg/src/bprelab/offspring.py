"""Offspring laws, environment mixtures, and exact moment functionals.

An environment state is a finite-support probability law on {1, 2, ...}
(no zeros, so extinction is impossible).  The random environment draws one
state per generation, i.i.d. with fixed mixture weights.  All moment
quantities used by the tail bounds are functionals of X = ln m(state),
where m is the state's mean offspring count, and are computed by exact
finite sums over the states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import Degenerate, DomainError, NotNormalized, NotSupercritical, ZeroOffspring

_NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class OffspringLaw:
    """Finite-support reproduction law for one environment state.

    ``support`` holds (value, prob) pairs with integer values >= 1; ``mean``
    is the derived mean offspring count.  Probabilities are normalized at
    construction, so they sum to 1 up to float rounding.
    """

    support: tuple[tuple[int, float], ...]
    mean: float

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.support)

    @property
    def probs(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.support)

    @property
    def variance(self) -> float:
        return math.fsum(p * (v - self.mean) ** 2 for v, p in self.support)

    @property
    def log_mean(self) -> float:
        return math.log(self.mean)

    @property
    def max_value(self) -> int:
        return self.support[-1][0]

    def is_deterministic(self) -> bool:
        return len(self.support) == 1


def make_offspring_law(points) -> OffspringLaw:
    """Validate and normalize (value, prob) pairs into an :class:`OffspringLaw`.

    Raises :class:`ZeroOffspring` if any support value is 0, and
    :class:`NotNormalized` if the probabilities are off 1 by more than 1e-9.
    Values must be distinct integers >= 1 with strictly positive weights.
    """
    pts = [(v, float(p)) for v, p in points]
    if not pts:
        raise DomainError("offspring law needs at least one support point")
    for v, p in pts:
        if v == 0:
            raise ZeroOffspring("support point 0 is forbidden: every individual has at least one child")
        if not isinstance(v, int) or v < 0:
            raise DomainError(f"support values must be positive integers, got {v!r}")
        if p <= 0.0:
            raise DomainError(f"support probabilities must be positive, got {p} at value {v}")
    values = [v for v, _ in pts]
    if len(set(values)) != len(values):
        raise DomainError("support values must be distinct")
    total = math.fsum(p for _, p in pts)
    if abs(total - 1.0) > _NORMALIZATION_TOL:
        raise NotNormalized(f"probabilities sum to {total!r}, more than 1e-9 away from 1")
    pts.sort(key=lambda vp: vp[0])
    support = tuple((v, p / total) for v, p in pts)
    mean = math.fsum(v * p for v, p in support)
    return OffspringLaw(support=support, mean=mean)


@dataclass(frozen=True)
class EnvironmentModel:
    """Finite i.i.d. environment: a weighted mixture of offspring laws."""

    states: tuple[OffspringLaw, ...]
    weights: tuple[float, ...]

    @property
    def log_means(self) -> tuple[float, ...]:
        return tuple(s.log_mean for s in self.states)

    @property
    def mu(self) -> float:
        """Mean log growth rate E ln m (the criticality parameter)."""
        return math.fsum(w * s.log_mean for s, w in zip(self.states, self.weights))

    @property
    def max_value(self) -> int:
        return max(s.max_value for s in self.states)

    def n_states(self) -> int:
        return len(self.states)


def make_environment(states, weights) -> EnvironmentModel:
    """Build a validated supercritical environment model.

    Weights are normalized after a 1e-9 sum check.  The model is rejected as
    :class:`NotSupercritical` unless E ln m > 0, which (with the no-zero
    support rule) guarantees unbounded population growth.
    """
    states = tuple(states)
    weights = [float(w) for w in weights]
    if not states:
        raise DomainError("environment needs at least one state")
    if len(weights) != len(states):
        raise DomainError(f"{len(states)} states but {len(weights)} weights")
    if any(w <= 0.0 for w in weights):
        raise DomainError("environment weights must be positive")
    total = math.fsum(weights)
    if abs(total - 1.0) > _NORMALIZATION_TOL:
        raise NotNormalized(f"environment weights sum to {total!r}, more than 1e-9 away from 1")
    weights = tuple(w / total for w in weights)
    env = EnvironmentModel(states=states, weights=weights)
    if env.mu <= 0.0:
        raise NotSupercritical(f"mean log growth rate mu = {env.mu} must be > 0")
    return env


@dataclass(frozen=True)
class MomentProfile:
    """Exact moment functionals of X = ln m(state) needed by the tail bounds.

    ``bernstein_H`` is a constant satisfying the factorial moment growth
    condition E(X-mu)^k <= (1/2) k! H^(k-2) sigma^2 for k >= 2; ``u`` is the
    semi-exponential functional (1/sigma^2) E[(X-mu)^2 exp(((X-mu)^+)^alpha)];
    ``lower``/``upper`` are the endpoints of X-mu (lower <= 0 <= upper since
    X-mu is centered).
    """

    mu: float
    sigma2: float
    bernstein_H: float
    alpha: float
    u: float
    p: float
    abs_p_moment: float
    std_abs_p_moment: float
    lower: float
    upper: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def range(self) -> float:
        """Total spread of X - mu, the constant entering the bounded-case bounds."""
        return self.upper - self.lower


def _x_support(env: EnvironmentModel) -> list[tuple[float, float]]:
    """(x, weight) pairs for X = ln m(state), weights aggregated over states."""
    acc: dict[float, float] = {}
    for s, w in zip(env.states, env.weights):
        x = s.log_mean
        acc[x] = acc.get(x, 0.0) + w
    return sorted(acc.items())


def central_moment(env: EnvironmentModel, k: int) -> float:
    """E(X - mu)^k by exact finite sum (signed for odd k)."""
    mu = env.mu
    return math.fsum(w * (x - mu) ** k for x, w in _x_support(env))


def abs_central_moment(env: EnvironmentModel, p: float) -> float:
    """E|X - mu|^p by exact finite sum."""
    mu = env.mu
    return math.fsum(w * abs(x - mu) ** p for x, w in _x_support(env))


def semi_exp_functional(env: EnvironmentModel, alpha: float) -> float:
    """(1/sigma^2) E[(X-mu)^2 exp(((X-mu)^+)^alpha)]; always >= 1."""
    mu = env.mu
    sigma2 = central_moment(env, 2)
    num = math.fsum(
        w * (x - mu) ** 2 * math.exp(max(x - mu, 0.0) ** alpha) for x, w in _x_support(env)
    )
    return num / sigma2


def bernstein_condition_holds(env: EnvironmentModel, H: float, k_max: int) -> bool:
    """Check E(X-mu)^k <= (1/2) k! H^(k-2) sigma^2 for all k = 2..k_max."""
    sigma2 = central_moment(env, 2)
    for k in range(2, k_max + 1):
        lhs = central_moment(env, k)
        rhs = 0.5 * math.factorial(k) * H ** (k - 2) * sigma2
        if lhs > rhs:
            return False
    return True


def moment_profile(env: EnvironmentModel, alpha: float, p: float, k_max: int = 50) -> MomentProfile:
    """Compute every moment functional of X = ln m(state) by exact finite sums.

    The default Bernstein constant is max|X - mu|: for a bounded centered
    variable it always satisfies the factorial growth condition, which is
    re-verified here for k = 2..k_max as a guard.  Raises
    :class:`NotSupercritical` when mu <= 0 and :class:`Degenerate` when X is
    almost surely constant (sigma^2 = 0), in which case none of the
    standardized-scale machinery applies.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if p <= 1.0:
        raise DomainError(f"p must exceed 1, got {p}")
    mu = env.mu
    if mu <= 0.0:
        raise NotSupercritical(f"mu = {mu} must be > 0")
    xs = _x_support(env)
    sigma2 = central_moment(env, 2)
    if sigma2 == 0.0:
        raise Degenerate("X = ln m(state) is constant; the environment walk is degenerate")
    lower = min(x - mu for x, _ in xs)
    upper = max(x - mu for x, _ in xs)
    H = max(upper, -lower)
    if not bernstein_condition_holds(env, H, k_max):
        # Unreachable for bounded X with H = max|X-mu|; kept as a tripwire.
        raise DomainError(f"default Bernstein constant {H} failed its own condition")
    abs_p = abs_central_moment(env, p)
    sigma = math.sqrt(sigma2)
    std_abs_p = math.fsum(w * (abs(x - mu) / sigma) ** p for x, w in xs)
    return MomentProfile(
        mu=mu,
        sigma2=sigma2,
        bernstein_H=H,
        alpha=alpha,
        u=semi_exp_functional(env, alpha),
        p=p,
        abs_p_moment=abs_p,
        std_abs_p_moment=std_abs_p,
        lower=lower,
        upper=upper,
    )


def minimal_bernstein_H(env: EnvironmentModel, k_max: int = 50, tol: float = 1e-9) -> float:
    """Smallest Bernstein constant (within ``tol``) valid for k = 2..k_max.

    Bisects on H between 0 and the certified fallback max|X - mu|; the
    condition is monotone in H, and the k = 2 case holds with equality for
    every H, so k_max = 2 drives the answer down to tolerance level.
    Returns the feasible upper end of the final bracket.
    """
    mu = env.mu
    if mu <= 0.0:
        raise NotSupercritical(f"mu = {mu} must be > 0")
    if central_moment(env, 2) == 0.0:
        raise Degenerate("X = ln m(state) is constant")
    hi = max(abs(x - mu) for x, _ in _x_support(env))
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid > 0.0 and bernstein_condition_holds(env, mid, k_max):
            hi = mid
        else:
            lo = mid
    return hi


@lru_cache(maxsize=None)
def benchmark_environment(name: str) -> EnvironmentModel:
    """Fixed in-repo benchmark environments.

    M1: uniform mixture of {1: .5, 2: .5} and {2: .6, 3: .4} (general case).
    M2: uniform mixture of two deterministic laws (1 child / 2 children),
        so the normalized population is identically 1 and the log growth
        count is binomial.
    M3: a single three-point law (constant environment); valid for the
        simulator and enumeration oracle but degenerate for the bounds.
    """
    if name == "M1":
        return make_environment(
            [make_offspring_law([(1, 0.5), (2, 0.5)]), make_offspring_law([(2, 0.6), (3, 0.4)])],
            [0.5, 0.5],
        )
    if name == "M2":
        return make_environment(
            [make_offspring_law([(1, 1.0)]), make_offspring_law([(2, 1.0)])],
            [0.5, 0.5],
        )
    if name == "M3":
        return make_environment(
            [make_offspring_law([(1, 0.25), (2, 0.5), (3, 0.25)])],
            [1.0],
        )
    raise DomainError(f"unknown benchmark environment {name!r}")
