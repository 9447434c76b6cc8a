"""Exact small-instance enumeration oracle.

For instances where the number of environment-state sequences
(states^(n0+n)) is small, the full distribution of the growth statistic is
computable exactly: for each environment sequence (weight = product of
mixture weights), the population pmf is propagated generation by generation
through z-indexed convolution powers of the active offspring law, jointly
over (Z_{n0}, Z_{n0+n}).  Probability mass walking above ``z_cap`` is
tracked separately, so the oracle brackets any tail probability between a
drop-the-mass lower bound and an assign-it-to-the-tail upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import Degenerate, DomainError, InfeasibleEnumeration
from .offspring import EnvironmentModel, OffspringLaw, central_moment

DEFAULT_Z_CAP = 4096
DEFAULT_MAX_SEQUENCES = 65536

# Retained convolution-power entries per law before declaring the instance
# infeasible (keeps worst-case memory bounded).
_MAX_POWER_ENTRIES = 50_000_000


class _ConvPowers:
    """Lazily grown z-fold convolution powers of one offspring law.

    ``power(z)`` returns (min_total, pmf) where pmf[j] = P(sum of z draws
    equals min_total + j).  Powers are built incrementally; the support of
    the z-fold power is [z*min_value, z*max_value].
    """

    def __init__(self, law: OffspringLaw):
        self.min_value = law.values[0]
        base = np.zeros(law.values[-1] - law.values[0] + 1)
        for v, p in law.support:
            base[v - law.values[0]] = p
        self._base = base
        self._powers = [np.array([1.0]), base]  # z = 0, 1
        self._entries = len(base) + 1

    def power(self, z: int):
        while len(self._powers) <= z:
            nxt = np.convolve(self._powers[-1], self._base)
            self._entries += len(nxt)
            if self._entries > _MAX_POWER_ENTRIES:
                raise InfeasibleEnumeration(
                    "convolution-power table would exceed the memory budget; lower z_cap"
                )
            self._powers.append(nxt)
        return z * self.min_value, self._powers[z]


@lru_cache(maxsize=64)
def _powers_for(law: OffspringLaw) -> _ConvPowers:
    return _ConvPowers(law)


def _advance(pmf: dict, law: OffspringLaw, z_cap: int):
    """One exact generation step: mixture over z of the z-fold law power.

    Returns (next pmf over populations <= z_cap, escaped mass above z_cap).
    """
    powers = _powers_for(law)
    out: dict = {}
    escaped = 0.0
    for z, pz in pmf.items():
        lo, vec = powers.power(z)
        for j, q in enumerate(vec):
            if q == 0.0:
                continue
            y = lo + j
            if y > z_cap:
                escaped += pz * float(vec[j:].sum())
                break
            out[y] = out.get(y, 0.0) + pz * q
    return out, escaped


def _enumerate_sequences(env: EnvironmentModel, n0: int, n: int, z_cap: int):
    """Yield (seq, weight, atoms, escaped) per environment sequence.

    ``atoms`` maps (Z_{n0}, Z_{n0+n}) to conditional probability mass given
    the sequence; ``escaped`` is the conditional mass lost above z_cap.
    """
    states = env.states
    weights = env.weights
    for seq in product(range(len(states)), repeat=n0 + n):
        weight = math.prod(weights[e] for e in seq)
        prefix = {1: 1.0}
        escaped = 0.0
        for k in range(n0):
            prefix, esc = _advance(prefix, states[seq[k]], z_cap)
            escaped += esc
        atoms: dict = {}
        for a, pa in prefix.items():
            pmf = {a: pa}
            for k in range(n0, n0 + n):
                pmf, esc = _advance(pmf, states[seq[k]], z_cap)
                escaped += esc
            for b, pb in pmf.items():
                atoms[(a, b)] = atoms.get((a, b), 0.0) + pb
        yield seq, weight, atoms, escaped


@dataclass(frozen=True, eq=False)
class StatDistribution:
    """Exact distribution of the growth statistic on one scale.

    ``values``/``masses`` are the statistic's atoms sorted ascending;
    ``truncated_mass`` is the total probability whose statistic is unknown
    because the population escaped above z_cap.
    """

    scale: str
    n0: int
    n: int
    z_cap: int
    values: np.ndarray
    masses: np.ndarray
    truncated_mass: float

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def tail(self, x: float) -> float:
        """P(statistic >= x) from the retained mass (a lower bound when
        truncation occurred)."""
        idx = np.searchsorted(self.values, x, side="left")
        return float(self.masses[idx:].sum())

    def tail_upper(self, x: float) -> float:
        """Upper bound: unresolved truncated mass counted toward the tail."""
        return self.tail(x) + self.truncated_mass


@dataclass(frozen=True)
class ExactTailResult:
    prob: float
    truncated_mass: float

    @property
    def prob_upper(self) -> float:
        return self.prob + self.truncated_mass

    def __iter__(self):
        return iter((self.prob, self.truncated_mass))


def _check_feasible(env: EnvironmentModel, n0: int, n: int, max_sequences: int) -> None:
    count = env.n_states() ** (n0 + n)
    if count > max_sequences:
        raise InfeasibleEnumeration(
            f"{count} environment sequences exceed the budget of {max_sequences}"
        )


@lru_cache(maxsize=32)
def exact_statistic_distribution(
    env: EnvironmentModel,
    n0: int,
    n: int,
    z_cap: int = DEFAULT_Z_CAP,
    scale: str = "standardized",
    max_sequences: int = DEFAULT_MAX_SEQUENCES,
) -> StatDistribution:
    """Exact atoms of the growth statistic by full sequence enumeration."""
    if n0 < 0 or n < 1:
        raise DomainError("need n0 >= 0 and n >= 1")
    if z_cap < 1:
        raise DomainError("z_cap must be >= 1")
    _check_feasible(env, n0, n, max_sequences)

    mu = env.mu
    if scale == "standardized":
        sigma2 = central_moment(env, 2)
        if sigma2 == 0.0:
            raise Degenerate("standardized scale undefined: ln m(state) is constant")
        denom = math.sqrt(sigma2) * math.sqrt(n)

        def stat(a, b):
            return (math.log(b) - math.log(a) - n * mu) / denom

    elif scale == "per_generation":

        def stat(a, b):
            return (math.log(b) - math.log(a)) / n - mu

    else:
        raise DomainError(f"unknown scale {scale!r}")

    acc: dict = {}
    truncated = 0.0
    for _seq, weight, atoms, escaped in _enumerate_sequences(env, n0, n, z_cap):
        truncated += weight * escaped
        for (a, b), mass in atoms.items():
            v = stat(a, b)
            acc[v] = acc.get(v, 0.0) + weight * mass
    values = np.array(sorted(acc))
    masses = np.array([acc[v] for v in values])
    return StatDistribution(
        scale=scale,
        n0=n0,
        n=n,
        z_cap=z_cap,
        values=values,
        masses=masses,
        truncated_mass=truncated,
    )


def exact_tail(
    env: EnvironmentModel,
    n0: int,
    n: int,
    x: float,
    z_cap: int = DEFAULT_Z_CAP,
    scale: str = "standardized",
    max_sequences: int = DEFAULT_MAX_SEQUENCES,
) -> ExactTailResult:
    """Exact P(statistic >= x), with the unresolved truncated mass.

    The returned ``prob`` counts only mass that stayed within ``z_cap``
    (hence a lower bound when truncation occurred); ``prob_upper`` adds the
    truncated mass, giving a two-sided certificate.
    """
    dist = exact_statistic_distribution(env, n0, n, z_cap, scale, max_sequences)
    return ExactTailResult(prob=dist.tail(x), truncated_mass=dist.truncated_mass)
