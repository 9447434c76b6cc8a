"""One-sided confidence and prediction intervals for the growth process.

Inverting the Bernstein-type tail bound (or the bounded-increment Gaussian
form) at risk level delta gives a closed-form half-width Delta_n; from it,
[A_n, inf) with A_n = (1/n) ln(Z_{n0+n}/Z_{n0}) - Delta_n is a one-sided
confidence interval for the criticality parameter mu, and
[1, Z_{n0} exp(n (mu + Delta_n))] is a one-sided prediction interval for
Z_{n0+n} when mu is known.  The risk functions are exposed so the inverse
property (substituting Delta_n back reproduces delta) can be verified
directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

_KINDS = ("mu_lower", "z_upper")


@dataclass(frozen=True)
class IntervalResult:
    """One interval construction: [a_n, inf) for mu or [1, a_n] for Z."""

    kind: str
    a_n: float
    delta_n: float
    delta: float
    n: int
    n0: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown interval kind {self.kind!r}")
        if not 0.0 < self.delta <= 1.0:
            raise DomainError("delta must lie in (0, 1]")
        if self.delta_n < 0.0:
            raise DomainError("delta_n must be >= 0")
        if self.kind == "z_upper" and self.a_n < 1.0:
            raise DomainError("z_upper endpoint must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "n0": self.n0,
            "delta": self.delta,
            "delta_n": self.delta_n,
            "a_n": self.a_n,
        }


def bernstein_risk(delta_n: float, n: int, sigma: float, H: float) -> float:
    """Risk level 2 exp{-n d^2 / (2 (sigma^2 + 6(1+H) d))} at half-width d.

    ``delta_bernstein`` returns the positive root of risk = delta.
    """
    return 2.0 * math.exp(
        -n * delta_n * delta_n / (2.0 * (sigma * sigma + 6.0 * (1.0 + H) * delta_n))
    )


def bounded_risk(delta_n: float, n: int, R: float) -> float:
    """Risk level 2 exp{-n d^2/(2 R^2)} at half-width d."""
    return 2.0 * math.exp(-n * delta_n * delta_n / (2.0 * R * R))


def _check_common(n: int, delta: float) -> None:
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")


def delta_bernstein(n: int, delta: float, sigma: float, H: float) -> float:
    """Half-width inverting the Bernstein-type risk at level delta.

    Delta_n = 6(1+H)/n ln(2/delta)
              + sqrt(36(1+H)^2/n^2 ln^2(2/delta) + 2 sigma^2/n ln(2/delta)).
    """
    _check_common(n, delta)
    if sigma <= 0.0 or H <= 0.0:
        raise DomainError("sigma and H must be > 0")
    ell = math.log(2.0 / delta)
    lead = 6.0 * (1.0 + H) * ell / n
    return lead + math.sqrt(lead * lead + 2.0 * sigma * sigma * ell / n)


def delta_bounded(n: int, delta: float, R: float) -> float:
    """Half-width R sqrt(2 ln(2/delta) / n) inverting the bounded-case risk.

    Admissible only for delta >= 2 exp{-n R^2 / 2} (endpoints included):
    below that the Gaussian form cannot certify the requested risk at this
    n, because Delta_n would leave the [0, R^2] validity window.
    """
    _check_common(n, delta)
    if R <= 0.0:
        raise DomainError("R must be > 0")
    floor_delta = 2.0 * math.exp(-0.5 * n * R * R)
    if delta < floor_delta * (1.0 - 1e-12):
        raise DomainError(
            f"delta = {delta} below the admissible floor {floor_delta} for n = {n}, R = {R}"
        )
    return R * math.sqrt(2.0 * math.log(2.0 / delta) / n)


def _log_ratio(z_n0: int, z_n0_plus_n: int) -> float:
    if z_n0 < 1 or z_n0_plus_n < 1:
        raise DomainError("populations must be >= 1")
    return math.log(z_n0_plus_n) - math.log(z_n0)


def ci_mu_bernstein(
    z_n0: int, z_n0_plus_n: int, n: int, delta: float, sigma: float, H: float, n0: int = 0
) -> IntervalResult:
    """[A_n, inf) confidence interval for mu at level 1 - delta.

    Requires the factorial moment growth condition with constant H; sigma
    and H are assumed known.
    """
    d = delta_bernstein(n, delta, sigma, H)
    a_n = _log_ratio(z_n0, z_n0_plus_n) / n - d
    return IntervalResult(kind="mu_lower", a_n=a_n, delta_n=d, delta=delta, n=n, n0=n0)


def ci_mu_bounded(
    z_n0: int, z_n0_plus_n: int, n: int, delta: float, R: float, n0: int = 0
) -> IntervalResult:
    """[A_n, inf) confidence interval for mu when X - mu has range R."""
    d = delta_bounded(n, delta, R)
    a_n = _log_ratio(z_n0, z_n0_plus_n) / n - d
    return IntervalResult(kind="mu_lower", a_n=a_n, delta_n=d, delta=delta, n=n, n0=n0)


def predict_z_bernstein(
    z_n0: int, n: int, mu: float, delta: float, sigma: float, H: float, n0: int = 0
) -> IntervalResult:
    """[1, A_n] prediction interval for Z_{n0+n} at level 1 - delta."""
    if z_n0 < 1:
        raise DomainError("population must be >= 1")
    d = delta_bernstein(n, delta, sigma, H)
    a_n = z_n0 * math.exp(n * (mu + d))
    return IntervalResult(kind="z_upper", a_n=a_n, delta_n=d, delta=delta, n=n, n0=n0)


def predict_z_bounded(
    z_n0: int, n: int, mu: float, delta: float, R: float, n0: int = 0
) -> IntervalResult:
    """[1, A_n] prediction interval for Z_{n0+n} in the bounded case."""
    if z_n0 < 1:
        raise DomainError("population must be >= 1")
    d = delta_bounded(n, delta, R)
    a_n = z_n0 * math.exp(n * (mu + d))
    return IntervalResult(kind="z_upper", a_n=a_n, delta_n=d, delta=delta, n=n, n0=n0)
