"""Non-asymptotic tail bounds for the log population growth.

All bounds control one-sided tails of the growth of ln Z along the run
from generation n0 to n0+n, under moment conditions on X = ln m(state).
Two scales appear:

* standardized:    P( (ln(Z_{n0+n}/Z_{n0}) - n mu) / (sigma sqrt(n)) >= x )
* per_generation:  P( (1/n) ln(Z_{n0+n}/Z_{n0}) - mu >= x )

Each operation returns the bound both raw (it may exceed 1 for small x;
monotonicity tests need the raw value) and clamped at 1.  Thresholds at
x = 0 are evaluated by continuity.  Every formula keeps its constants
explicit so the Monte Carlo harness can check domination pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError
from .offspring import MomentProfile

STANDARDIZED = "standardized"
PER_GENERATION = "per_generation"


@dataclass(frozen=True, eq=False)
class BoundValue:
    """A bound evaluation: raw value plus its named additive components."""

    value: float
    components: dict = field(default_factory=dict)

    @property
    def clamped(self) -> float:
        return min(1.0, self.value)


def _make(components: dict) -> BoundValue:
    return BoundValue(value=math.fsum(components.values()), components=components)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


# ---------------------------------------------------------------------------
# standardized-scale bounds


def bernstein_bound(x: float, n: int, sigma: float, H: float) -> BoundValue:
    """Bernstein-type bound 2 exp{-x^2 / (2 (1 + 6(1+H) x/(sigma sqrt n)))}.

    Valid when X - mu satisfies the factorial moment growth condition with
    constant H.  Behaves like 2 exp{-x^2/2} for x = o(sqrt n) and like
    2 exp{-c x sqrt n} for x >= sqrt n.
    """
    _require(x >= 0.0, "x must be >= 0")
    _require(n >= 1, "n must be >= 1")
    _require(sigma > 0.0 and H > 0.0, "sigma and H must be > 0")
    denom = 2.0 * (1.0 + 6.0 * (1.0 + H) * x / (sigma * math.sqrt(n)))
    return _make({"exponential_term": 2.0 * math.exp(-x * x / denom)})


def semi_exp_bound(x: float, n: int, sigma: float, alpha: float, u: float) -> BoundValue:
    """Semi-exponential moment bound 3 exp{-x^2 / (8(u + (sigma sqrt n)^-alpha x^(2-alpha)))}.

    ``u`` is the semi-exponential functional of X - mu (always >= 1).
    Sub-Gaussian, of order 3 exp{-x^2/(8u)}, in the moderate range
    x = o(n^(alpha/(4-2alpha))); semi-exponential beyond it.
    """
    _require(x >= 0.0, "x must be >= 0")
    _require(n >= 1, "n must be >= 1")
    _require(sigma > 0.0, "sigma must be > 0")
    _require(0.0 < alpha < 1.0, "alpha must lie in (0, 1)")
    _require(u >= 1.0, "u must be >= 1")
    denom = 8.0 * (u + (sigma * math.sqrt(n)) ** (-alpha) * x ** (2.0 - alpha))
    return _make({"exponential_term": 3.0 * math.exp(-x * x / denom)})


def fuk_nagaev_bound(x: float, n: int, p: float, std_abs_p_moment: float) -> BoundValue:
    """Fuk-Nagaev mixed bound exp{-x^2/(2 V^2)} + C_p / (n^((p-2)/2) x^p).

    V^2 = (p+2)^2 e^p and C_p = 2^(p+1) (1 + 2/p)^p E|(X-mu)/sigma|^p, for
    p >= 2.  The polynomial term diverges at x = 0, hence x > 0.
    """
    _require(x > 0.0, "x must be > 0: the polynomial term diverges at 0")
    _require(n >= 1, "n must be >= 1")
    _require(p >= 2.0, "p must be >= 2")
    _require(std_abs_p_moment > 0.0, "standardized absolute moment must be > 0")
    v2 = (p + 2.0) ** 2 * math.exp(p)
    c_p = 2.0 ** (p + 1.0) * (1.0 + 2.0 / p) ** p * std_abs_p_moment
    return _make(
        {
            "gaussian_term": math.exp(-x * x / (2.0 * v2)),
            "polynomial_term": c_p / (n ** ((p - 2.0) / 2.0) * x**p),
        }
    )


# ---------------------------------------------------------------------------
# per-generation-scale bounds


def von_bahr_esseen_bound(x: float, n: int, p: float, abs_p_moment: float) -> BoundValue:
    """Purely polynomial bound C_p / (x^p n^(p-1)) for p in (1, 2].

    C_p = 2^(p+1) E|X-mu|^p + (2p)^p e^-p.  Needs only a p-th absolute
    moment (the variance may not exist), so it is stated on the
    per-generation scale.
    """
    _require(x > 0.0, "x must be > 0")
    _require(n >= 1, "n must be >= 1")
    _require(1.0 < p <= 2.0, "p must lie in (1, 2]")
    _require(abs_p_moment > 0.0, "absolute moment must be > 0")
    c_p = 2.0 ** (p + 1.0) * abs_p_moment + (2.0 * p) ** p * math.exp(-p)
    return _make({"polynomial_term": c_p / (x**p * n ** (p - 1.0))})


# ---------------------------------------------------------------------------
# bounded-increment bounds (Hoeffding / Rio / Azuma family)


def _bennett_shape(t: float) -> float:
    """(1 + 1/t) ln(1 + t) - 1, extended by continuity to 0 at t = 0.

    Equals sum_{k>=1} (-1)^(k+1) t^k / (k (k+1)); the series is used below
    t = 1e-4, where the direct form loses precision to cancellation.
    """
    if t < 0.0:
        raise DomainError("t must be >= 0")
    if t < 1e-4:
        return t * (1.0 / 2.0 - t * (1.0 / 6.0 - t * (1.0 / 12.0 - t / 20.0)))
    return (1.0 + 1.0 / t) * math.log1p(t) - 1.0


@dataclass(frozen=True, eq=False)
class HoeffdingBound:
    """Sharp (Bennett-form) and relaxed (Bernstein-form) variants."""

    sharp: BoundValue
    relaxed: BoundValue


def hoeffding_bound(x: float, n: int, sigma: float, H: float) -> HoeffdingBound:
    """Hoeffding-type bound for X bounded above: X <= mu + H.

    With t = Hx/(2 sigma sqrt n), the sharp exponent is
    (sigma sqrt(n) x / (2H)) * ((1 + 1/t) ln(1 + t) - 1) and the relaxed
    exponent is x^2 / (8 (1 + t/3)); sharp >= relaxed pointwise, so the
    sharp bound is tighter.  For 0 <= x <= sigma sqrt(n)/2 the bound is
    2 exp{-exponent}; above that threshold the coefficient drops to 1 and
    the additive martingale term exp{-x sigma sqrt(n)/2} appears.
    """
    _require(x >= 0.0, "x must be >= 0")
    _require(n >= 1, "n must be >= 1")
    _require(sigma > 0.0 and H > 0.0, "sigma and H must be > 0")
    root = sigma * math.sqrt(n)
    t = H * x / (2.0 * root)
    exp_sharp = (root * x / (2.0 * H)) * _bennett_shape(t)
    exp_relaxed = x * x / (8.0 * (1.0 + t / 3.0))
    if x <= root / 2.0:
        return HoeffdingBound(
            sharp=_make({"exponential_term": 2.0 * math.exp(-exp_sharp), "martingale_term": 0.0}),
            relaxed=_make({"exponential_term": 2.0 * math.exp(-exp_relaxed), "martingale_term": 0.0}),
        )
    tail = math.exp(-x * root / 2.0)
    return HoeffdingBound(
        sharp=_make({"exponential_term": math.exp(-exp_sharp), "martingale_term": tail}),
        relaxed=_make({"exponential_term": math.exp(-exp_relaxed), "martingale_term": tail}),
    )


def rio_psi1(x: float, R: float) -> float:
    """x^2/(2 R^2) + x^4/(36 R^4)."""
    return x * x / (2.0 * R * R) + x**4 / (36.0 * R**4)


def rio_psi2(x: float, R: float) -> float:
    """(x^2/(4 R^2) - x/R) ln(1 - x/(2R)); nonnegative on [0, 2R).

    The prefactor is negative there and so is the logarithm, hence the
    product is >= 0.
    """
    if not 0.0 <= x < 2.0 * R:
        raise DomainError("x must lie in [0, 2R)")
    if x == 0.0:
        return 0.0
    return (x * x / (4.0 * R * R) - x / R) * math.log1p(-x / (2.0 * R))


@dataclass(frozen=True, eq=False)
class RioBound:
    """Exponent form (max of psi_1, psi_2) and the factored product form."""

    sharp: BoundValue
    factored: BoundValue


def rio_bound(x: float, n: int, R: float) -> RioBound:
    """Rio-type bound for X - mu with total range R, on [0, 2R).

    sharp    = exp{-n max(psi_1, psi_2)} + exp{-nx/2}
    factored = (1 - x/(2R))^((nx/R)(1 - x/(4R))) + exp{-nx/2}

    The factored main term equals exp{-n psi_2} exactly, so sharp <=
    factored pointwise.
    """
    _require(n >= 1, "n must be >= 1")
    _require(R > 0.0, "R must be > 0")
    if not 0.0 <= x < 2.0 * R:
        raise DomainError("x must lie in [0, 2R): psi_2 is undefined beyond")
    martingale = math.exp(-0.5 * n * x)
    exponent = n * max(rio_psi1(x, R), rio_psi2(x, R))
    if x == 0.0:
        product = 1.0
    else:
        product = math.exp((n * x / R) * (1.0 - x / (4.0 * R)) * math.log1p(-x / (2.0 * R)))
    return RioBound(
        sharp=_make({"exponential_term": math.exp(-exponent), "martingale_term": martingale}),
        factored=_make({"product_term": product, "martingale_term": martingale}),
    )


def rio_corollary_bound(x: float, n: int, R: float) -> BoundValue:
    """exp{-n x^2/(2 R^2)} + exp{-n x/2}, valid for all x >= 0."""
    _require(x >= 0.0, "x must be >= 0")
    _require(n >= 1, "n must be >= 1")
    _require(R > 0.0, "R must be > 0")
    return _make(
        {
            "gaussian_term": math.exp(-n * x * x / (2.0 * R * R)),
            "martingale_term": math.exp(-0.5 * n * x),
        }
    )


def azuma_hoeffding_bound(x: float, n: int, R: float) -> BoundValue:
    """2 exp{-n x^2/(2 R^2)} for 0 <= x <= R^2.

    On that range the martingale term of the corollary is dominated by the
    Gaussian term, which yields the doubled single-term form.
    """
    _require(n >= 1, "n must be >= 1")
    _require(R > 0.0, "R must be > 0")
    if not 0.0 <= x <= R * R:
        raise DomainError("x must lie in [0, R^2]")
    return _make({"gaussian_term": 2.0 * math.exp(-n * x * x / (2.0 * R * R))})


def rio_remark_check(x: float, n: int) -> bool:
    """True iff (1-x)^(n x (2-x)) <= exp{-2 n x^2} for x in [0, 1].

    Self-test of the product-to-Gaussian comparison used to derive the
    corollary from the factored Rio form.
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError("x must lie in [0, 1]")
    _require(n >= 1, "n must be >= 1")
    if x == 0.0 or x == 1.0:
        return True
    # compare exponents: n x (2-x) ln(1-x) <= -2 n x^2
    return n * x * (2.0 - x) * math.log1p(-x) <= -2.0 * n * x * x


# ---------------------------------------------------------------------------
# scale conversions and the theorem registry


def standardized_from_per_generation(x_pg: float, n: int, sigma: float) -> float:
    """Threshold conversion: the per-generation event {mean log growth -
    mu >= x_pg} equals the standardized event at x_pg sqrt(n) / sigma."""
    return x_pg * math.sqrt(n) / sigma


def per_generation_from_standardized(x_std: float, n: int, sigma: float) -> float:
    return x_std * sigma / math.sqrt(n)


@dataclass(frozen=True)
class TheoremInfo:
    """Registry entry: how to evaluate one bound from a moment profile."""

    theorem_id: str
    scale: str
    evaluate: object
    domain_sup: object  # callable(profile) -> least upper bound of valid x (math.inf if none)
    open_at_zero: bool  # True when x = 0 is outside the domain
    open_at_sup: bool = False  # True when the upper end itself is outside


def _eval_bernstein(x, n, profile: MomentProfile) -> BoundValue:
    return bernstein_bound(x, n, profile.sigma, profile.bernstein_H)


def _eval_semi_exp(x, n, profile: MomentProfile) -> BoundValue:
    return semi_exp_bound(x, n, profile.sigma, profile.alpha, profile.u)


def _eval_fuk_nagaev(x, n, profile: MomentProfile) -> BoundValue:
    return fuk_nagaev_bound(x, n, profile.p, profile.std_abs_p_moment)


def _eval_vbe(x, n, profile: MomentProfile) -> BoundValue:
    return von_bahr_esseen_bound(x, n, profile.p, profile.abs_p_moment)


def _eval_hoeffding_sharp(x, n, profile: MomentProfile) -> BoundValue:
    return hoeffding_bound(x, n, profile.sigma, profile.upper).sharp


def _eval_hoeffding_relaxed(x, n, profile: MomentProfile) -> BoundValue:
    return hoeffding_bound(x, n, profile.sigma, profile.upper).relaxed


def _eval_rio_sharp(x, n, profile: MomentProfile) -> BoundValue:
    return rio_bound(x, n, profile.range).sharp


def _eval_rio_factored(x, n, profile: MomentProfile) -> BoundValue:
    return rio_bound(x, n, profile.range).factored


def _eval_rio_corollary(x, n, profile: MomentProfile) -> BoundValue:
    return rio_corollary_bound(x, n, profile.range)


def _eval_azuma(x, n, profile: MomentProfile) -> BoundValue:
    return azuma_hoeffding_bound(x, n, profile.range)


THEOREMS: dict = {
    t.theorem_id: t
    for t in (
        TheoremInfo("bernstein", STANDARDIZED, _eval_bernstein, lambda p: math.inf, False),
        TheoremInfo("semi_exp", STANDARDIZED, _eval_semi_exp, lambda p: math.inf, False),
        TheoremInfo("fuk_nagaev", STANDARDIZED, _eval_fuk_nagaev, lambda p: math.inf, True),
        TheoremInfo("von_bahr_esseen", PER_GENERATION, _eval_vbe, lambda p: math.inf, True),
        TheoremInfo("hoeffding_sharp", STANDARDIZED, _eval_hoeffding_sharp, lambda p: math.inf, False),
        TheoremInfo("hoeffding_relaxed", STANDARDIZED, _eval_hoeffding_relaxed, lambda p: math.inf, False),
        TheoremInfo("rio_sharp", PER_GENERATION, _eval_rio_sharp, lambda p: 2.0 * p.range, False, True),
        TheoremInfo("rio_factored", PER_GENERATION, _eval_rio_factored, lambda p: 2.0 * p.range, False, True),
        TheoremInfo("rio_corollary", PER_GENERATION, _eval_rio_corollary, lambda p: math.inf, False),
        TheoremInfo("azuma_hoeffding", PER_GENERATION, _eval_azuma, lambda p: p.range**2, False),
    )
}

ALL_THEOREM_IDS = tuple(THEOREMS)


def evaluate_theorem(theorem_id: str, x: float, n: int, profile: MomentProfile) -> BoundValue:
    try:
        info = THEOREMS[theorem_id]
    except KeyError:
        raise DomainError(f"unknown theorem {theorem_id!r}") from None
    return info.evaluate(x, n, profile)
