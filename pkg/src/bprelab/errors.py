"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` so that CLI callers
can assert on failure causes without parsing messages.
"""


class BpreError(Exception):
    """Base class for all package errors."""

    code = "ERROR"


class ZeroOffspring(BpreError):
    """An offspring law has a support point at 0 (extinction must be impossible)."""

    code = "ZERO_OFFSPRING"


class NotNormalized(BpreError):
    """Probabilities do not sum to 1 within tolerance."""

    code = "NOT_NORMALIZED"


class NotSupercritical(BpreError):
    """The environment's mean log growth rate is not strictly positive."""

    code = "NOT_SUPERCRITICAL"


class Degenerate(BpreError):
    """The log mean offspring count is almost surely constant (zero variance)."""

    code = "DEGENERATE"


class ThresholdExceeded(BpreError):
    """Population passed the exact-arithmetic threshold under a reject policy."""

    code = "THRESHOLD_EXCEEDED"


class InfeasibleEnumeration(BpreError):
    """Exact enumeration would exceed the configured state-sequence budget."""

    code = "INFEASIBLE_ENUMERATION"


class HypothesisUnmet(BpreError):
    """A theorem's moment hypothesis does not hold for the supplied inputs."""

    code = "HYPOTHESIS_UNMET"


class DomainError(BpreError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""

    code = "DOMAIN_ERROR"


class ConfigError(BpreError):
    """Experiment configuration failed to parse or validate."""

    code = "CONFIG_PARSE"
