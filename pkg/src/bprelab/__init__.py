"""Branching processes in i.i.d. random environments.

Simulation with exact log-space bookkeeping, non-asymptotic deviation
bounds for the log population growth with explicit constants, one-sided
confidence/prediction intervals built from those bounds, an exact
small-instance enumeration oracle, and a Monte Carlo harness that verifies
every bound and interval empirically.
"""

from .errors import (
    BpreError,
    ConfigError,
    Degenerate,
    DomainError,
    HypothesisUnmet,
    InfeasibleEnumeration,
    NotNormalized,
    NotSupercritical,
    ThresholdExceeded,
    ZeroOffspring,
)
from .offspring import (
    EnvironmentModel,
    MomentProfile,
    OffspringLaw,
    benchmark_environment,
    make_environment,
    make_offspring_law,
    minimal_bernstein_H,
    moment_profile,
)
from .simulate import (
    HAVE_COMPILED_KERNEL,
    GrowthPolicy,
    StandardizedStat,
    Trajectory,
    offspring_sum_sample,
    replica_generator,
    sample_growth,
    simulate_trajectory,
    standardized_statistic,
)

__version__ = "0.1.0"

__all__ = [
    "BpreError",
    "ConfigError",
    "Degenerate",
    "DomainError",
    "EnvironmentModel",
    "GrowthPolicy",
    "HAVE_COMPILED_KERNEL",
    "HypothesisUnmet",
    "InfeasibleEnumeration",
    "MomentProfile",
    "NotNormalized",
    "NotSupercritical",
    "OffspringLaw",
    "StandardizedStat",
    "ThresholdExceeded",
    "Trajectory",
    "ZeroOffspring",
    "benchmark_environment",
    "make_environment",
    "make_offspring_law",
    "minimal_bernstein_H",
    "moment_profile",
    "offspring_sum_sample",
    "replica_generator",
    "sample_growth",
    "simulate_trajectory",
    "standardized_statistic",
]
