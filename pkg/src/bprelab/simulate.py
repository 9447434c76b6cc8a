"""Trajectory simulation with exact log-space bookkeeping.

The population follows Z_{k+1} = sum of Z_k i.i.d. offspring draws from the
law selected by that generation's environment state.  Writing S_k for the
partial sums of ln m(state), every trajectory satisfies the decomposition
ln Z_k = S_k + ln W_k identically, where W is the normalized population
(a mean-one martingale).

Offspring sums are sampled through the multinomial decomposition (counts
per support point), which is exact and costs O(support size) per generation
regardless of the population size.  Populations are advanced in exact
integer arithmetic while at or below ``GrowthPolicy.exact_threshold``;
above it, the policy either rejects the replica or switches to a rounded
conditional-normal approximation with per-step flags.

Each replica derives an independent stream from (seed, replica_id) by
re-keying a counter-based Philox generator, so results are reproducible and
independent of execution order.  Two interchangeable engines consume the
stream identically: a compiled kernel (``bprelab._kernel``) and a
pure-Python fallback, selected at import time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _engine_py
from .errors import DomainError, ThresholdExceeded
from .offspring import EnvironmentModel, MomentProfile, OffspringLaw

try:
    from . import _kernel as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

HAVE_COMPILED_KERNEL = _compiled is not None

# Exact integer populations must stay exactly representable as float64 for
# the engines to agree bit for bit.
_MAX_EXACT = 2**53


@dataclass(frozen=True)
class GrowthPolicy:
    """How to advance populations past the exact-arithmetic threshold.

    ``reject`` aborts the replica (reported, not silently dropped);
    ``clt_approx`` advances by a rounded normal with the exact conditional
    mean and variance, flagging the step.  ``exact_threshold`` times the
    largest offspring value must stay within 2^53.
    """

    exact_threshold: int = 10_000_000
    mode_above_threshold: str = "clt_approx"

    def __post_init__(self):
        if self.exact_threshold < 1:
            raise DomainError("exact_threshold must be >= 1")
        if self.mode_above_threshold not in ("reject", "clt_approx"):
            raise DomainError(f"unknown growth mode {self.mode_above_threshold!r}")


DEFAULT_POLICY = GrowthPolicy()


@dataclass(frozen=True)
class _EnvArrays:
    """Environment unpacked into the flat arrays the engines consume."""

    values_flat: np.ndarray
    probs_flat: np.ndarray
    offsets: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_means: np.ndarray
    cumw: np.ndarray
    cumw_list: tuple
    values_by_state: tuple
    probs_by_state: tuple
    max_support: int


@lru_cache(maxsize=128)
def _env_arrays(env: EnvironmentModel) -> _EnvArrays:
    values_by_state = tuple(np.array(s.values, dtype=np.int64) for s in env.states)
    probs_by_state = tuple(np.array(s.probs, dtype=np.float64) for s in env.states)
    offsets = np.zeros(len(env.states) + 1, dtype=np.int64)
    for i, v in enumerate(values_by_state):
        offsets[i + 1] = offsets[i] + len(v)
    cumw = np.cumsum(np.array(env.weights, dtype=np.float64))
    cumw[-1] = 1.0  # close the last bin exactly
    return _EnvArrays(
        values_flat=np.concatenate(values_by_state),
        probs_flat=np.concatenate(probs_by_state),
        offsets=offsets,
        means=np.array([s.mean for s in env.states], dtype=np.float64),
        variances=np.array([s.variance for s in env.states], dtype=np.float64),
        log_means=np.array(env.log_means, dtype=np.float64),
        cumw=cumw,
        cumw_list=tuple(cumw.tolist()),
        values_by_state=values_by_state,
        probs_by_state=probs_by_state,
        max_support=max(len(v) for v in values_by_state),
    )


def resolve_engine(engine: str = "auto") -> str:
    """Map an engine request to a concrete engine name."""
    if engine == "auto":
        return "cython" if HAVE_COMPILED_KERNEL else "python"
    if engine == "cython":
        if not HAVE_COMPILED_KERNEL:
            raise DomainError("compiled kernel unavailable; build the extension or use engine='python'")
        return "cython"
    if engine == "python":
        return "python"
    raise DomainError(f"unknown engine {engine!r}")


@lru_cache(maxsize=64)
def _root_key(seed: int) -> tuple:
    return tuple(int(v) for v in np.random.SeedSequence(seed).generate_state(2, np.uint64))


def replica_key(seed: int, replica_id: int) -> np.ndarray:
    """128-bit Philox key for one replica: root key offset by the replica id."""
    root = _root_key(int(seed))
    key = np.array(root, dtype=np.uint64)
    key[0] = np.uint64((root[0] + int(replica_id)) % (1 << 64))
    return key


def replica_bitgen(seed: int, replica_id: int) -> np.random.Philox:
    return np.random.Philox(key=replica_key(seed, replica_id))


def replica_generator(seed: int, replica_id: int) -> np.random.Generator:
    """Independent, order-insensitive random stream for one replica."""
    return np.random.Generator(replica_bitgen(seed, replica_id))


class _StreamPool:
    """Reuses one Philox instance across replicas by re-keying its state.

    Equivalent to constructing ``Philox(key=replica_key(seed, i))`` per
    replica (fresh counter, empty buffer) but avoids the per-instance
    entropy gathering, which dominates batch runtimes otherwise.
    """

    def __init__(self, seed: int):
        self._root = _root_key(int(seed))
        self._bg = np.random.Philox(key=np.array(self._root, dtype=np.uint64))
        self._state = self._bg.state

    def bitgen(self, replica_id: int) -> np.random.Philox:
        st = self._state
        st["state"]["key"][0] = np.uint64((self._root[0] + int(replica_id)) % (1 << 64))
        st["state"]["key"][1] = np.uint64(self._root[1])
        st["state"]["counter"][:] = 0
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self._bg


def offspring_sum_sample(law: OffspringLaw, z: int, rng: np.random.Generator) -> int:
    """Exact sample of the sum of ``z`` i.i.d. draws from ``law``.

    Samples the multinomial vector of per-support-point counts and returns
    sum(count_j * value_j), which has exactly the distribution of z
    individual draws.
    """
    if z < 1:
        raise DomainError("population must be >= 1")
    values = np.array(law.values, dtype=np.int64)
    probs = np.array(law.probs, dtype=np.float64)
    counts = rng.multinomial(z, probs)
    return int(counts @ values)


def _check_policy(env: EnvironmentModel, policy: GrowthPolicy) -> None:
    if policy.exact_threshold * env.max_value > _MAX_EXACT:
        raise DomainError(
            "exact_threshold * max offspring value exceeds 2^53; "
            "exact populations would not be representable"
        )


def _run_replica(env_data, n_steps, policy, bitgen, engine, z_row, env_row, approx_row, counts_buf):
    clt = policy.mode_above_threshold == "clt_approx"
    if engine == "cython":
        return _compiled.simulate_into(
            bitgen.capsule,
            z_row,
            env_row,
            approx_row,
            counts_buf,
            env_data.values_flat,
            env_data.probs_flat,
            env_data.offsets,
            env_data.means,
            env_data.variances,
            env_data.cumw,
            float(policy.exact_threshold),
            clt,
        )
    return _engine_py.simulate_into(
        bitgen, z_row, env_row, approx_row, env_data, policy.exact_threshold, clt
    )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One realized path with exact log-space bookkeeping.

    ``z`` are exact integers (the flagged steps are the integer-rounded
    values of the normal approximation).  ``s`` holds the environment walk
    S_k, ``ln_w`` = ln Z_k - S_k, so the decomposition holds identically.
    ``approx_flag[k]`` marks whether the step producing Z_k used the
    approximation; index 0 is always False.
    """

    z: tuple
    env_idx: tuple
    s: np.ndarray
    ln_z: np.ndarray
    ln_w: np.ndarray
    approx_flag: np.ndarray

    @property
    def n_generations(self) -> int:
        return len(self.z) - 1

    @property
    def w(self) -> np.ndarray:
        return np.exp(self.ln_w)

    def is_exact(self) -> bool:
        return not bool(self.approx_flag.any())


def _build_trajectory(env_data, z_row, env_row, approx_row) -> Trajectory:
    ln_z = np.log(z_row)
    s = np.concatenate(([0.0], np.cumsum(env_data.log_means[env_row])))
    return Trajectory(
        z=tuple(int(v) for v in z_row),
        env_idx=tuple(int(e) for e in env_row),
        s=s,
        ln_z=ln_z,
        ln_w=ln_z - s,
        approx_flag=approx_row.astype(bool),
    )


def simulate_trajectory(
    env: EnvironmentModel,
    n_generations: int,
    policy: GrowthPolicy = DEFAULT_POLICY,
    seed: int = 0,
    replica_id: int = 0,
    engine: str = "auto",
) -> Trajectory:
    """Simulate Z_0 .. Z_N and the associated walk for one replica."""
    if n_generations < 1:
        raise DomainError("n_generations must be >= 1")
    _check_policy(env, policy)
    engine = resolve_engine(engine)
    env_data = _env_arrays(env)
    z_row = np.empty(n_generations + 1, dtype=np.float64)
    env_row = np.empty(n_generations, dtype=np.int64)
    approx_row = np.empty(n_generations + 1, dtype=np.uint8)
    counts_buf = np.empty(env_data.max_support, dtype=np.int64)
    status = _run_replica(
        env_data, n_generations, policy, replica_bitgen(seed, replica_id), engine,
        z_row, env_row, approx_row, counts_buf,
    )
    if status:
        raise ThresholdExceeded(
            f"population exceeded exact_threshold={policy.exact_threshold} "
            f"at generation {status - 1} under the reject policy"
        )
    return _build_trajectory(env_data, z_row, env_row, approx_row)


@dataclass(frozen=True)
class StandardizedStat:
    """Realization of (ln(Z_{n0+n}/Z_{n0}) - n*mu) / (sigma*sqrt(n))."""

    value: float


def standardized_statistic(
    traj: Trajectory, n0: int, n: int, profile: MomentProfile
) -> StandardizedStat:
    if n0 < 0 or n < 1 or n0 + n > traj.n_generations:
        raise DomainError(f"need 0 <= n0, 1 <= n, n0+n <= {traj.n_generations}")
    value = (traj.ln_z[n0 + n] - traj.ln_z[n0] - n * profile.mu) / (
        profile.sigma * math.sqrt(n)
    )
    return StandardizedStat(value=float(value))


@dataclass(frozen=True, eq=False)
class GrowthSample:
    """Batch of per-replica endpoint summaries for tail and coverage runs.

    Rejected replicas carry NaN in the value arrays and True in
    ``rejected``.  ``approx_any`` marks replicas with at least one
    approximate step.  ``s_n0``/``s_end`` are filled only when requested.
    """

    n0: int
    n: int
    replicas: int
    seed: int
    ln_z_n0: np.ndarray
    ln_z_end: np.ndarray
    s_n0: np.ndarray
    s_end: np.ndarray
    approx_any: np.ndarray
    rejected: np.ndarray

    @property
    def ln_ratio(self) -> np.ndarray:
        return self.ln_z_end - self.ln_z_n0

    @property
    def completed(self) -> np.ndarray:
        return ~self.rejected

    @property
    def n_completed(self) -> int:
        return int(np.count_nonzero(self.completed))

    @property
    def n_rejected(self) -> int:
        return int(np.count_nonzero(self.rejected))

    @property
    def n_exact(self) -> int:
        return int(np.count_nonzero(self.completed & ~self.approx_any))

    def statistic(self, scale: str, mu: float, sigma: float | None = None) -> np.ndarray:
        """Per-replica statistic on the requested scale (NaN where rejected)."""
        if scale == "standardized":
            if sigma is None or sigma <= 0.0:
                raise DomainError("standardized scale needs sigma > 0")
            return (self.ln_ratio - self.n * mu) / (sigma * math.sqrt(self.n))
        if scale == "per_generation":
            return self.ln_ratio / self.n - mu
        raise DomainError(f"unknown scale {scale!r}")


def sample_growth(
    env: EnvironmentModel,
    n0: int,
    n: int,
    replicas: int,
    seed: int,
    policy: GrowthPolicy = DEFAULT_POLICY,
    engine: str = "auto",
    track_s: bool = False,
) -> GrowthSample:
    """Simulate ``replicas`` independent paths, keeping endpoint summaries.

    Replica i uses the stream keyed by (seed, i); execution order is
    irrelevant to the result.
    """
    if n0 < 0 or n < 1:
        raise DomainError("need n0 >= 0 and n >= 1")
    if replicas < 1:
        raise DomainError("replicas must be >= 1")
    _check_policy(env, policy)
    engine = resolve_engine(engine)
    env_data = _env_arrays(env)
    n_steps = n0 + n

    z_n0 = np.full(replicas, np.nan)
    z_end = np.full(replicas, np.nan)
    s_n0 = np.full(replicas, np.nan)
    s_end = np.full(replicas, np.nan)
    approx_any = np.zeros(replicas, dtype=bool)
    rejected = np.zeros(replicas, dtype=bool)

    z_row = np.empty(n_steps + 1, dtype=np.float64)
    env_row = np.empty(n_steps, dtype=np.int64)
    approx_row = np.empty(n_steps + 1, dtype=np.uint8)
    counts_buf = np.empty(env_data.max_support, dtype=np.int64)
    log_means = env_data.log_means
    streams = _StreamPool(seed)

    for i in range(replicas):
        status = _run_replica(
            env_data, n_steps, policy, streams.bitgen(i), engine,
            z_row, env_row, approx_row, counts_buf,
        )
        if status:
            rejected[i] = True
            continue
        z_n0[i] = z_row[n0]
        z_end[i] = z_row[n_steps]
        approx_any[i] = bool(approx_row.any())
        if track_s:
            step_lm = log_means[env_row]
            s_n0[i] = step_lm[:n0].sum()
            s_end[i] = step_lm.sum()

    with np.errstate(invalid="ignore"):
        ln_z_n0 = np.log(z_n0)
        ln_z_end = np.log(z_end)
    return GrowthSample(
        n0=n0,
        n=n,
        replicas=replicas,
        seed=seed,
        ln_z_n0=ln_z_n0,
        ln_z_end=ln_z_end,
        s_n0=s_n0,
        s_end=s_end,
        approx_any=approx_any,
        rejected=rejected,
    )
