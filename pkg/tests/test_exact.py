import math
from fractions import Fraction

import numpy as np
import pytest

from bprelab import Degenerate, InfeasibleEnumeration
from bprelab.exact import (
    _enumerate_sequences,
    exact_statistic_distribution,
    exact_tail,
)
from bprelab.harness import estimate_tail
from bprelab.offspring import central_moment


def _annealed_pmf_step(pmf, env, z_cap):
    """Independent oracle: annealed one-step transition, mixing the states
    inside the step instead of enumerating sequences."""
    out = {}
    for z, pz in pmf.items():
        for law, w in zip(env.states, env.weights):
            vec = {0: 1.0}
            for _ in range(z):  # brute-force z-fold convolution
                nxt = {}
                for total, q in vec.items():
                    for v, pv in law.support:
                        nxt[total + v] = nxt.get(total + v, 0.0) + q * pv
                vec = nxt
            for total, q in vec.items():
                if total <= z_cap:
                    out[total] = out.get(total, 0.0) + pz * w * q
    return out


def _annealed_tail(env, n0, n, x, scale="standardized"):
    """P(statistic >= x) through the annealed population chain."""
    mu = env.mu
    if scale == "standardized":
        denom = math.sqrt(central_moment(env, 2)) * math.sqrt(n)

        def stat(a, b):
            return (math.log(b) - math.log(a) - n * mu) / denom
    else:

        def stat(a, b):
            return (math.log(b) - math.log(a)) / n - mu

    prefix = {1: 1.0}
    for _ in range(n0):
        prefix = _annealed_pmf_step(prefix, env, 10**9)
    total = 0.0
    for a, pa in prefix.items():
        pmf = {a: 1.0}
        for _ in range(n):
            pmf = _annealed_pmf_step(pmf, env, 10**9)
        total += pa * sum(pb for b, pb in pmf.items() if stat(a, b) >= x)
    return total


def _binomial_tail_fraction(n, k):
    """Exact P(Binomial(n, 1/2) >= k) as a float of the exact rational."""
    if k <= 0:
        return 1.0
    total = sum(math.comb(n, j) for j in range(k, n + 1))
    return float(Fraction(total, 2**n))


class TestDoublingEnv:
    def test_point_mass_tail(self, doubling_env):
        # per-generation statistic is identically 0
        for n in (1, 3):
            assert exact_tail(doubling_env, 0, n, -0.5, scale="per_generation").prob == 1.0
            assert exact_tail(doubling_env, 0, n, 0.0, scale="per_generation").prob == 1.0
            assert exact_tail(doubling_env, 0, n, 1e-9, scale="per_generation").prob == 0.0

    def test_standardized_scale_degenerate(self, doubling_env):
        with pytest.raises(Degenerate):
            exact_tail(doubling_env, 0, 2, 0.5)


class TestM2BinomialOracle:
    @pytest.mark.parametrize("n0,n", [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])
    def test_matches_closed_form(self, m2, n0, n):
        # ln(Z ratio) = (binomial count) * ln 2, independent of the prefix
        mu = m2.mu
        sigma = math.sqrt(central_moment(m2, 2))
        for k in range(n + 1):
            x = (k * math.log(2) - n * mu) / (sigma * math.sqrt(n))
            expected = _binomial_tail_fraction(n, k)
            got = exact_tail(m2, n0, n, x).prob
            assert got == pytest.approx(expected, abs=1e-12)

    def test_total_mass_exact(self, m2):
        dist = exact_statistic_distribution(m2, 1, 3)
        assert dist.total_mass == pytest.approx(1.0, abs=1e-12)
        assert dist.truncated_mass == 0.0


class TestAgainstAnnealedOracle:
    @pytest.mark.parametrize("n0,n", [(0, 2), (1, 2), (2, 1)])
    def test_m1_joint_tails(self, m1, n0, n):
        dist = exact_statistic_distribution(m1, n0, n)
        for x in (-2.0, -0.5, 0.0, 0.3, 1.0, 2.5):
            assert dist.tail(x) == pytest.approx(_annealed_tail(m1, n0, n, x), abs=1e-12)

    def test_m3_per_generation(self, m3):
        dist = exact_statistic_distribution(m3, 1, 2, scale="per_generation")
        for x in (-0.5, 0.0, 0.2):
            assert dist.tail(x) == pytest.approx(
                _annealed_tail(m3, 1, 2, x, scale="per_generation"), abs=1e-12
            )


class TestSequenceInvariants:
    def test_per_sequence_mass_conserved(self, m1):
        for seq, weight, atoms, escaped in _enumerate_sequences(m1, 1, 3, z_cap=10**6):
            assert escaped == 0.0
            assert sum(atoms.values()) == pytest.approx(1.0, abs=1e-10)

    def test_sequence_weights_sum_to_one(self, m1):
        weights = [w for _, w, _, _ in _enumerate_sequences(m1, 1, 2, z_cap=10**6)]
        assert math.fsum(weights) == pytest.approx(1.0, abs=1e-12)

    def test_tail_monotone_in_x(self, m1):
        dist = exact_statistic_distribution(m1, 1, 3)
        grid = np.linspace(-3, 3, 101)
        tails = [dist.tail(x) for x in grid]
        assert all(b <= a + 1e-15 for a, b in zip(tails, tails[1:]))

    def test_truncation_brackets_truth(self, m1):
        exact_statistic_distribution.cache_clear()
        full = exact_tail(m1, 0, 3, 0.2)
        capped = exact_tail(m1, 0, 3, 0.2, z_cap=6)
        assert capped.truncated_mass > 0.0
        assert capped.prob <= full.prob <= capped.prob_upper

    def test_infeasible_budget(self, m1):
        with pytest.raises(InfeasibleEnumeration):
            exact_tail(m1, 0, 3, 0.0, max_sequences=4)


class TestCrossValidationWithMonteCarlo:
    def test_m1_small_instance(self, m1):
        # spot check ahead of the full acceptance sweep
        est = estimate_tail(m1, 1, 2, 0.5, replicas=20_000, seed=99)
        truth = exact_tail(m1, 1, 2, 0.5).prob
        assert abs(est.p_hat - truth) <= 3 * est.std_err
