import math
import random

import numpy as np
import pytest

from bprelab import (
    DomainError,
    GrowthPolicy,
    MomentProfile,
    ThresholdExceeded,
    make_environment,
    make_offspring_law,
    offspring_sum_sample,
    replica_generator,
    sample_growth,
    simulate_trajectory,
    standardized_statistic,
)
from bprelab.simulate import HAVE_COMPILED_KERNEL

ENGINES = ["python"] + (["cython"] if HAVE_COMPILED_KERNEL else [])


def _fake_profile(mu, sigma2):
    return MomentProfile(
        mu=mu, sigma2=sigma2, bernstein_H=1.0, alpha=0.5, u=1.0, p=2.0,
        abs_p_moment=sigma2, std_abs_p_moment=1.0, lower=-1.0, upper=1.0,
    )


class TestOffspringSumSample:
    def test_point_mass_deterministic(self):
        law = make_offspring_law([(2, 1.0)])
        rng = replica_generator(0, 0)
        assert all(offspring_sum_sample(law, 5, rng) == 10 for _ in range(20))

    def test_two_fold_convolution_frequencies(self):
        # z = 2 draws from {1: .5, 2: .5}: sum in {2, 3, 4} w.p. .25/.5/.25
        law = make_offspring_law([(1, 0.5), (2, 0.5)])
        rng = replica_generator(7, 0)
        n = 40_000
        counts = {2: 0, 3: 0, 4: 0}
        for _ in range(n):
            counts[offspring_sum_sample(law, 2, rng)] += 1
        for value, prob in ((2, 0.25), (3, 0.5), (4, 0.25)):
            se = math.sqrt(prob * (1 - prob) / n)
            assert abs(counts[value] / n - prob) <= 4 * se

    def test_large_population_mean(self):
        # CLT sanity: mean of output/z over 1000 replicas close to the law mean
        law = make_offspring_law([(1, 0.5), (2, 0.5)])
        z = 10**6
        vals = []
        for rid in range(1000):
            rng = replica_generator(11, rid)
            vals.append(offspring_sum_sample(law, z, rng) / z)
        se = math.sqrt(0.25 / z) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - 1.5) <= 4 * se

    def test_population_validation(self):
        law = make_offspring_law([(2, 1.0)])
        with pytest.raises(DomainError):
            offspring_sum_sample(law, 0, replica_generator(0, 0))


class TestSimulateTrajectory:
    @pytest.mark.parametrize("engine", ENGINES)
    def test_deterministic_doubling(self, doubling_env, engine):
        traj = simulate_trajectory(doubling_env, 4, seed=0, engine=engine)
        assert traj.z == (1, 2, 4, 8, 16)
        assert np.all(traj.ln_w == 0.0)

    @pytest.mark.parametrize("engine", ENGINES)
    def test_m2_quenched_deterministic(self, m2, engine):
        # deterministic per-state offspring: W identically 1
        for rid in range(10):
            traj = simulate_trajectory(m2, 3, seed=5, replica_id=rid, engine=engine)
            assert np.all(traj.ln_w == 0.0)
            assert traj.ln_z[3] == traj.s[3]

    def test_decomposition_residual(self, m1):
        pol = GrowthPolicy(exact_threshold=50, mode_above_threshold="clt_approx")
        for rid in range(5):
            traj = simulate_trajectory(m1, 30, policy=pol, seed=3, replica_id=rid)
            resid = np.abs(traj.ln_z - traj.s - traj.ln_w)
            assert resid.max() <= 1e-9

    def test_walk_increments_match_env(self, m1):
        traj = simulate_trajectory(m1, 12, seed=9)
        lm = np.array(m1.log_means)
        expected = np.concatenate(([0.0], np.cumsum(lm[list(traj.env_idx)])))
        assert np.array_equal(traj.s, expected)

    def test_population_never_decreases(self, m1):
        traj = simulate_trajectory(m1, 20, seed=13)
        assert all(b >= a for a, b in zip(traj.z, traj.z[1:]))

    def test_reject_policy_raises(self, m1):
        pol = GrowthPolicy(exact_threshold=5, mode_above_threshold="reject")
        with pytest.raises(ThresholdExceeded):
            simulate_trajectory(m1, 40, policy=pol, seed=1)

    def test_clt_flags_monotone(self, m1):
        pol = GrowthPolicy(exact_threshold=10, mode_above_threshold="clt_approx")
        traj = simulate_trajectory(m1, 40, policy=pol, seed=1)
        flags = traj.approx_flag
        assert flags.any() and not flags[0]
        first = int(np.argmax(flags))
        assert flags[first:].all()

    def test_threshold_overflow_guard(self, m1):
        with pytest.raises(DomainError):
            simulate_trajectory(m1, 2, policy=GrowthPolicy(exact_threshold=2**53))

    def test_determinism_and_stream_independence(self, m1):
        a = simulate_trajectory(m1, 10, seed=21, replica_id=3)
        b = simulate_trajectory(m1, 10, seed=21, replica_id=3)
        c = simulate_trajectory(m1, 10, seed=21, replica_id=4)
        assert a.z == b.z and a.env_idx == b.env_idx
        assert a.z != c.z or a.env_idx != c.env_idx


@pytest.mark.skipif(not HAVE_COMPILED_KERNEL, reason="compiled kernel unavailable")
class TestEngineEquivalence:
    def test_exact_mode_bit_identical(self, m1):
        for rid in range(25):
            tc = simulate_trajectory(m1, 19, seed=2, replica_id=rid, engine="cython")
            tp = simulate_trajectory(m1, 19, seed=2, replica_id=rid, engine="python")
            assert tc.z == tp.z
            assert tc.env_idx == tp.env_idx
            assert np.array_equal(tc.s, tp.s)
            assert np.array_equal(tc.ln_w, tp.ln_w)

    def test_clt_mode_bit_identical(self, m1):
        pol = GrowthPolicy(exact_threshold=10, mode_above_threshold="clt_approx")
        for rid in range(25):
            tc = simulate_trajectory(m1, 45, policy=pol, seed=4, replica_id=rid, engine="cython")
            tp = simulate_trajectory(m1, 45, policy=pol, seed=4, replica_id=rid, engine="python")
            assert tc.z == tp.z
            assert np.array_equal(tc.approx_flag, tp.approx_flag)

    def test_batch_bit_identical(self, m1):
        gc = sample_growth(m1, 1, 8, replicas=400, seed=6, engine="cython")
        gp = sample_growth(m1, 1, 8, replicas=400, seed=6, engine="python")
        assert np.array_equal(gc.ln_z_end, gp.ln_z_end)
        assert np.array_equal(gc.ln_z_n0, gp.ln_z_n0)


class TestStandardizedStatistic:
    def test_direct_formula(self, m1):
        # one generation, Z 1 -> 2, mu = 0.5, sigma = 1
        env = make_environment([make_offspring_law([(2, 1.0)])], [1.0])
        traj = simulate_trajectory(env, 1, seed=0)
        stat = standardized_statistic(traj, 0, 1, _fake_profile(0.5, 1.0))
        assert stat.value == pytest.approx(math.log(2) - 0.5, rel=1e-15)
        assert stat.value == pytest.approx(0.19314718055994531, rel=1e-12)

    def test_centered_deterministic_walk_is_zero(self, doubling_env):
        traj = simulate_trajectory(doubling_env, 6, seed=0)
        prof = _fake_profile(math.log(2), 1.0)
        for n0, n in ((0, 3), (1, 4), (2, 2)):
            assert standardized_statistic(traj, n0, n, prof).value == pytest.approx(0.0, abs=1e-12)

    def test_sigma_scaling(self, m1):
        traj = simulate_trajectory(m1, 8, seed=3)
        v1 = standardized_statistic(traj, 1, 4, _fake_profile(0.5, 1.0)).value
        v2 = standardized_statistic(traj, 1, 4, _fake_profile(0.5, 4.0)).value
        assert v2 == pytest.approx(v1 / 2, rel=1e-12)

    def test_window_validation(self, m1):
        traj = simulate_trajectory(m1, 5, seed=0)
        with pytest.raises(DomainError):
            standardized_statistic(traj, 3, 3, _fake_profile(0.5, 1.0))


class TestSampleGrowth:
    def test_matches_per_replica_trajectories_any_order(self, m1):
        sample = sample_growth(m1, 1, 6, replicas=40, seed=17)
        order = list(range(40))
        random.Random(0).shuffle(order)
        for rid in order:
            traj = simulate_trajectory(m1, 7, seed=17, replica_id=rid)
            assert sample.ln_z_n0[rid] == traj.ln_z[1]
            assert sample.ln_z_end[rid] == traj.ln_z[7]

    def test_martingale_mean(self, m1):
        # normalized population has unit mean: check within 4 SE
        sample = sample_growth(m1, 0, 16, replicas=10_000, seed=12345, track_s=True)
        w = np.exp(sample.ln_z_end - sample.s_end)
        se = w.std(ddof=1) / math.sqrt(len(w))
        assert abs(w.mean() - 1.0) <= 4 * se

    def test_reject_policy_flags(self, m1):
        pol = GrowthPolicy(exact_threshold=30, mode_above_threshold="reject")
        sample = sample_growth(m1, 0, 25, replicas=200, seed=2, policy=pol)
        assert sample.n_rejected > 0
        assert np.isnan(sample.ln_z_end[sample.rejected]).all()
        assert np.isfinite(sample.ln_z_end[sample.completed]).all()

    def test_statistic_scales(self, m1):
        sample = sample_growth(m1, 1, 4, replicas=50, seed=3)
        mu, sigma = m1.mu, 0.23500181462286778
        std = sample.statistic("standardized", mu, sigma)
        pg = sample.statistic("per_generation", mu)
        assert np.allclose(std * sigma / math.sqrt(4), pg, rtol=0, atol=1e-15)
        with pytest.raises(DomainError):
            sample.statistic("standardized", mu)
