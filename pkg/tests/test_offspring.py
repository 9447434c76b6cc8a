import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bprelab import (
    Degenerate,
    DomainError,
    NotNormalized,
    NotSupercritical,
    ZeroOffspring,
    make_environment,
    make_offspring_law,
    minimal_bernstein_H,
    moment_profile,
)
from bprelab.offspring import (
    abs_central_moment,
    bernstein_condition_holds,
    central_moment,
    semi_exp_functional,
)

# frozen oracle values (40-digit evaluation of the defining finite sums)
M1_MU = 0.6404669227310322
M1_SIGMA2 = 0.05522585287604071
M1_SD = 0.23500181462286778
M1_U_HALF = 1.3119006299797523
M1_ABS_15 = 0.11392179615843971
M2_MU = 0.34657359027997265
M2_SIGMA2 = 0.12011325347955036


class TestMakeOffspringLaw:
    def test_point_mass(self):
        law = make_offspring_law([(2, 1.0)])
        assert law.mean == 2.0
        assert law.is_deterministic()

    def test_two_point_mean(self):
        law = make_offspring_law([(1, 0.5), (2, 0.5)])
        assert law.mean == pytest.approx(1.5, abs=1e-15)

    def test_zero_offspring_rejected(self):
        with pytest.raises(ZeroOffspring):
            make_offspring_law([(0, 0.3), (2, 0.7)])

    def test_not_normalized(self):
        with pytest.raises(NotNormalized):
            make_offspring_law([(1, 0.5), (2, 0.6)])

    def test_small_normalization_slack_accepted(self):
        law = make_offspring_law([(1, 0.5), (2, 0.5 + 5e-10)])
        assert math.fsum(law.probs) == pytest.approx(1.0, abs=1e-12)

    def test_duplicate_values_rejected(self):
        with pytest.raises(DomainError):
            make_offspring_law([(2, 0.5), (2, 0.5)])

    def test_nonpositive_prob_rejected(self):
        with pytest.raises(DomainError):
            make_offspring_law([(1, 1.0), (2, 0.0)])

    @given(
        st.lists(
            st.tuples(st.integers(min_value=1, max_value=50), st.floats(0.01, 1.0)),
            min_size=1,
            max_size=6,
            unique_by=lambda vp: vp[0],
        )
    )
    def test_normalized_mean_within_support(self, points):
        total = sum(p for _, p in points)
        law = make_offspring_law([(v, p / total) for v, p in points])
        values = [v for v, _ in points]
        assert min(values) <= law.mean <= max(values)
        assert math.fsum(law.probs) == pytest.approx(1.0, abs=1e-12)


class TestEnvironment:
    def test_weight_validation(self):
        law = make_offspring_law([(2, 1.0)])
        with pytest.raises(NotNormalized):
            make_environment([law, law], [0.5, 0.6])
        with pytest.raises(DomainError):
            make_environment([], [])

    def test_all_unit_mean_rejected(self):
        law = make_offspring_law([(1, 1.0)])
        with pytest.raises(NotSupercritical):
            make_environment([law], [1.0])

    def test_m1_mu(self, m1):
        assert m1.mu == pytest.approx((math.log(1.5) + math.log(2.4)) / 2, abs=1e-15)


class TestMomentProfile:
    def test_point_mass_env_degenerate(self, doubling_env):
        with pytest.raises(Degenerate):
            moment_profile(doubling_env, alpha=0.5, p=2.0)

    def test_m3_degenerate(self, m3):
        with pytest.raises(Degenerate):
            moment_profile(m3, alpha=0.5, p=2.0)

    def test_m2_hand_values(self, m2):
        prof = moment_profile(m2, alpha=0.5, p=2.0)
        assert prof.mu == pytest.approx(M2_MU, rel=1e-14)
        assert prof.sigma2 == pytest.approx(M2_SIGMA2, rel=1e-14)
        assert prof.lower == pytest.approx(-math.log(2) / 2, rel=1e-14)
        assert prof.upper == pytest.approx(math.log(2) / 2, rel=1e-14)
        assert prof.range == pytest.approx(math.log(2), rel=1e-14)

    def test_m1_oracle_values(self, m1):
        prof = moment_profile(m1, alpha=0.5, p=1.5)
        assert prof.mu == pytest.approx(M1_MU, rel=1e-14)
        assert prof.sigma2 == pytest.approx(M1_SIGMA2, rel=1e-14)
        assert prof.sigma == pytest.approx(M1_SD, rel=1e-14)
        assert prof.u == pytest.approx(M1_U_HALF, rel=1e-13)
        assert prof.abs_p_moment == pytest.approx(M1_ABS_15, rel=1e-13)
        assert prof.bernstein_H == pytest.approx(M1_SD, rel=1e-14)

    def test_alpha_p_domains(self, m1):
        with pytest.raises(DomainError):
            moment_profile(m1, alpha=1.0, p=2.0)
        with pytest.raises(DomainError):
            moment_profile(m1, alpha=0.5, p=1.0)

    def test_centered_mean_is_zero(self, m1, m2, wide_env):
        for env in (m1, m2, wide_env):
            assert abs(central_moment(env, 1)) <= 1e-12

    def test_std_moment_consistency(self, m1, wide_env):
        for env in (m1, wide_env):
            for p in (1.5, 2.0, 3.0):
                prof = moment_profile(env, alpha=0.5, p=p)
                assert prof.std_abs_p_moment * prof.sigma**p == pytest.approx(
                    prof.abs_p_moment, rel=1e-10
                )

    def test_u_at_least_one(self, m1, m2, wide_env):
        for env in (m1, m2, wide_env):
            for alpha in (0.1, 0.5, 0.9):
                assert semi_exp_functional(env, alpha) >= 1.0

    def test_u_monotone_in_alpha_for_wide_env(self, wide_env):
        # positive support of X - mu exceeds 1, so the exponential weight
        # grows with alpha
        grid = [0.1, 0.3, 0.5, 0.7, 0.9]
        values = [semi_exp_functional(wide_env, a) for a in grid]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_lower_upper_straddle_zero(self, m1, m2, wide_env):
        for env in (m1, m2, wide_env):
            prof = moment_profile(env, alpha=0.5, p=2.0)
            assert prof.lower <= 0.0 <= prof.upper

    def test_default_H_satisfies_condition(self, m1, m2, wide_env):
        for env in (m1, m2, wide_env):
            prof = moment_profile(env, alpha=0.5, p=2.0, k_max=50)
            assert bernstein_condition_holds(env, prof.bernstein_H, 50)


class TestMinimalBernsteinH:
    def test_bounded_by_fallback(self, m1, m2, wide_env):
        for env in (m1, m2, wide_env):
            prof = moment_profile(env, alpha=0.5, p=2.0)
            assert minimal_bernstein_H(env) <= prof.bernstein_H + 1e-9

    def test_returned_H_is_feasible(self, m1, wide_env):
        for env in (m1, wide_env):
            H = minimal_bernstein_H(env, k_max=50, tol=1e-9)
            assert H > 0.0
            assert bernstein_condition_holds(env, H, 50)

    def test_symmetric_two_point(self, m2):
        # X - mu in {-a, +a}: the fallback a is feasible, so the minimum
        # cannot exceed it
        a = math.log(2) / 2
        assert minimal_bernstein_H(m2) <= a

    def test_k_max_two_collapses_to_tolerance(self, m1):
        # k = 2 holds with equality for any H, so nothing constrains H
        assert minimal_bernstein_H(m1, k_max=2, tol=1e-9) <= 1e-8

    def test_degenerate_rejected(self, m3):
        with pytest.raises(Degenerate):
            minimal_bernstein_H(m3)


def test_abs_central_moment_matches_direct(m1):
    mu = m1.mu
    direct = 0.5 * abs(math.log(1.5) - mu) ** 2.5 + 0.5 * abs(math.log(2.4) - mu) ** 2.5
    assert abs_central_moment(m1, 2.5) == pytest.approx(direct, rel=1e-14)
