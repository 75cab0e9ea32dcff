import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize
from scipy import stats as sps
from statsmodels.stats.diagnostic import anderson_statistic

from overlap_oracles import heterodyne_overlap_numeric, homodyne_overlap_numeric
from squeezed_phase.gaussian import HALF_PI, optimal_phase, quadrature_variance
from squeezed_phase.measurements import effective_argument
from squeezed_phase.stats import (
    EstimateBatch,
    anderson_darling_normal,
    averaged_nonstationary_prob,
    bhattacharyya_heterodyne,
    bhattacharyya_homodyne,
    chi2_cdf,
    chi2_sf,
    fisher_combine,
    holevo_variance,
    moment_report,
    nonstationary_prob,
    regularized_gamma,
    signed_error,
    stationary_point_prob,
)


class TestHolevo:
    def test_exact(self):
        assert holevo_variance(EstimateBatch(0.4, np.full(10, 0.4))) == 0.0

    def test_two_point(self):
        d = 1e-3
        b = EstimateBatch(0.4, np.array([0.4 + d, 0.4 - d]))
        assert holevo_variance(b) == pytest.approx(d * d, rel=1e-4)

    def test_wrapped_normal(self, rng):
        sigma, k = 0.01, 4.0
        est = (0.02 + sigma * rng.standard_normal(10 ** 6)) % HALF_PI
        value = holevo_variance(EstimateBatch(0.02, est, HALF_PI))
        expected = math.expm1(k * k * sigma * sigma) / (k * k)
        se = sigma * sigma * math.sqrt(2 / 10 ** 6)
        assert abs(value - expected) < 3 * se
        assert value == pytest.approx(1e-4, rel=0.01)

    def test_uniform_is_out_of_band(self):
        est = np.array([0.0, HALF_PI / 2])
        assert holevo_variance(EstimateBatch(0.0, est)) == math.inf

    def test_empty(self):
        with pytest.raises(ValueError):
            EstimateBatch(0.0, [])

    @given(st.floats(0.001, 0.02 * HALF_PI), st.integers(0, 1000), st.sampled_from([HALF_PI, math.pi]))
    def test_small_angle_agreement(self, sigma, seed, period):
        rng = np.random.default_rng(seed)
        theta = 0.3
        est = (theta + sigma * rng.standard_normal(2000)) % period
        b = EstimateBatch(theta, est, period)
        wrapped = np.mean(b.errors() ** 2)
        assert abs(holevo_variance(b) - wrapped) / wrapped < 0.01

    @given(st.floats(-20, 20), st.floats(0, math.pi))
    def test_signed_error_range(self, est, theta):
        e = signed_error(est, theta, math.pi)
        assert -math.pi / 2 < e <= math.pi / 2 + 1e-12


class TestChi2:
    def test_examples(self):
        assert chi2_cdf(0.0, 3) == 0.0
        assert chi2_cdf(1.0, 1) == pytest.approx(0.682689492137085897, abs=1e-12)
        vals = [chi2_cdf(nu, nu) for nu in (10, 100, 1000)]
        assert all(0.5 < v < 0.6 for v in vals) and vals[0] > vals[1] > vals[2]
        assert vals == pytest.approx([0.559506714934787589, 0.518808315472043282, 0.505947146170760358], abs=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            chi2_cdf(-1.0, 2)

    @given(st.floats(0.0, 2e4), st.integers(1, 8000))
    def test_against_scipy(self, x, dof):
        assert chi2_cdf(x, dof) == pytest.approx(sps.chi2.cdf(x, dof), abs=1e-10)
        assert chi2_sf(x, dof) == pytest.approx(sps.chi2.sf(x, dof), abs=1e-10)

    @given(st.floats(0.1, 500), st.floats(0.0, 1000))
    def test_complementary(self, a, x):
        p, q = regularized_gamma(a, x)
        assert p + q == pytest.approx(1.0, abs=1e-12)

    def test_deep_tail_relative_accuracy(self):
        # threshold of the first-step stationary probability at nu = 3705 near theta = pi/2
        x = 3705 * 1.3
        assert chi2_sf(x, 3705) == pytest.approx(sps.chi2.sf(x, 3705), rel=1e-8)


class TestStationaryProbability:
    def test_at_half_pi(self):
        assert stationary_point_prob(HALF_PI, 1.0, 1) == pytest.approx(0.682689492137085897, abs=1e-12)

    def test_large_nu_near_zero(self):
        assert stationary_point_prob(1e-3, 1.0, 1000) == pytest.approx(1.0, abs=1e-15)

    def test_curve_shape_nu_3705(self):
        grid = np.linspace(0, HALF_PI, 200)
        q = nonstationary_prob(grid, 1.0, 3705)
        assert np.all(q[:150] < 1e-6)
        assert q[-1] > 0.4
        assert np.all(np.diff(q) >= -1e-15)

    def test_complement(self):
        grid = np.linspace(0, HALF_PI, 17)
        assert np.allclose(stationary_point_prob(grid, 0.5, 50) + nonstationary_prob(grid, 0.5, 50), 1.0, atol=1e-12)

    def test_averaged_decreasing(self):
        vals = [averaged_nonstationary_prob(1.0, nu) for nu in (1, 10, 100, 1000, 3705)]
        assert np.all(np.diff(vals) < 0)
        assert vals[0] == pytest.approx(0.15367022930704, abs=1e-10)

    def test_averaged_monte_carlo(self, rng):
        n = 10 ** 7
        phi = rng.uniform(0, HALF_PI, n)
        x2 = quadrature_variance(1.0, phi) * rng.standard_normal(n) ** 2
        p_hat = float(np.mean(x2 > math.exp(2)))
        p = averaged_nonstationary_prob(1.0, 1)
        assert abs(p_hat - p) < 3 * math.sqrt(p * (1 - p) / n)

    def test_averaged_against_scipy_quad(self):
        val, _ = integrate.quad(lambda t: sps.chi2.sf(math.exp(2) * 100 / quadrature_variance(1.0, t), 100),
                                0, HALF_PI, epsabs=1e-13, limit=200)
        assert averaged_nonstationary_prob(1.0, 100) == pytest.approx(val / HALF_PI, rel=1e-7)


class TestBhattacharyya:
    def test_equal(self):
        assert bhattacharyya_homodyne(0.3, 0.3, 0.1, 1.0, 5) == pytest.approx(1.0, abs=1e-15)
        assert bhattacharyya_heterodyne(0.3, 0.3, 1.0, 5) == pytest.approx(1.0, abs=1e-14)

    def test_ratio_two(self):
        # pick theta so that the variance is four times that at theta0
        r, setting, theta0 = 1.0, 0.2, 0.2
        v0 = quadrature_variance(r, effective_argument(theta0, setting, r))
        phi = optimize.brentq(lambda p: quadrature_variance(r, p) - 4 * v0, optimal_phase(r), HALF_PI)
        theta = phi - optimal_phase(r) + setting
        assert bhattacharyya_homodyne(theta, theta0, setting, r, 2) == pytest.approx(0.8, abs=1e-12)

    def test_heterodyne_quarter_turn(self):
        assert bhattacharyya_heterodyne(HALF_PI, 0.0, 1.0, 1) == pytest.approx(0.648054273663885400, abs=1e-14)

    def test_homodyne_numeric(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            theta, theta0, setting = rng.uniform(0, HALF_PI, 3)
            r = rng.uniform(0.1, 1.5)
            closed = bhattacharyya_homodyne(theta, theta0, setting, r, 1)
            assert closed == pytest.approx(homodyne_overlap_numeric(theta, theta0, setting, r), abs=1e-6)

    def test_heterodyne_numeric(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            theta, theta0 = rng.uniform(0, math.pi, 2)
            r = rng.uniform(0.1, 1.2)
            closed = bhattacharyya_heterodyne(theta, theta0, r, 1)
            assert closed == pytest.approx(heterodyne_overlap_numeric(theta, theta0, r), abs=1e-5)

    @given(st.floats(0, math.pi), st.floats(0, math.pi), st.floats(0, HALF_PI), st.floats(0.05, 2), st.integers(1, 50))
    def test_bounded_by_one(self, theta, theta0, setting, r, nu):
        bh = bhattacharyya_homodyne(theta, theta0, setting, r, nu)
        assert 0 < bh <= 1 + 1e-15
        s = math.sqrt(quadrature_variance(r, effective_argument(theta, setting, r)))
        s0 = math.sqrt(quadrature_variance(r, effective_argument(theta0, setting, r)))
        # 1 - 2 s s0 / (s^2 + s0^2) = (s - s0)^2 / (s^2 + s0^2)
        if (s - s0) ** 2 / (s * s + s0 * s0) > 1e-4:
            assert bh < 1 - 1e-6
        bz = bhattacharyya_heterodyne(theta, theta0, r, nu)
        assert 0 < bz <= 1 + 1e-15
        if (math.sin(theta - theta0) * math.sinh(r)) ** 2 > 1e-4:
            assert bz < 1 - 1e-6


class TestMoments:
    def test_symmetric_pair(self):
        rep = moment_report(EstimateBatch(0.5, np.array([0.49, 0.51, 0.49, 0.51]), math.pi))
        assert rep.bias == pytest.approx(0.0, abs=1e-15)
        assert rep.skewness == pytest.approx(0.0, abs=1e-9)

    def test_normal_synthetic(self, rng):
        n = 10 ** 6
        est = (1.0 + 0.01 * rng.standard_normal(n)) % math.pi
        rep = moment_report(EstimateBatch(1.0, est, math.pi))
        assert abs(rep.skewness) < 3 * math.sqrt(6 / n)
        assert abs(rep.excess_kurtosis) < 3 * math.sqrt(24 / n)
        assert abs(rep.bias) < 3 * 0.01 / math.sqrt(n)
        assert rep.holevo_variance >= 0

    def test_bias_across_wrap(self):
        est = np.array([0.01, 0.02, 0.03, 0.02]) - 0.05
        rep = moment_report(EstimateBatch(0.0, est % math.pi, math.pi))
        assert rep.bias == pytest.approx(-0.03, abs=1e-12)

    def test_too_few(self):
        with pytest.raises(ValueError):
            moment_report(EstimateBatch(0.0, np.zeros(3)))


class TestAndersonDarling:
    def test_statistic_matches_statsmodels(self, rng):
        x = rng.normal(0.3, 2.0, 500)
        a2, _ = anderson_darling_normal(x, 0.3, 4.0)
        ref = anderson_statistic((x - 0.3) / 2.0, dist=sps.norm, fit=False)
        assert a2 == pytest.approx(float(ref), rel=1e-9)

    def test_asymptotic_critical_values(self):
        # fully specified null: 5% and 1% points of the limiting distribution
        from squeezed_phase.stats import _ad_inf_cdf
        assert 1 - _ad_inf_cdf(2.492) == pytest.approx(0.05, abs=5e-4)
        assert 1 - _ad_inf_cdf(3.878) == pytest.approx(0.01, abs=5e-5)
        assert 1 - _ad_inf_cdf(1.933) == pytest.approx(0.10, abs=5e-4)

    def test_calibration(self, rng):
        x = rng.standard_normal((1000, 1000))
        p = np.array([anderson_darling_normal(row, 0.0, 1.0)[1] for row in x])
        rate = np.mean(p < 0.05)
        assert abs(rate - 0.05) < 3 * math.sqrt(0.05 * 0.95 / 1000)
        assert sps.kstest(p, "uniform").pvalue > 0.001

    def test_power(self, rng):
        x = rng.normal(0.5, 1.0, 1000)
        assert anderson_darling_normal(x, 0.0, 1.0)[1] < 0.001

    def test_errors(self):
        with pytest.raises(ValueError):
            anderson_darling_normal(np.ones(20), 0.0, 1.0)
        with pytest.raises(ValueError):
            anderson_darling_normal(np.arange(20.0), 0.0, 0.0)
        with pytest.raises(ValueError):
            anderson_darling_normal(np.arange(5.0), 0.0, 1.0)


class TestFisherCombine:
    def test_examples(self):
        assert fisher_combine([1.0] * 4) == pytest.approx(1.0, abs=1e-15)
        assert fisher_combine([0.37]) == pytest.approx(0.37, abs=1e-12)
        assert fisher_combine([0.5] * 5) == pytest.approx(0.731898214129616877, abs=1e-12)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            fisher_combine([0.5, 0.0])

    @given(st.lists(st.floats(1e-8, 1.0), min_size=1, max_size=10))
    def test_against_scipy(self, ps):
        ref = sps.combine_pvalues(ps, method="fisher").pvalue
        assert fisher_combine(ps) == pytest.approx(ref, abs=1e-10)


def test_ad_tail_stays_positive():
    from squeezed_phase.stats import _ad_inf_cdf, _ad_inf_sf

    for z in (0.5, 1.99, 2.0, 3.878, 7.9):
        assert _ad_inf_sf(z) == pytest.approx(1 - _ad_inf_cdf(z), rel=1e-9)
    # both tail forms agree where they meet
    assert _ad_inf_sf(8.0) == pytest.approx(1 - _ad_inf_cdf(8.0), rel=0.02)
    tail = [_ad_inf_sf(z) for z in (15.0, 20.0, 30.0, 100.0)]
    assert all(t > 0 for t in tail) and tail == sorted(tail, reverse=True)
    # leading-order tail: sqrt(3) P(chi^2_1 > 2z)
    assert _ad_inf_sf(30.0) == pytest.approx(math.sqrt(3) * sps.chi2.sf(60.0, 1), rel=1e-12)
    x = np.random.default_rng(3).normal(0.5, 1.0, 1000)
    _, p = anderson_darling_normal(x, 0.0, 1.0)
    assert 0 < p < 1e-10
