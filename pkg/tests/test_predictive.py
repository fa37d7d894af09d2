import math

import numpy as np
import pytest
from scipy import integrate, stats

from hspredict import predictive as pr
from hspredict.model import tau_calibration


class TestFixedLambdaPredictive:
    def test_zero_lambda_is_pure_noise(self):
        g = pr.predictive_fixed_lambda(3.0, 0.0, 0.1, 2.0)
        assert g.mean == 0.0
        assert g.variance == pytest.approx(2.0)

    def test_large_lambda_limit(self):
        g = pr.predictive_fixed_lambda(3.0, 1e9, 1.0, 1.0)
        assert g.mean == pytest.approx(3.0, rel=1e-12)
        assert g.variance == pytest.approx(2.0, rel=1e-12)

    def test_unit_m_case(self):
        # lam^2 tau^2 = 1, r = 1, y = 2 -> N(1, 1.5)
        g = pr.predictive_fixed_lambda(2.0, 1.0, 1.0, 1.0)
        assert g.mean == pytest.approx(1.0)
        assert g.variance == pytest.approx(1.5)

    def test_matches_classical_variance_form(self):
        # (v + m) / ((1-v)(1+m)) is the same number as r + m/(1+m)
        for r in (0.5, 1.0, 4.0):
            v = 1.0 / (1.0 + 1.0 / r)
            for m in (0.0, 0.3, 5.0):
                lam = math.sqrt(m)
                g = pr.predictive_fixed_lambda(1.0, lam, 1.0, r)
                assert g.variance == pytest.approx((v + m) / ((1 - v) * (1 + m)), rel=1e-12)


class TestKlLossFixedLambda:
    def test_zero_when_predictive_is_truth(self):
        assert pr.kl_loss_fixed_lambda(0.0, 5.0, 0.0, 0.1, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_large_m_at_y_equal_theta(self):
        # m -> inf, y = theta: KL(N(theta, r) || N(theta, r+1))
        r = 1.0
        v = 0.5
        want = -0.5 * math.log(v) - 0.5 * (1.0 - v)
        got = pr.kl_loss_fixed_lambda(1.0, 1.0, 1e9, 1.0, r)
        assert got == pytest.approx(want, rel=1e-6)

    def test_quadrature_oracle(self):
        # independent oracle: numerically integrate the KL integrand between
        # N(theta, r) and the conjugate predictive of (y, lam, tau)
        theta, y, lam, tau, r = 1.0, 2.0, 1.0, 1.0, 1.0
        g = pr.predictive_fixed_lambda(y, lam, tau, r)

        def f(x):
            lp = -((x - theta) ** 2) / (2 * r) - 0.5 * math.log(2 * math.pi * r)
            lq = g.logpdf(x)
            return math.exp(lp) * (lp - lq)

        want, _ = integrate.quad(f, -30, 30, limit=200)
        assert pr.kl_loss_fixed_lambda(theta, y, lam, tau, r) == pytest.approx(want, rel=1e-10)

    def test_nonnegative_everywhere(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            theta, y = rng.normal(size=2) * 3
            lam = rng.uniform(0, 50)
            tau = 10 ** rng.uniform(-3, 0)
            r = 10 ** rng.uniform(-0.5, 0.5)
            assert pr.kl_loss_fixed_lambda(theta, y, lam, tau, r) >= -1e-12


class TestPredictiveDensityFixedTau:
    def test_normalizes(self):
        y, tau, r = 3.0, 0.05, 1.0
        val, _ = integrate.quad(
            lambda yt: pr.predictive_density_fixed_tau(yt, y, tau, r),
            -30, 30, limit=300)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_total_shrinkage_limit(self):
        for yt in (0.0, 1.0, 2.0):
            got = pr.predictive_density_fixed_tau(yt, 0.0, 1e-6, 1.0)
            want = math.exp(-yt * yt / 2) / math.sqrt(2 * math.pi)
            assert got == pytest.approx(want, abs=1e-3)

    def test_2d_brute_force_oracle(self):
        # joint quadrature over the local scale, normalized by the marginal
        yt, y, tau, r = 1.0, 4.0, 0.05, 1.0

        def joint(lam):
            m = lam * lam * tau * tau
            s = m / (1 + m)
            lik = math.exp(-y * y / (2 * (1 + m))) / math.sqrt(1 + m)
            pred = math.exp(-(yt - s * y) ** 2 / (2 * (r + s))) / math.sqrt(2 * math.pi * (r + s))
            return lik * pred / (1 + lam * lam)

        def marg(lam):
            m = lam * lam * tau * tau
            return math.exp(-y * y / (2 * (1 + m))) / (math.sqrt(1 + m) * (1 + lam * lam))

        num, _ = integrate.quad(joint, 0, np.inf, limit=800)
        den, _ = integrate.quad(marg, 0, np.inf, limit=800)
        want = num / den
        assert pr.predictive_density_fixed_tau(yt, y, tau, r) == pytest.approx(want, rel=1e-8)

    def test_vectorized_log_density_matches_scalar(self):
        rng = np.random.default_rng(11)
        y = rng.normal(size=8) * 3
        yt = rng.normal(size=8) * 3
        for tau in (0.03, 0.4):
            block = pr.predictive_log_density_fixed_tau(yt, y, tau, 1.0)
            for i in range(8):
                want = math.log(pr.predictive_density_fixed_tau(yt[i], y[i], tau, 1.0))
                assert block[i] == pytest.approx(want, abs=1e-9)


class TestKlRiskFixedTau:
    def test_symmetry(self):
        for theta in (1.0, 3.0, 7.0):
            a = pr.kl_risk_fixed_tau(theta, 0.05, 1.0)
            b = pr.kl_risk_fixed_tau(-theta, 0.05, 1.0)
            assert a == pytest.approx(b, abs=1e-10)

    def test_nonnegative(self):
        for theta in (0.0, 0.5, 2.0, 10.0):
            assert pr.kl_risk_fixed_tau(theta, 0.1, 1.0) >= -1e-12

    def test_decomposition_vs_mc_oracle(self):
        # Monte Carlo oracle on the definition: E log[N(yt; theta, r) / phat],
        # at five randomized (theta, tau, r) configurations
        rng = np.random.default_rng(2024)
        cases = [(0.0, 0.05, 1.0), (2.0, 0.1, 1.0), (1.0, 0.3, 2.0),
                 (3.5, 0.02, 0.5), (0.7, 0.6, 1.5)]
        for theta, tau, r in cases:
            n = 150_000
            yy = theta + rng.standard_normal(n)
            yt = theta + math.sqrt(r) * rng.standard_normal(n)
            log_true = -((yt - theta) ** 2) / (2 * r) - 0.5 * np.log(2 * np.pi * r)
            vals = log_true - pr.predictive_log_density_fixed_tau(yt, yy, tau, r)
            se = vals.std(ddof=1) / math.sqrt(n)
            want = pr.kl_risk_fixed_tau(theta, tau, r)
            assert abs(vals.mean() - want) < 3 * se

    def test_risk_curve_shape(self):
        curve = pr.risk_curve(np.linspace(0, 12, 25), 0.05, 1.0)
        assert curve.risks[-1] < curve.risks.max()
        assert curve.risks.max() > curve.risks[0]

    def test_plateau_value(self):
        # rho(theta -> inf) = (1/2) log(1/v)
        v = 0.5
        assert pr.kl_risk_fixed_tau(40.0, 0.05, 1.0) == pytest.approx(
            -0.5 * math.log(v), rel=1e-2)


class TestLocalMixtureBound:
    def test_dominates_risk(self):
        for theta in (0.0, 1.0, 2.0, 3.0, 5.0):
            for tau in (0.02, 0.05, 0.1, 0.2):
                bound = pr.risk_bound_local_mixture(theta, tau, 1.0)
                risk = pr.kl_risk_fixed_tau(theta, tau, 1.0)
                assert bound >= risk - 1e-10, (theta, tau, bound, risk)

    def test_ratio_capped_at_three(self):
        # the first-ratio integrand is bounded by 3 (equivalently the
        # u-integral ratio by 1), so the zero-mean bound is at most
        # (1-v)/2 * E[Z^2]
        from hspredict.specfun import phi1_ratio_integrals
        for tau in (0.5, 0.9, 0.99):
            for w in (0.0, 1.0, 10.0, 100.0):
                f_a, f_b, f_c = phi1_ratio_integrals(w, tau)
                assert f_b / f_a <= 3.0 + 1e-12
        assert pr.risk_bound_local_mixture(0.0, 0.99, 1.0) <= 0.25 + 1e-6

    def test_small_tau_rate(self):
        # the zero-mean bound scales like tau*sqrt(log(1/tau)) and stays
        # below the analytic envelope 2(1-v)/sqrt(pi) at that rate; the
        # ratio stabilizes (around 0.20 for v = 1/2) instead of drifting
        v = 0.5
        envelope = 2.0 * (1.0 - v) / math.sqrt(math.pi)
        ratios = []
        for tau in (1e-2, 1e-3, 1e-4):
            b = pr.risk_bound_local_mixture(0.0, tau, 1.0)
            risk = pr.kl_risk_fixed_tau(0.0, tau, 1.0)
            rate = tau * math.sqrt(math.log(1.0 / tau))
            assert risk <= b <= envelope * rate
            ratios.append(b / rate)
        assert max(ratios) / min(ratios) < 1.1


class TestMaxRisk:
    def test_peak_is_interior(self):
        tau = 0.05
        hi = 3.0 * math.sqrt(2.0 * math.log(1.0 / tau)) + 10.0
        end = pr.kl_risk_fixed_tau(hi, tau, 1.0)
        val = pr.max_risk_fixed_tau(100, 10, tau, 1.0, grid_points=101)
        peak = (val - 90 * pr.kl_risk_fixed_tau(0.0, tau, 1.0)) / 10
        assert peak > end

    def test_within_small_multiple_of_minimax_at_scale(self):
        from hspredict.model import minimax_rate
        n, s = 10_000, 100
        tau = s / n
        ratio = pr.max_risk_fixed_tau(n, s, tau, 1.0, grid_points=201) \
            / minimax_rate(n, s, 1.0)
        assert 0.5 <= ratio <= 3.0

    def test_tradeoff_in_tau(self):
        rho0 = [pr.kl_risk_fixed_tau(0.0, t, 1.0) for t in (0.2, 0.05, 0.01)]
        assert rho0[0] > rho0[1] > rho0[2]
        peaks = []
        for t in (0.2, 0.05, 0.01):
            tot = pr.max_risk_fixed_tau(2, 1, t, 1.0, grid_points=201)
            peaks.append(tot - pr.kl_risk_fixed_tau(0.0, t, 1.0))
        assert peaks[0] < peaks[1] < peaks[2]


class TestGaussianBaseline:
    def test_predictive_form(self):
        g = pr.gaussian_baseline_predictive(0.0, 2.0)
        assert (g.mean, g.variance) == (0.0, 2.5)
        g = pr.gaussian_baseline_predictive(4.0, 1.0)
        assert (g.mean, g.variance) == (2.0, 1.5)

    def test_baseline_risk_exceeds_horseshoe_at_zero(self):
        assert pr.gaussian_baseline_risk(0.0, 1.0) > pr.kl_risk_fixed_tau(0.0, 0.05, 1.0)

    def test_baseline_risk_closed_form_vs_mc(self):
        rng = np.random.default_rng(9)
        theta, r = 1.5, 1.0
        n = 400_000
        yy = theta + rng.standard_normal(n)
        yt = theta + rng.standard_normal(n)
        vals = []
        s1 = r + 0.5
        lt = -((yt - theta) ** 2) / (2 * r) - 0.5 * np.log(2 * np.pi * r)
        lq = -((yt - 0.5 * yy) ** 2) / (2 * s1) - 0.5 * np.log(2 * np.pi * s1)
        vals = lt - lq
        se = vals.std(ddof=1) / math.sqrt(n)
        assert abs(vals.mean() - pr.gaussian_baseline_risk(theta, r)) < 3 * se


class TestSamplingFixedTau:
    def test_shrinkage_limit_variance(self):
        rng = np.random.default_rng(0)
        s = pr.sample_predictive_fixed_tau(np.zeros(4), 1e-6, 1.0, 40_000, rng)
        var = s.samples.var(axis=0)
        assert np.all(np.abs(var - 1.0) < 0.05)

    def test_seed_determinism(self):
        y = np.array([0.5, 4.0, -2.0])
        a = pr.sample_predictive_fixed_tau(y, 0.1, 1.0, 500, np.random.default_rng(3))
        b = pr.sample_predictive_fixed_tau(y, 0.1, 1.0, 500, np.random.default_rng(3))
        assert np.array_equal(a.samples, b.samples)

    def test_histogram_matches_density(self):
        # KS test against the quadrature CDF of the same coordinate
        y, tau, r = 2.5, 0.1, 1.0
        rng = np.random.default_rng(17)
        s = pr.sample_predictive_fixed_tau(np.array([y]), tau, r, 100_000, rng)
        draws = s.samples[:, 0]
        grid = np.linspace(draws.min() - 1, draws.max() + 1, 2001)
        dens = np.exp(pr.predictive_log_density_fixed_tau(grid, np.full_like(grid, y), tau, r))
        cdf_grid = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        cdf_grid /= cdf_grid[-1]
        res = stats.kstest(draws, lambda x: np.interp(x, grid, cdf_grid))
        assert res.pvalue > 0.01


class TestTableRows:
    # deterministic fixed-calibration risk sums for the strong-signal-only
    # benchmark vectors (n = 500, r = 1)
    @pytest.mark.parametrize("s_n,c,alpha,target", [
        (25, 2.0, 0.0, 11.96),
        (25, 2.0, 0.5, 13.82),
        (100, 4.0, 0.0, 44.28),
    ])
    def test_strong_signal_rows(self, s_n, c, alpha, target):
        n = 500
        tau = tau_calibration(n, s_n, alpha).tau
        theta = np.zeros(n)
        theta[:s_n] = c * math.sqrt(2.0 * math.log(n))
        total = pr.theta_risk_sum(theta, tau, 1.0)
        assert total == pytest.approx(target, rel=0.02)
