import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import expit

from effectbench.errors import ConfigError, DataError, FitError
from effectbench.survival import (
    ate_curve,
    fit_cox,
    kaplan_meier,
    _cox_loglik_parts,
)

from _oracles import breslow_partial_loglik, cox_grid_search, km_by_hand


class TestKaplanMeier:
    def test_three_subject_example(self):
        # times {1, 2, 3}, second subject censored
        km = kaplan_meier([1.0, 2.0, 3.0], [1, 0, 1])
        assert km.times.tolist() == [1.0, 3.0]
        assert km.survival == pytest.approx([2 / 3, 0.0])
        # Greenwood at t=1: S^2 * d/(n(n-d)) = (2/3)^2 * 1/(3*2)
        assert km.variance[0] == pytest.approx((2 / 3) ** 2 * (1 / 6))
        assert km.variance[1] == 0.0

    def test_no_censoring_matches_empirical(self):
        rng = np.random.default_rng(60)
        t = rng.exponential(size=50)
        km = kaplan_meier(t, np.ones(50))
        for tau, s in zip(km.times, km.survival):
            assert s == pytest.approx(float(np.mean(t > tau)), abs=1e-12)

    def test_matches_hand_loop(self):
        rng = np.random.default_rng(61)
        t = np.round(rng.exponential(size=80), 1)  # rounding forces ties
        e = rng.uniform(size=80) < 0.7
        km = kaplan_meier(t, e)
        taus, s = km_by_hand(t, e)
        assert km.times.tolist() == taus.tolist()
        assert km.survival == pytest.approx(s, abs=1e-12)

    def test_constant_weight_invariance(self):
        rng = np.random.default_rng(62)
        t = rng.exponential(size=60)
        e = rng.uniform(size=60) < 0.6
        base = kaplan_meier(t, e)
        scaled = kaplan_meier(t, e, np.full(60, 2.0))
        assert base.survival == pytest.approx(scaled.survival, abs=1e-12)
        assert base.variance == pytest.approx(scaled.variance, abs=1e-12)

    def test_weighted_curve_shifts_toward_heavy_subjects(self):
        t = np.array([1.0, 2.0])
        e = np.array([1, 1])
        w = np.array([3.0, 1.0])
        km = kaplan_meier(t, e, w)
        assert km.survival[0] == pytest.approx(0.25)

    def test_all_censored_is_flat_one(self):
        km = kaplan_meier([1.0, 2.0], [0, 0])
        assert km.times.size == 0
        assert km.step_values([0.5, 5.0]).tolist() == [1.0, 1.0]

    def test_monotone_nonincreasing(self):
        rng = np.random.default_rng(63)
        t = rng.exponential(size=100)
        e = rng.uniform(size=100) < 0.5
        w = rng.uniform(0.5, 2.0, size=100)
        km = kaplan_meier(t, e, w)
        assert np.all(np.diff(km.survival) <= 1e-15)
        assert np.all(km.survival >= -1e-15)

    def test_step_interpolation_right_continuous(self):
        km = kaplan_meier([1.0, 2.0, 3.0], [1, 0, 1])
        vals = km.step_values([0.0, 0.999, 1.0, 2.9, 3.0, 10.0])
        assert vals == pytest.approx([1.0, 1.0, 2 / 3, 2 / 3, 0.0, 0.0])

    def test_negative_times_rejected(self):
        with pytest.raises(ConfigError, match="nonnegative"):
            kaplan_meier([-1.0, 2.0], [1, 1])

    def test_negative_weights_rejected(self):
        with pytest.raises(ConfigError, match="nonnegative"):
            kaplan_meier([1.0, 2.0], [1, 1], [-1.0, 1.0])


class TestCox:
    def sample(self, n=30, seed=64, tie_round=None):
        rng = np.random.default_rng(seed)
        x = rng.binomial(1, 0.5, size=n).astype(float)
        t = rng.exponential(1.0 / np.exp(0.8 * x))
        if tie_round is not None:
            t = np.round(t, tie_round) + 0.001
        e = rng.uniform(size=n) < 0.8
        if not e.any():
            e[0] = True
        return x, t, e

    def test_matches_grid_search(self):
        x, t, e = self.sample()
        fit = fit_cox(x, t, e)
        ref = cox_grid_search(x, t, e)
        assert abs(fit.beta[0] - ref) < 1e-4

    def test_matches_grid_search_with_ties(self):
        x, t, e = self.sample(seed=65, tie_round=1)
        assert len(np.unique(t)) < len(t)
        fit = fit_cox(x, t, e)
        ref = cox_grid_search(x, t, e)
        assert abs(fit.beta[0] - ref) < 1e-4

    def test_matches_grid_search_weighted(self):
        rng = np.random.default_rng(66)
        x, t, e = self.sample(seed=66)
        w = rng.uniform(0.5, 2.0, size=len(x))
        fit = fit_cox(x, t, e, case_weights=w)
        ref = cox_grid_search(x, t, e, weights=w)
        assert abs(fit.beta[0] - ref) < 1e-4

    def test_loglik_matches_oracle_at_beta(self):
        x, t, e = self.sample(seed=67, tie_round=1)
        fit = fit_cox(x, t, e)
        ref_ll = breslow_partial_loglik(float(fit.beta[0]), x, t, e)
        assert fit.loglik == pytest.approx(ref_ll, abs=1e-8)

    def test_gradient_vanishes_at_solution(self):
        x, t, e = self.sample(seed=68)
        fit = fit_cox(x, t, e)
        _, grad, _ = _cox_loglik_parts(
            x[:, None], t, e.astype(bool), np.ones(len(x)), fit.beta)
        assert np.max(np.abs(grad)) < 1e-8

    def test_null_covariate_near_zero(self):
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            n = 1000
            x = rng.normal(size=n)
            t = rng.exponential(size=n)
            e = rng.uniform(size=n) < 0.7
            fit = fit_cox(x, t, e)
            assert abs(fit.beta[0]) < 0.1
            assert fit.p_values[0] > 1e-4

    def test_weight_scale_invariance(self):
        rng = np.random.default_rng(69)
        x, t, e = self.sample(seed=69)
        w = rng.uniform(0.5, 2.0, size=len(x))
        a = fit_cox(x, t, e, case_weights=w)
        b = fit_cox(x, t, e, case_weights=17.0 * w)
        assert a.beta == pytest.approx(b.beta, abs=1e-10)
        assert a.se == pytest.approx(b.se, abs=1e-10)
        assert a.loglik == pytest.approx(b.loglik, abs=1e-10)

    def test_multivariate_fit(self):
        rng = np.random.default_rng(70)
        n = 800
        X = rng.normal(size=(n, 3))
        t = rng.exponential(1.0 / np.exp(X @ [0.5, -0.5, 0.0]))
        e = rng.uniform(size=n) < 0.8
        fit = fit_cox(X, t, e)
        assert fit.beta == pytest.approx([0.5, -0.5, 0.0], abs=0.15)
        assert fit.hazard_ratios == pytest.approx(np.exp(fit.beta))

    def test_monotone_likelihood_detected(self):
        t = np.arange(1.0, 11.0)
        e = np.ones(10)
        # perfectly orders the hazard; small scale so the diverging
        # coefficient crosses the norm bound before the gradient saturates
        x = -t / 10.0
        with pytest.raises(FitError, match="monotone likelihood"):
            fit_cox(x, t, e)

    def test_no_events(self):
        with pytest.raises(DataError, match="no events"):
            fit_cox(np.ones(5), np.ones(5), np.zeros(5))

    def test_zero_covariates(self):
        with pytest.raises(ConfigError, match="at least one covariate"):
            fit_cox(np.empty((5, 0)), np.ones(5), np.ones(5))


class TestAteCurve:
    def test_identical_arms_zero_effect(self):
        t = np.tile([1.0, 2.0, 3.0, 4.0], 2)
        e = np.tile([1, 0, 1, 1], 2)
        A = np.repeat([1.0, 0.0], 4)
        curve, c1, c0 = ate_curve(t, e, A, np.full(8, 0.5))
        assert curve.ate == pytest.approx(np.zeros(curve.ate.size), abs=1e-12)
        assert (c1.survival == c0.survival).all()

    def test_extreme_arms(self):
        # every control dies at t=1, every treated censored: ATE -> 1
        t = np.ones(20)
        e = np.concatenate([np.zeros(10), np.ones(10)])
        A = np.concatenate([np.ones(10), np.zeros(10)])
        curve, _, _ = ate_curve(t, e, A, np.full(20, 0.5))
        assert curve.time_grid.tolist() == [1.0]
        assert curve.ate[0] == pytest.approx(1.0)
        assert curve.ci_high[0] <= 1.0

    def test_bands_ordered_and_bounded(self):
        rng = np.random.default_rng(71)
        n = 300
        x = rng.normal(size=n)
        A = rng.binomial(1, expit(x)).astype(float)
        t = rng.exponential(1.0 / np.exp(-0.5 * A + 0.3 * x))
        e = rng.uniform(size=n) < 0.7
        scores = np.clip(expit(x), 0.01, 0.99)
        curve, _, _ = ate_curve(t, e, A, scores)
        assert np.all(curve.ci_low <= curve.ate + 1e-12)
        assert np.all(curve.ate <= curve.ci_high + 1e-12)
        assert np.all(curve.ci_low >= -1.0)
        assert np.all(curve.ci_high <= 1.0)
        assert np.all(np.diff(curve.time_grid) > 0)

    def test_grid_is_union_of_event_times(self):
        t = np.array([1.0, 2.0, 3.0, 4.0])
        e = np.array([1, 1, 1, 0])
        A = np.array([1.0, 0.0, 1.0, 0.0])
        curve, c1, c0 = ate_curve(t, e, A, np.full(4, 0.5))
        assert curve.time_grid.tolist() == sorted(
            set(c1.times.tolist()) | set(c0.times.tolist()))

    def test_weighted_curves_approach_truth(self):
        # confounded exponential times; the IPW-weighted KM difference
        # should track the closed-form marginal contrast
        rng = np.random.default_rng(72)
        n = 5000
        x = rng.normal(size=n)
        e_true = expit(0.8 * x)
        A = rng.binomial(1, e_true).astype(float)
        rate = np.exp(-0.7 * A + 0.5 * x)
        t = rng.exponential(1.0 / rate)
        cens = np.full(n, 1.5)
        obs_t = np.minimum(t, cens)
        obs_e = t <= cens

        def s_marginal(tau, a):
            f = lambda z: np.exp(-tau * np.exp(-0.7 * a + 0.5 * z)) * \
                np.exp(-z * z / 2) / np.sqrt(2 * np.pi)
            return quad(f, -8, 8)[0]

        curve, _, _ = ate_curve(obs_t, obs_e, A, np.clip(e_true, 0.01, 0.99))
        check = curve.time_grid <= 1.4
        truth = np.array([s_marginal(tau, 1) - s_marginal(tau, 0)
                          for tau in curve.time_grid[check]])
        assert float(np.max(np.abs(curve.ate[check] - truth))) < 0.05

    def test_length_mismatch(self):
        with pytest.raises(ConfigError, match="treatment length"):
            ate_curve([1.0, 2.0], [1, 1], [1.0], [0.5])
