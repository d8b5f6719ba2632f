import numpy as np
import pytest
import scipy.optimize
from scipy.special import expit

from effectbench.errors import ConfigError, FitError
from effectbench.learners import (
    LearnerSpec,
    default_library,
    fit_glm,
    fit_gbstumps,
    fit_lasso,
    fit_mean,
    fit_superlearner,
    kfold_assign,
    lasso_lambda_grid,
    nnls,
    select_lasso_lambda,
    spec_labels,
    stack_risk,
)

from _oracles import nnls_simplex_grid_objective, soft_threshold


def sse(Z, y, w):
    return float(np.sum((Z @ w - y) ** 2))


class TestKfold:
    def test_balanced_sizes(self):
        f = kfold_assign(10, 5, 0)
        assert sorted(np.bincount(f.fold_of)) == [2, 2, 2, 2, 2]
        f = kfold_assign(7, 5, 0)
        assert sorted(np.bincount(f.fold_of)) == [1, 1, 1, 2, 2]

    def test_deterministic(self):
        a = kfold_assign(50, 5, 3).fold_of
        b = kfold_assign(50, 5, 3).fold_of
        assert (a == b).all()
        c = kfold_assign(50, 5, 4).fold_of
        assert (a != c).any()

    def test_bad_k(self):
        with pytest.raises(ConfigError):
            kfold_assign(10, 1, 0)
        with pytest.raises(ConfigError, match="exceeds"):
            kfold_assign(3, 5, 0)


class TestGlm:
    def test_gaussian_matches_lstsq(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 3))
        y = 1.0 + X @ np.array([0.5, -1.0, 2.0]) + rng.normal(size=60)
        fit = fit_glm(X, y, "gaussian")
        Xd = np.hstack([np.ones((60, 1)), X])
        ref, *_ = np.linalg.lstsq(Xd, y, rcond=None)
        assert fit.params["intercept"] == pytest.approx(ref[0], abs=1e-10)
        assert fit.params["slopes"] == pytest.approx(ref[1:], abs=1e-10)

    def test_weighted_gaussian(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(50, 2))
        y = X @ np.array([1.0, -0.5]) + rng.normal(size=50)
        w = rng.uniform(0.5, 2.0, size=50)
        fit = fit_glm(X, y, "gaussian", case_weights=w)
        Xd = np.hstack([np.ones((50, 1)), X])
        ref = np.linalg.solve((Xd.T * w) @ Xd, (Xd.T * w) @ y)
        assert fit.params["intercept"] == pytest.approx(ref[0], abs=1e-10)
        assert fit.params["slopes"] == pytest.approx(ref[1:], abs=1e-10)

    def test_binomial_intercept_only_balanced(self):
        X = np.zeros((4, 1))
        y = np.array([0.0, 1.0, 0.0, 1.0])
        fit = fit_glm(X, y, "binomial")
        assert fit.params["intercept"] == pytest.approx(0.0, abs=1e-9)
        assert fit.predict(X) == pytest.approx([0.5] * 4, abs=1e-9)

    def test_binomial_recovers_coefficients(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(20000, 2))
        p = expit(0.3 + X @ np.array([0.8, -0.5]))
        y = rng.binomial(1, p).astype(float)
        fit = fit_glm(X, y, "binomial")
        assert fit.params["intercept"] == pytest.approx(0.3, abs=0.08)
        assert fit.params["slopes"] == pytest.approx([0.8, -0.5], abs=0.08)

    def test_binomial_score_equations_hold(self):
        rng = np.random.default_rng(4)
        for seed in range(3):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(200, 3))
            y = rng.binomial(1, expit(X @ np.array([0.5, 0.0, -0.7]))).astype(float)
            fit = fit_glm(X, y, "binomial")
            Xd = np.hstack([np.ones((200, 1)), X])
            beta = np.concatenate([[fit.params["intercept"]], fit.params["slopes"]])
            score = Xd.T @ (y - expit(Xd @ beta))
            assert np.max(np.abs(score)) < 1e-6

    def test_separation_detected(self):
        # small-scale covariate: the separating coefficient must blow past
        # the norm bound before the score can vanish
        X = np.array([[-0.002], [-0.001], [0.001], [0.002]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        with pytest.raises(FitError, match="separation suspected"):
            fit_glm(X, y, "binomial")

    def test_unit_scale_separation_saturates_instead(self):
        # at unit scale expit saturates in double precision well inside the
        # norm bound, so the fit converges with near-degenerate predictions
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        fit = fit_glm(X, y, "binomial")
        p = fit.predict(X)
        assert np.all(np.abs(p - y) < 1e-6)

    def test_collinear_design(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=30)
        X = np.stack([x, 2 * x], axis=1)
        y = rng.normal(size=30)
        with pytest.raises(FitError, match="collinear design"):
            fit_glm(X, y, "gaussian")

    def test_binomial_requires_01(self):
        with pytest.raises(ConfigError, match="0/1"):
            fit_glm(np.zeros((3, 1)), np.array([0.0, 0.5, 1.0]), "binomial")

    def test_unknown_family(self):
        with pytest.raises(ConfigError, match="unknown family"):
            fit_glm(np.zeros((3, 1)), np.zeros(3), "poisson")

    def test_shape_mismatch(self):
        with pytest.raises(ConfigError, match="rows"):
            fit_glm(np.zeros((3, 1)), np.zeros(4), "gaussian")


def test_fit_mean():
    y = np.array([0.0, 1.0, 1.0, 1.0])
    m = fit_mean(y, "binomial")
    assert m.predict(np.zeros((2, 3))) == pytest.approx([0.75, 0.75])
    g = fit_mean(np.array([1.0, 2.0, 6.0]), "gaussian")
    assert g.predict(np.zeros((1, 1)))[0] == pytest.approx(3.0)


class TestLasso:
    def test_huge_lambda_kills_slopes(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(80, 4))
        y = X @ np.array([1.0, 2.0, 0.0, -1.0]) + rng.normal(size=80)
        fit = fit_lasso(X, y, "gaussian", 1e6)
        assert np.all(fit.params["slopes"] == 0.0)
        assert fit.params["intercept"] == pytest.approx(float(y.mean()), abs=1e-12)

    def test_lambda_zero_matches_glm(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(100, 3))
        y = 0.5 + X @ np.array([1.0, -0.3, 0.0]) + rng.normal(size=100)
        lasso = fit_lasso(X, y, "gaussian", 0.0)
        glm = fit_glm(X, y, "gaussian")
        assert lasso.params["slopes"] == pytest.approx(glm.params["slopes"], abs=1e-4)
        assert lasso.params["intercept"] == pytest.approx(
            glm.params["intercept"], abs=1e-4)

    def test_lambda_zero_matches_glm_binomial(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(300, 2))
        y = rng.binomial(1, expit(0.2 + X @ np.array([0.6, -0.4]))).astype(float)
        lasso = fit_lasso(X, y, "binomial", 0.0)
        glm = fit_glm(X, y, "binomial")
        assert lasso.params["slopes"] == pytest.approx(glm.params["slopes"], abs=2e-3)
        assert lasso.params["intercept"] == pytest.approx(
            glm.params["intercept"], abs=2e-3)

    def test_single_covariate_soft_threshold_formula(self):
        # with one standardized covariate the solution is closed-form
        rng = np.random.default_rng(9)
        x = rng.normal(size=200)
        z = (x - x.mean()) / x.std()
        y = 2.0 * z + rng.normal(size=200)
        lam = 0.3
        fit = fit_lasso(x[:, None], y, "gaussian", lam)
        expected_std_coef = soft_threshold(float(z @ (y - y.mean())) / 200, lam)
        assert fit.params["slopes"][0] * x.std() == pytest.approx(
            expected_std_coef, abs=1e-7)

    def test_kkt_conditions_gaussian(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(120, 5))
        y = X @ np.array([2.0, 0.0, 0.0, -1.0, 0.1]) + rng.normal(size=120)
        lam = 0.2
        fit = fit_lasso(X, y, "gaussian", lam)
        Z = (X - X.mean(axis=0)) / X.std(axis=0)
        beta_std = fit.params["slopes"] * X.std(axis=0)
        b0 = fit.params["intercept"] + float(fit.params["slopes"] @ X.mean(axis=0))
        grad = Z.T @ (y - b0 - Z @ beta_std) / len(y)
        for j in range(5):
            if beta_std[j] != 0:
                assert grad[j] == pytest.approx(lam * np.sign(beta_std[j]), abs=1e-5)
            else:
                assert abs(grad[j]) <= lam + 1e-5

    def test_negative_lambda(self):
        with pytest.raises(ConfigError, match="negative lambda"):
            fit_lasso(np.zeros((3, 1)), np.zeros(3), "gaussian", -1.0)

    def test_constant_column_stays_zero(self):
        rng = np.random.default_rng(11)
        X = np.hstack([np.ones((50, 1)), rng.normal(size=(50, 1))])
        y = X[:, 1] + rng.normal(size=50)
        fit = fit_lasso(X, y, "gaussian", 0.01)
        assert fit.params["slopes"][0] == 0.0


class TestLambdaSelection:
    def test_grid_shape(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(60, 3))
        y = X[:, 0] + rng.normal(size=60)
        grid = lasso_lambda_grid(X, y, "gaussian")
        assert len(grid) == 20
        assert grid[0] / grid[-1] == pytest.approx(1000.0)
        assert np.all(np.diff(grid) < 0)

    def test_lambda_max_kills_everything(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(60, 3))
        y = X[:, 0] + rng.normal(size=60)
        grid = lasso_lambda_grid(X, y, "gaussian")
        fit = fit_lasso(X, y, "gaussian", float(grid[0]))
        assert np.all(fit.params["slopes"] == 0.0)

    def test_selection_returns_grid_member(self):
        rng = np.random.default_rng(14)
        X = rng.normal(size=(80, 4))
        y = X @ np.array([1.5, 0.0, 0.0, 0.0]) + rng.normal(size=80)
        lam = select_lasso_lambda(X, y, "gaussian", seed=1)
        grid = lasso_lambda_grid(X, y, "gaussian")
        assert any(lam == pytest.approx(g) for g in grid)
        assert select_lasso_lambda(X, y, "gaussian", seed=1) == lam


class TestGbstumps:
    def test_zero_rounds_is_constant(self):
        y = np.array([0.0, 1.0, 1.0, 0.0])
        fit = fit_gbstumps(np.zeros((4, 2)), y, "binomial", rounds=0)
        assert fit.predict(np.zeros((4, 2))) == pytest.approx([0.5] * 4)
        g = fit_gbstumps(np.zeros((4, 1)), np.array([1.0, 2.0, 3.0, 4.0]),
                         "gaussian", rounds=0)
        assert g.predict(np.zeros((1, 1)))[0] == pytest.approx(2.5)

    def test_one_round_fits_step_function(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([1.0, 1.0, 5.0, 5.0])
        fit = fit_gbstumps(X, y, "gaussian", rounds=1, learning_rate=1.0)
        assert fit.predict(X) == pytest.approx(y, abs=1e-12)
        s = fit.params["stumps"][0]
        assert s.threshold == pytest.approx(1.5)

    def test_training_loss_nonincreasing(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(150, 3))
            for family in ("gaussian", "binomial"):
                if family == "binomial":
                    y = rng.binomial(1, expit(X[:, 0])).astype(float)
                else:
                    y = np.sin(X[:, 0]) + rng.normal(scale=0.5, size=150)
                losses = []
                for rounds in (0, 5, 20, 50):
                    fit = fit_gbstumps(X, y, family, rounds=rounds,
                                       learning_rate=0.2)
                    losses.append(stack_risk(y, fit.predict(X)))
                assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_deterministic(self):
        rng = np.random.default_rng(15)
        X = rng.normal(size=(100, 2))
        y = rng.normal(size=100)
        p1 = fit_gbstumps(X, y, "gaussian", rounds=30).predict(X)
        p2 = fit_gbstumps(X, y, "gaussian", rounds=30).predict(X)
        assert (p1 == p2).all()

    def test_constant_features_fall_back_to_intercept_steps(self):
        X = np.ones((6, 2))
        y = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 1.0])
        fit = fit_gbstumps(X, y, "binomial", rounds=50, learning_rate=0.5)
        assert fit.predict(X) == pytest.approx([2 / 3] * 6, abs=1e-3)

    def test_hyperparameter_validation(self):
        with pytest.raises(ConfigError, match="rounds"):
            fit_gbstumps(np.zeros((3, 1)), np.zeros(3), "gaussian", rounds=-1)
        with pytest.raises(ConfigError, match="learning_rate"):
            fit_gbstumps(np.zeros((3, 1)), np.zeros(3), "gaussian",
                         learning_rate=1.5)


class TestNnls:
    def test_exact_column_match(self):
        rng = np.random.default_rng(16)
        Z = rng.normal(size=(40, 3))
        y = Z[:, 1].copy()
        w = nnls(Z, y)
        assert w == pytest.approx([0.0, 1.0, 0.0], abs=1e-8)

    def test_matches_simplex_grid(self):
        for seed in (17, 18, 19):
            rng = np.random.default_rng(seed)
            Z = np.clip(rng.normal(0.5, 0.25, size=(50, 3)), 0, 1)
            y = rng.binomial(1, np.clip(Z @ [0.5, 0.3, 0.2], 0.01, 0.99)).astype(float)
            w = nnls(Z, y)
            grid_obj = nnls_simplex_grid_objective(Z, y, step=1e-3)
            assert sse(Z, y, w) <= grid_obj + 1e-6

    def test_matches_scipy(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            Z = rng.normal(size=(30, 4))
            y = rng.normal(size=30)
            mine = nnls(Z, y)
            ref, _ = scipy.optimize.nnls(Z, y)
            assert sse(Z, y, mine) == pytest.approx(sse(Z, y, ref), abs=1e-8)
            assert np.all(mine >= 0)

    def test_kkt_certificate(self):
        rng = np.random.default_rng(20)
        Z = rng.normal(size=(60, 5))
        y = rng.normal(size=60)
        w = nnls(Z, y)
        grad = Z.T @ (y - Z @ w)
        assert np.all(grad[w == 0] <= 1e-8)
        assert np.max(np.abs(grad[w > 0])) < 1e-8


class TestSuperLearner:
    def test_single_learner_gets_unit_weight(self):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(80, 2))
        y = rng.binomial(1, expit(X[:, 0])).astype(float)
        sl = fit_superlearner(X, y, "binomial", [LearnerSpec("glm")], seed=0)
        assert sl.weights.tolist() == [1.0]
        assert sl.labels == ["glm"]

    def test_correct_model_dominates(self):
        hits = 0
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            X = rng.normal(size=(2000, 2))
            y = rng.binomial(1, expit(1.2 * X[:, 0] - 0.8 * X[:, 1])).astype(float)
            sl = fit_superlearner(
                X, y, "binomial",
                [LearnerSpec("glm"), LearnerSpec("mean")], seed=seed)
            if sl.weights[sl.labels.index("glm")] >= 0.9:
                hits += 1
        assert hits >= 9

    def test_meta_risk_never_exceeds_best_single(self):
        for seed in range(8):
            rng = np.random.default_rng(200 + seed)
            X = rng.normal(size=(120, 3))
            y = rng.binomial(1, expit(0.5 * X[:, 0])).astype(float)
            sl = fit_superlearner(
                X, y, "binomial",
                [LearnerSpec("glm"), LearnerSpec("mean"),
                 LearnerSpec("gbstumps", {"rounds": 20})],
                seed=seed)
            assert sl.meta_risk <= float(np.min(sl.cv_risks)) + 1e-9
            assert sl.weights.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(sl.weights >= 0)

    def test_oof_risks_are_honest(self):
        rng = np.random.default_rng(22)
        X = rng.normal(size=(100, 2))
        y = rng.binomial(1, expit(X[:, 0])).astype(float)
        sl = fit_superlearner(X, y, "binomial",
                              [LearnerSpec("glm"), LearnerSpec("mean")], seed=3)
        # the mean learner's OOF risk should be close to variance of y
        null_risk = sl.cv_risks[sl.labels.index("mean")]
        assert null_risk == pytest.approx(float(np.var(y)), abs=0.02)

    def test_failing_learner_dropped_with_warning(self):
        rng = np.random.default_rng(23)
        x = rng.normal(size=80)
        X = np.stack([x, x], axis=1)  # duplicated column kills the GLM
        y = rng.binomial(1, expit(x)).astype(float)
        sl = fit_superlearner(
            X, y, "binomial",
            [LearnerSpec("glm"), LearnerSpec("gbstumps", {"rounds": 10})],
            seed=0)
        assert sl.labels == ["gbstumps"]
        assert any("glm dropped" in w and "collinear" in w for w in sl.warnings)
        assert sl.weights.tolist() == [1.0]

    def test_all_learners_failing_raises(self):
        rng = np.random.default_rng(24)
        x = rng.normal(size=40)
        X = np.stack([x, x], axis=1)
        y = rng.normal(size=40)
        with pytest.raises(FitError, match="every base learner failed"):
            fit_superlearner(X, y, "gaussian",
                             [LearnerSpec("glm"), LearnerSpec("glm")], seed=0)

    def test_duplicate_kind_labels(self):
        lib = [LearnerSpec("glm"), LearnerSpec("glm"), LearnerSpec("mean")]
        assert spec_labels(lib) == ["glm#1", "glm#2", "mean"]

    def test_predictions_are_probabilities(self):
        rng = np.random.default_rng(25)
        X = rng.normal(size=(90, 2))
        y = rng.binomial(1, expit(X[:, 0])).astype(float)
        sl = fit_superlearner(X, y, "binomial",
                              [LearnerSpec("glm"), LearnerSpec("mean")], seed=1)
        p = sl.predict(rng.normal(size=(50, 2)))
        assert np.all((p > 0) & (p < 1))

    def test_deterministic(self):
        rng = np.random.default_rng(26)
        X = rng.normal(size=(70, 2))
        y = rng.binomial(1, expit(X[:, 0])).astype(float)
        a = fit_superlearner(X, y, "binomial", seed=5)
        b = fit_superlearner(X, y, "binomial", seed=5)
        assert (a.weights == b.weights).all()
        assert (a.predict(X) == b.predict(X)).all()

    def test_default_library_contents(self):
        kinds = [s.kind for s in default_library()]
        assert kinds == ["glm", "lasso", "gbstumps"]

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError, match="unknown learner kind"):
            fit_superlearner(np.zeros((20, 1)), np.zeros(20), "gaussian",
                             [LearnerSpec("forest")], seed=0)
