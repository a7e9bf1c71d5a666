import numpy as np
import pytest

from metamodel.exceptions import DataError
from metamodel.learners import (
    REGRESSION_CATALOGUE,
    RegressorSpec,
    fit_regressor,
    predict_regressor,
    regressor_importance,
)
from metamodel.learners.kernel import gaussian_kernel
from metamodel.learners.neural import (
    MlpCore,
    ResNetCore,
    flatten_params,
    loss_and_gradient,
    set_flat_params,
)
from metamodel.learners.trees import grow_tree

FAST_HP = {
    "random-forest": {"n_trees": 10},
    "gradient-boosted-trees": {"n_stages": 15, "max_depth": 3},
    "mlp": {"hidden": (16,), "max_epochs": 8, "patience": 3},
    "resnet": {"width": 16, "n_blocks": 1, "max_epochs": 8, "patience": 3},
}


def small_problem(seed=0, n=60, p=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = 1.5 * X[:, 0] - 0.5 * X[:, 1] + 0.05 * rng.normal(size=n)
    return X, y


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(DataError, match="unknown regressor kind"):
            RegressorSpec("boosted-stumps")

    def test_unknown_hyperparameter(self):
        with pytest.raises(DataError, match="does not accept"):
            RegressorSpec("ridge", {"gamma": 2.0})

    def test_negative_seed(self):
        with pytest.raises(DataError, match="seed"):
            RegressorSpec("ridge", {}, seed=-1)


class TestRidge:
    def test_noiseless_linear_recovery(self):
        X = np.linspace(-1, 1, 20)[:, None]
        y = 2.0 * X[:, 0]
        trained = fit_regressor(RegressorSpec("ridge", {"alpha": 1e-8}), X, y)
        assert abs(trained.model.coef_[0] - 2.0) < 1e-4

    def test_matches_least_squares_oracle(self, rng):
        for _ in range(10):
            X = rng.normal(size=(50, 5))
            y = rng.normal(size=50)
            trained = fit_regressor(RegressorSpec("ridge", {"alpha": 0.0}), X, y)
            pred = predict_regressor(trained, X)
            coef, *_ = np.linalg.lstsq(np.hstack([X, np.ones((50, 1))]), y, rcond=None)
            oracle = np.hstack([X, np.ones((50, 1))]) @ coef
            assert np.allclose(pred, oracle, rtol=1e-6, atol=1e-8)

    def test_importance_tracks_coefficients(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(100, 2))
        y = 3.0 * X[:, 0] + 0.01 * rng.normal(size=100)
        trained = fit_regressor(RegressorSpec("ridge"), X, y)
        imp = regressor_importance(trained)
        assert imp[0] > imp[1]


class TestLasso:
    def test_full_shrinkage_limit(self):
        X, y = small_problem(1)
        trained = fit_regressor(RegressorSpec("lasso", {"alpha": 1e6}), X, y)
        assert np.all(trained.model.coef_ == 0.0)
        assert np.allclose(predict_regressor(trained, X), np.mean(y))

    def test_objective_monotone_per_sweep(self, rng):
        X = rng.normal(size=(80, 6))
        y = rng.normal(size=80)
        trained = fit_regressor(RegressorSpec("lasso", {"alpha": 0.05}), X, y)
        path = np.array(trained.model.objective_path_)
        assert np.all(np.diff(path) <= 1e-12)

    def test_recovers_sparse_signal(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(200, 5))
        y = 2.0 * X[:, 2] + 0.01 * rng.normal(size=200)
        trained = fit_regressor(RegressorSpec("lasso", {"alpha": 0.01}), X, y)
        coef = trained.model.coef_
        assert abs(coef[2]) > 1.5
        assert np.all(np.abs(np.delete(coef, 2)) < 0.1)


class TestKnn:
    def test_k1_memorizes(self):
        X, y = small_problem(2)
        trained = fit_regressor(RegressorSpec("knn", {"k": 1}), X, y)
        assert np.array_equal(predict_regressor(trained, X), y)

    def test_k_larger_than_train_errors(self):
        X, y = small_problem(2, n=4)
        with pytest.raises(DataError, match="at least"):
            fit_regressor(RegressorSpec("knn", {"k": 10}), X, y)


class TestRandomForest:
    def test_memorizes_unique_rows_without_bootstrap(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(40, 3))  # continuous draws: rows unique
        y = rng.normal(size=40)
        trained = fit_regressor(
            RegressorSpec("random-forest",
                          {"n_trees": 15, "min_leaf": 1, "bootstrap": False}),
            X, y)
        assert np.allclose(predict_regressor(trained, X), y, atol=1e-9)

    def test_importance_finds_single_signal(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(300, 4))
        y = np.where(X[:, 2] > 0, 1.0, -1.0)
        trained = fit_regressor(
            RegressorSpec("random-forest", {"n_trees": 30}), X, y)
        imp = regressor_importance(trained)
        # per-split feature subsampling lets nuisance splits take a small share
        assert imp[2] / imp.sum() > 0.85
        assert imp[2] > 10 * max(imp[j] for j in (0, 1, 3))


class TestGradientBoosting:
    def test_loss_monotone_per_stage(self, rng):
        X = rng.normal(size=(100, 4))
        y = rng.normal(size=100)
        trained = fit_regressor(
            RegressorSpec("gradient-boosted-trees", {"n_stages": 30, "max_depth": 3}),
            X, y)
        path = np.array(trained.model.train_loss_path_)
        assert np.all(np.diff(path) <= 1e-12)

    def test_importance_concentrates_on_step_feature(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(100, 4))
        y = np.where(X[:, 2] > 0.0, 1.0, 0.0)
        trained = fit_regressor(
            RegressorSpec("gradient-boosted-trees", {"n_stages": 20, "max_depth": 2}),
            X, y)
        imp = regressor_importance(trained)
        assert imp[2] / imp.sum() > 0.9
        # exhaustive first-split oracle: x2 must give the best single split
        best = {}
        for j in range(4):
            xs = np.sort(X[:, j])
            gains = []
            for cut in (xs[:-1] + xs[1:]) / 2.0:
                left = y[X[:, j] <= cut]
                right = y[X[:, j] > cut]
                sse = (np.sum((left - left.mean()) ** 2)
                       + np.sum((right - right.mean()) ** 2))
                gains.append(np.sum((y - y.mean()) ** 2) - sse)
            best[j] = max(gains)
        assert max(best, key=best.get) == 2

    def test_zero_stages_predicts_mean(self):
        X, y = small_problem(7)
        trained = fit_regressor(
            RegressorSpec("gradient-boosted-trees", {"n_stages": 0}), X, y)
        assert np.allclose(predict_regressor(trained, X), np.mean(y))


class TestGaussianProcess:
    def test_interpolates_noiseless_data(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(-2, 2, size=(30, 2))
        y = np.sin(X[:, 0]) + 0.5 * X[:, 1]
        trained = fit_regressor(RegressorSpec("gaussian-process", {"noise": 1e-8}), X, y)
        pred = predict_regressor(trained, X)
        assert np.max(np.abs(pred - y)) < 1e-3
        # independent linear-solve oracle on the same kernel
        model = trained.model
        K = gaussian_kernel(X, X, model.h_) + 1e-8 * np.eye(30)
        ys = (y - model.scaler_.mean) / model.scaler_.std
        oracle = model.scaler_.unscale(
            gaussian_kernel(X, X, model.h_) @ np.linalg.solve(K, ys))
        assert np.allclose(pred, oracle, atol=1e-6)

    def test_posterior_contraction_at_training_points(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(40, 2))
        y = X[:, 0] ** 2 + rng.normal(size=40)
        noise = 0.05
        trained = fit_regressor(RegressorSpec("gaussian-process", {"noise": noise}), X, y)
        _, var = trained.model.predict_with_variance(X)
        assert np.all(var <= trained.model.noise_variance_ + 1e-9 * trained.model.scaler_.std ** 2)

    def test_row_cap_subsamples(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(60, 2))
        y = rng.normal(size=60)
        trained = fit_regressor(
            RegressorSpec("gaussian-process", {"max_rows": 25}), X, y)
        assert trained.model.X_.shape[0] == 25


class TestRbfInterpolation:
    def test_zero_smoothing_interpolates(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(-1, 1, size=(25, 2))
        y = np.cos(2 * X[:, 0]) * X[:, 1]
        trained = fit_regressor(RegressorSpec("rbf-interpolation", {"smoothing": 0.0}), X, y)
        assert np.max(np.abs(predict_regressor(trained, X) - y)) < 1e-6


class TestNeuralGradients:
    def test_mlp_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(12)
        core = MlpCore([1, 3, 1], rng)  # 3 + 3 + 3 + 1 = 10 parameters
        flat = rng.normal(size=flatten_params(core.params()).shape) * 0.7
        set_flat_params(core, flat)
        X = rng.normal(size=(12, 1))
        y = rng.normal(size=12)
        _, cache = core.forward(X)
        assert min(np.abs(z).min() for z in cache[0]) > 1e-4  # away from ReLU kinks
        _assert_gradient_matches(core, X, y)

    def test_resnet_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        core = ResNetCore(2, 2, 1, rng)
        flat = rng.normal(size=flatten_params(core.params()).shape) * 0.7
        set_flat_params(core, flat)
        X = rng.normal(size=(10, 2))
        y = rng.normal(size=10)
        _assert_gradient_matches(core, X, y)

    def test_classification_gradient_matches(self):
        rng = np.random.default_rng(14)
        core = MlpCore([2, 3, 1], rng)
        flat = rng.normal(size=flatten_params(core.params()).shape) * 0.7
        set_flat_params(core, flat)
        X = rng.normal(size=(16, 2))
        y = (rng.random(16) < 0.5).astype(float)
        _assert_gradient_matches(core, X, y, task="classification")


def _assert_gradient_matches(core, X, y, task="regression", tol=1e-4):
    flat = flatten_params(core.params())
    _, analytic = loss_and_gradient(core, X, y, task)
    fd = np.empty_like(flat)
    h = 1e-6
    for k in range(flat.size):
        up = flat.copy()
        up[k] += h
        set_flat_params(core, up)
        loss_up, _ = loss_and_gradient(core, X, y, task)
        down = flat.copy()
        down[k] -= h
        set_flat_params(core, down)
        loss_down, _ = loss_and_gradient(core, X, y, task)
        fd[k] = (loss_up - loss_down) / (2 * h)
    set_flat_params(core, flat)
    rel = np.linalg.norm(analytic - fd) / max(np.linalg.norm(analytic), 1e-12)
    assert rel < tol


class TestDeterminism:
    @pytest.mark.parametrize("kind", REGRESSION_CATALOGUE)
    def test_refit_is_bitwise_identical(self, kind):
        X, y = small_problem(20, n=40)
        probe = np.random.default_rng(21).normal(size=(15, X.shape[1]))
        hp = FAST_HP.get(kind, {})
        spec = RegressorSpec(kind, hp, seed=5)
        a = predict_regressor(fit_regressor(spec, X, y), probe)
        b = predict_regressor(fit_regressor(spec, X, y), probe)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("kind", REGRESSION_CATALOGUE)
    def test_predictions_finite(self, kind):
        X, y = small_problem(22, n=40)
        probe = np.random.default_rng(23).normal(size=(10, X.shape[1]))
        trained = fit_regressor(RegressorSpec(kind, FAST_HP.get(kind, {}), seed=1), X, y)
        assert np.isfinite(predict_regressor(trained, probe)).all()


class TestImportanceContract:
    def test_builtin_presence_by_kind(self):
        X, y = small_problem(24, n=40)
        with_builtin = {"lasso", "ridge", "random-forest", "gradient-boosted-trees"}
        for kind in REGRESSION_CATALOGUE:
            trained = fit_regressor(
                RegressorSpec(kind, FAST_HP.get(kind, {}), seed=2), X, y)
            imp = regressor_importance(trained)
            if kind in with_builtin:
                assert imp is not None and imp.shape == (X.shape[1],)
                assert np.all(imp >= 0)
            else:
                assert imp is None


class TestInputValidation:
    def test_nonfinite_rejected(self):
        X = np.array([[1.0], [np.nan]])
        with pytest.raises(DataError, match="non-finite"):
            fit_regressor(RegressorSpec("ridge"), X, np.array([1.0, 2.0]))

    def test_column_mismatch_on_predict(self):
        X, y = small_problem(25, n=30)
        trained = fit_regressor(RegressorSpec("ridge"), X, y)
        with pytest.raises(DataError, match="feature columns"):
            predict_regressor(trained, X[:, :2])


class TestGrowTree:
    def test_pure_node_is_leaf(self):
        X = np.arange(8.0)[:, None]
        tree = grow_tree(X, np.ones(8), None, criterion="newton",
                         max_depth=None, min_leaf=1, max_features=None, rng=None)
        assert tree.feature.tolist() == [-1]
        assert tree.value[0] == 1.0

    def test_min_leaf_respected(self):
        X = np.arange(10.0)[:, None]
        y = np.arange(10.0)
        tree = grow_tree(X, y, None, criterion="newton", max_depth=None,
                         min_leaf=3, max_features=None, rng=None)
        leaves = tree.feature == -1
        # every leaf must have been reachable only with >= 3 samples
        counts = _leaf_counts(tree, X)
        assert min(counts.values()) >= 3

    def test_deterministic_split_choice(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])  # x0 and x1... only x0 separates
        tree = grow_tree(X, y, None, criterion="newton", max_depth=1,
                         min_leaf=1, max_features=None, rng=None)
        assert tree.feature[0] == 0


def _leaf_counts(tree, X):
    counts = {}
    for row in X:
        node = 0
        while tree.feature[node] >= 0:
            if row[tree.feature[node]] <= tree.threshold[node]:
                node = tree.left[node]
            else:
                node = tree.right[node]
        counts[node] = counts.get(node, 0) + 1
    return counts
