import numpy as np
import pytest
from scipy.special import expit
from scipy.stats import norm

from metamodel.exceptions import DataError
from metamodel.learners import (
    CLASSIFICATION_CATALOGUE,
    ClassifierSpec,
    classifier_importance,
    classify,
    fit_classifier,
    predict_proba,
)

FAST_HP = {
    "random-forest": {"n_trees": 10},
    "gradient-boosted-trees": {"n_stages": 15, "max_depth": 3},
    "mlp": {"hidden": (16,), "max_epochs": 8, "patience": 3},
    "resnet": {"width": 16, "n_blocks": 1, "max_epochs": 8, "patience": 3},
}


def blob_problem(seed=0, n=120, p=3, sep=1.5):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.5).astype(float)
    X = rng.normal(size=(n, p))
    X[:, 0] += sep * (2 * y - 1)
    return X, y


class TestLogistic:
    def test_separable_data_perfect_training_accuracy(self):
        rng = np.random.default_rng(1)
        n = 60
        y = np.repeat([0.0, 1.0], n // 2)
        X = rng.normal(size=(n, 2))
        X[:, 0] += 4.0 * (2 * y - 1)  # wide margin
        trained = fit_classifier(ClassifierSpec("logistic"), X, y)
        labels = classify(trained, X, 0.5)
        assert np.array_equal(labels, y)

    def test_objective_nondecreasing_per_newton_step(self):
        X, y = blob_problem(2)
        trained = fit_classifier(ClassifierSpec("logistic"), X, y)
        path = np.array(trained.model.objective_path_)
        assert np.all(np.diff(path) >= -1e-12)

    def test_sigmoid_formula_exact(self):
        X, y = blob_problem(3)
        trained = fit_classifier(ClassifierSpec("logistic"), X, y)
        w, b = trained.model.coef_, trained.model.intercept_
        probe = np.random.default_rng(4).normal(size=(20, X.shape[1]))
        assert np.array_equal(predict_proba(trained, probe), expit(probe @ w + b))

    def test_importance_is_coefficient_magnitude(self):
        X, y = blob_problem(5)
        trained = fit_classifier(ClassifierSpec("logistic"), X, y)
        assert np.array_equal(classifier_importance(trained),
                              np.abs(trained.model.coef_))

    def test_importance_proportional_to_fixed_coefficients(self):
        from metamodel.learners.linear import LogisticRegression
        from metamodel.learners import TrainedClassifier

        inner = LogisticRegression()
        inner.coef_ = np.array([2.0, -0.1])
        inner.intercept_ = 0.0
        trained = TrainedClassifier(
            spec=ClassifierSpec("logistic"), feature_names=("f_0", "f_1"),
            model=inner, class_counts=(1, 1),
            builtin_importance=np.abs(inner.coef_))
        imp = classifier_importance(trained)
        assert np.allclose(imp / imp[1], [20.0, 1.0])


class TestNaiveBayes:
    def test_identical_conditionals_return_prior(self):
        rng = np.random.default_rng(6)
        Z = rng.normal(size=(40, 3))
        # class 1 = two copies of Z: identical per-class mean/variance, prior 2/3
        X = np.vstack([Z, Z, Z])
        y = np.array([0.0] * 40 + [1.0] * 80)
        trained = fit_classifier(ClassifierSpec("naive-bayes"), X, y)
        probe = rng.normal(size=(25, 3))
        assert np.allclose(predict_proba(trained, probe), 2.0 / 3.0, atol=1e-6)


class TestDiscriminants:
    def test_lda_on_separated_blobs(self):
        # Bayes accuracy for unit blobs at +-2 is Phi(2) ~ 0.977
        rng = np.random.default_rng(7)
        n = 500
        y = (rng.random(n) < 0.5).astype(float)
        X = rng.normal(size=(n, 2))
        X[:, 0] += 2.0 * (2 * y - 1)
        assert norm.cdf(2.0) > 0.97
        trained = fit_classifier(ClassifierSpec("lda"), X[:400], y[:400])
        acc = np.mean(classify(trained, X[400:], 0.5) == y[400:])
        assert acc >= 0.95

    def test_lda_qda_coincide_with_shared_scatter(self):
        rng = np.random.default_rng(8)
        Z = rng.normal(size=(60, 3)) @ np.diag([1.0, 2.0, 0.5])
        shift = np.array([1.0, -1.0, 0.5])
        X = np.vstack([Z, Z + shift])  # identical class scatter matrices
        y = np.array([0.0] * 60 + [1.0] * 60)
        lda = fit_classifier(ClassifierSpec("lda"), X, y)
        qda = fit_classifier(ClassifierSpec("qda"), X, y)
        probe = rng.normal(size=(30, 3))
        assert np.allclose(predict_proba(lda, probe), predict_proba(qda, probe),
                           atol=1e-6)

    def test_qda_has_no_builtin_importance(self):
        X, y = blob_problem(9)
        trained = fit_classifier(ClassifierSpec("qda"), X, y)
        assert classifier_importance(trained) is None

    def test_lda_importance_is_coefficient_magnitude(self):
        X, y = blob_problem(10)
        trained = fit_classifier(ClassifierSpec("lda"), X, y)
        assert np.array_equal(classifier_importance(trained),
                              np.abs(trained.model.coef_))


class TestKnn:
    def test_unanimous_vote_gives_one(self):
        X = np.vstack([np.zeros((5, 2)), np.ones((5, 2)) * 10])
        y = np.array([1.0] * 5 + [0.0] * 5)
        trained = fit_classifier(ClassifierSpec("knn", {"k": 5}), X, y)
        assert predict_proba(trained, np.zeros((1, 2)))[0] == 1.0


class TestGradientBoosting:
    def test_zero_stages_returns_prior_rate(self):
        X, y = blob_problem(11, n=80)
        trained = fit_classifier(
            ClassifierSpec("gradient-boosted-trees", {"n_stages": 0}), X, y)
        prob = predict_proba(trained, X)
        assert np.allclose(prob, np.mean(y), atol=1e-12)

    def test_logistic_loss_monotone(self):
        X, y = blob_problem(12, n=150)
        trained = fit_classifier(
            ClassifierSpec("gradient-boosted-trees", {"n_stages": 25, "max_depth": 3}),
            X, y)
        path = np.array(trained.model.train_loss_path_)
        assert np.all(np.diff(path) <= 1e-12)


class TestRandomForest:
    def test_importance_finds_indicator_feature(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(200, 3))
        y = (X[:, 1] > 0).astype(float)
        # consider every feature per split so the indicator always wins
        trained = fit_classifier(
            ClassifierSpec("random-forest", {"n_trees": 30, "max_features": 3}), X, y)
        imp = classifier_importance(trained)
        assert imp[1] / imp.sum() > 0.9
        # exhaustive Gini split oracle: x1 gives the largest single-split gain
        def best_gini_gain(j):
            xs = np.sort(X[:, j])
            parent = 2 * y.sum() * (len(y) - y.sum()) / len(y)
            gains = []
            for cut in (xs[:-1] + xs[1:]) / 2:
                l, r = y[X[:, j] <= cut], y[X[:, j] > cut]
                child = (2 * l.sum() * (len(l) - l.sum()) / max(len(l), 1)
                         + 2 * r.sum() * (len(r) - r.sum()) / max(len(r), 1))
                gains.append(parent - child)
            return max(gains)
        gains = [best_gini_gain(j) for j in range(3)]
        assert int(np.argmax(gains)) == 1


class TestGaussianProcess:
    def test_mode_finding_objective_nondecreasing(self):
        X, y = blob_problem(14, n=80)
        trained = fit_classifier(ClassifierSpec("gaussian-process"), X, y)
        path = np.array(trained.model.objective_path_)
        assert np.all(np.diff(path) >= -1e-12)

    def test_gradient_norm_small_at_mode(self):
        X, y = blob_problem(15, n=80)
        trained = fit_classifier(ClassifierSpec("gaussian-process"), X, y)
        assert trained.model.final_grad_norm_ < 1e-6


class TestClassify:
    def test_threshold_examples(self):
        X, y = blob_problem(16, n=40)
        trained = fit_classifier(ClassifierSpec("logistic"), X, y)
        probas = np.array([0.4, 0.6])

        class Stub:
            feature_names = trained.feature_names

            @staticmethod
            def predict_proba(_):
                return probas

        stub = trained.__class__(spec=trained.spec, feature_names=trained.feature_names,
                                 model=Stub(), class_counts=(1, 1),
                                 builtin_importance=None)
        assert classify(stub, np.zeros((2, X.shape[1])), 0.5).tolist() == [0.0, 1.0]

    def test_tie_resolves_to_class_one(self):
        X, y = blob_problem(17, n=40)
        trained = fit_classifier(ClassifierSpec("logistic"), X, y)

        class Stub:
            @staticmethod
            def predict_proba(_):
                return np.array([0.5])

        stub = trained.__class__(spec=trained.spec, feature_names=trained.feature_names,
                                 model=Stub(), class_counts=(1, 1),
                                 builtin_importance=None)
        assert classify(stub, np.zeros((1, X.shape[1])), 0.5)[0] == 1.0

    def test_out_of_range_threshold(self):
        X, y = blob_problem(18, n=40)
        trained = fit_classifier(ClassifierSpec("logistic"), X, y)
        with pytest.raises(DataError, match="threshold"):
            classify(trained, X, 1.5)


class TestAllKinds:
    @pytest.mark.parametrize("kind", CLASSIFICATION_CATALOGUE)
    def test_probabilities_in_unit_interval(self, kind):
        X, y = blob_problem(19, n=60)
        trained = fit_classifier(ClassifierSpec(kind, FAST_HP.get(kind, {}), seed=3), X, y)
        probe = np.random.default_rng(20).normal(scale=3.0, size=(100, X.shape[1]))
        prob = predict_proba(trained, probe)
        assert np.all(prob >= 0.0) and np.all(prob <= 1.0)

    @pytest.mark.parametrize("kind", CLASSIFICATION_CATALOGUE)
    def test_relabel_symmetry(self, kind):
        X, y = blob_problem(21, n=60)
        hp = FAST_HP.get(kind, {})
        probe = np.random.default_rng(22).normal(size=(25, X.shape[1]))
        p_orig = predict_proba(fit_classifier(ClassifierSpec(kind, hp, seed=4), X, y), probe)
        p_flip = predict_proba(fit_classifier(ClassifierSpec(kind, hp, seed=4), X, 1.0 - y), probe)
        assert np.allclose(p_orig, 1.0 - p_flip, atol=1e-6)

    @pytest.mark.parametrize("kind", CLASSIFICATION_CATALOGUE)
    def test_refit_is_bitwise_identical(self, kind):
        X, y = blob_problem(23, n=60)
        hp = FAST_HP.get(kind, {})
        probe = np.random.default_rng(24).normal(size=(15, X.shape[1]))
        spec = ClassifierSpec(kind, hp, seed=6)
        a = predict_proba(fit_classifier(spec, X, y), probe)
        b = predict_proba(fit_classifier(spec, X, y), probe)
        assert np.array_equal(a, b)

    def test_single_class_errors(self):
        X = np.random.default_rng(25).normal(size=(30, 2))
        with pytest.raises(DataError, match="single class"):
            fit_classifier(ClassifierSpec("logistic"), X, np.ones(30))

    def test_non_binary_labels_error(self):
        X = np.random.default_rng(26).normal(size=(30, 2))
        y = np.random.default_rng(27).integers(0, 3, size=30).astype(float)
        with pytest.raises(DataError, match="0/1"):
            fit_classifier(ClassifierSpec("logistic"), X, y)
