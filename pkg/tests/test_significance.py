import numpy as np
import pytest

from metamodel.exceptions import DataError
from metamodel.significance import bootstrap_compare


def noisy_pair(seed, n=200, sigma=1.0):
    rng = np.random.default_rng(seed)
    truth = rng.normal(size=n)
    pred_a = truth + sigma * rng.normal(size=n)
    pred_b = truth + sigma * rng.normal(size=n)
    return pred_a, pred_b, truth


class TestBootstrapCompare:
    def test_identical_predictions_give_exactly_half(self):
        rng = np.random.default_rng(0)
        truth = rng.normal(size=50)
        pred = truth + rng.normal(size=50)
        result = bootstrap_compare(pred, pred.copy(), truth, "rmse",
                                   n_boot=400, seed=1)
        assert result.p_value == 0.5

    def test_perfect_model_beats_reversed(self):
        rng = np.random.default_rng(2)
        truth = rng.normal(size=100)
        result = bootstrap_compare(truth.copy(), truth[::-1].copy(), truth,
                                   "rmse", n_boot=500, seed=3)
        assert result.p_value < 0.01

    def test_equal_quality_predictors_calibrated(self):
        p_values = []
        for seed in range(10):
            pred_a, pred_b, truth = noisy_pair(seed)
            result = bootstrap_compare(pred_a, pred_b, truth, "rmse",
                                       n_boot=400, seed=seed)
            p_values.append(result.p_value)
        assert 0.4 <= float(np.mean(p_values)) <= 0.6

    def test_symmetry_mid_p(self):
        for seed in range(5):
            pred_a, pred_b, truth = noisy_pair(seed + 50, n=60)
            ab = bootstrap_compare(pred_a, pred_b, truth, "mae", n_boot=300, seed=7)
            ba = bootstrap_compare(pred_b, pred_a, truth, "mae", n_boot=300, seed=7)
            assert ab.p_value + ba.p_value == pytest.approx(1.0, abs=1.0 / 300)

    def test_deterministic_for_fixed_seed(self):
        pred_a, pred_b, truth = noisy_pair(9)
        r1 = bootstrap_compare(pred_a, pred_b, truth, "rmse", n_boot=200, seed=11)
        r2 = bootstrap_compare(pred_a, pred_b, truth, "rmse", n_boot=200, seed=11)
        assert r1.p_value == r2.p_value

    def test_roc_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(12)
        n = 80
        truth = (rng.random(n) < 0.4).astype(float)
        score_a = truth + rng.normal(scale=1.2, size=n)
        score_b = truth + rng.normal(scale=1.2, size=n)
        base = bootstrap_compare(score_a, score_b, truth, "roc_auc",
                                 n_boot=300, seed=13).p_value
        warped = bootstrap_compare(np.exp(score_a), np.exp(score_b), truth,
                                   "roc_auc", n_boot=300, seed=13).p_value
        assert base == warped

    def test_auc_resamples_redrawn_until_both_classes(self):
        rng = np.random.default_rng(14)
        n = 40
        truth = np.zeros(n)
        truth[:3] = 1.0  # skewed: some resamples will miss the positives
        score_a = truth + rng.normal(scale=0.5, size=n)
        score_b = truth + rng.normal(scale=0.5, size=n)
        result = bootstrap_compare(score_a, score_b, truth, "roc_auc",
                                   n_boot=300, seed=15)
        assert 0.0 <= result.p_value <= 1.0

    def test_keep_samples_diagnostics(self):
        pred_a, pred_b, truth = noisy_pair(16, n=40)
        result = bootstrap_compare(pred_a, pred_b, truth, "rmse", n_boot=25,
                                   seed=17, keep_samples=True)
        assert len(result.samples) == 25
        assert all(len(pair) == 2 for pair in result.samples)

    def test_errors(self):
        with pytest.raises(DataError, match="equal-length"):
            bootstrap_compare([1.0] * 10, [1.0] * 11, [1.0] * 10, "rmse")
        with pytest.raises(DataError, match="at least 10"):
            bootstrap_compare([1.0] * 5, [1.0] * 5, [1.0] * 5, "rmse")
        with pytest.raises(DataError, match="unknown metric"):
            bootstrap_compare([1.0] * 10, [1.0] * 10, [1.0] * 10, "accuracy")
        with pytest.raises(DataError, match="both classes"):
            bootstrap_compare([1.0] * 10, [1.0] * 10, [1.0] * 10, "roc_auc")
