"""Evaluation and weighting metrics.

Regression errors (MAE/MSE/RMSE), exact Mann-Whitney ROC-AUC, average
precision for the PRC area, the skew-based metric selection rule, multi-target
aggregation, and the correlation-weighted effective sample size for sparse
multi-target matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .tabular import CLASSIFICATION, REGRESSION

MAE = "mae"
MSE = "mse"
RMSE = "rmse"
ROC_AUC = "roc_auc"
PRC_AUC = "prc_auc"

ERROR_METRICS = (MAE, MSE, RMSE)
AUC_METRICS = (ROC_AUC, PRC_AUC)
ALL_METRICS = ERROR_METRICS + AUC_METRICS

# minority-class fraction below which PRC-AUC replaces ROC-AUC
MINORITY_THRESHOLD = 0.10


@dataclass(frozen=True)
class MetricValue:
    name: str
    value: float
    n: int


def _check_vectors(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.ndim != 1 or truth.ndim != 1:
        raise DataError("metric inputs must be 1-D vectors")
    if pred.shape != truth.shape:
        raise DataError(f"length mismatch: {pred.shape[0]} vs {truth.shape[0]}")
    if pred.size == 0:
        raise DataError("metric inputs must be non-empty")
    if not (np.isfinite(pred).all() and np.isfinite(truth).all()):
        raise DataError("metric inputs must be finite")
    return pred, truth


def _check_labels(labels: np.ndarray) -> np.ndarray:
    if not np.isin(labels, (0.0, 1.0)).all():
        raise DataError("labels must be 0/1")
    return labels


def regression_error(pred, truth, kind: str = RMSE) -> MetricValue:
    """MAE, MSE, or RMSE between predictions and ground truth."""
    pred, truth = _check_vectors(pred, truth)
    diff = pred - truth
    if kind == MAE:
        value = float(np.mean(np.abs(diff)))
    elif kind == MSE:
        value = float(np.mean(diff * diff))
    elif kind == RMSE:
        value = float(math.sqrt(np.mean(diff * diff)))
    else:
        raise DataError(f"unknown regression error kind {kind!r}")
    return MetricValue(name=kind, value=value, n=pred.size)


def _midranks(values: np.ndarray) -> np.ndarray:
    """Fractional ranks (1-based); ties share the mean of their rank range."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * ((i + 1) + (j + 1))
        i = j + 1
    return ranks


def roc_auc(scores, labels) -> MetricValue:
    """Exact ROC area via the Mann-Whitney statistic.

    Equals P(score_pos > score_neg) + 0.5 * P(tie) over all
    positive/negative pairs.
    """
    scores, labels = _check_vectors(scores, labels)
    _check_labels(labels)
    pos = labels == 1.0
    n_pos = int(pos.sum())
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("roc_auc needs both classes present")
    ranks = _midranks(scores)
    rank_sum = float(ranks[pos].sum())
    value = (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return MetricValue(name=ROC_AUC, value=value, n=scores.size)


def prc_auc(scores, labels) -> MetricValue:
    """Precision-recall area as average precision (step interpolation).

    Ranks descend by score with ties broken by stable input order; each
    positive contributes its precision-at-rank times the 1/n_pos recall step.
    """
    scores, labels = _check_vectors(scores, labels)
    _check_labels(labels)
    n_pos = int((labels == 1.0).sum())
    if n_pos == 0:
        raise DataError("prc_auc needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    seen_pos = 0
    acc = 0.0
    for rank, idx in enumerate(order, start=1):
        if labels[idx] == 1.0:
            seen_pos += 1
            acc += seen_pos / rank
    return MetricValue(name=PRC_AUC, value=acc / n_pos, n=scores.size)


def compute_metric(pred, truth, kind: str) -> MetricValue:
    """Dispatch on metric name; AUC kinds treat pred as scores."""
    if kind in ERROR_METRICS:
        return regression_error(pred, truth, kind)
    if kind == ROC_AUC:
        return roc_auc(pred, truth)
    if kind == PRC_AUC:
        return prc_auc(pred, truth)
    raise DataError(f"unknown metric {kind!r}")


def higher_is_better(kind: str) -> bool:
    if kind in AUC_METRICS:
        return True
    if kind in ERROR_METRICS:
        return False
    raise DataError(f"unknown metric {kind!r}")


def select_weight_metric(labels, threshold: float = MINORITY_THRESHOLD) -> str:
    """PRC-AUC when the minority class holds strictly less than the
    threshold fraction of points, ROC-AUC otherwise."""
    labels = np.asarray(labels, dtype=float)
    if labels.size == 0:
        raise DataError("empty label vector")
    _check_labels(labels)
    frac_pos = float(labels.mean())
    if frac_pos in (0.0, 1.0):
        raise DataError("select_weight_metric needs both classes present")
    minority = min(frac_pos, 1.0 - frac_pos)
    return PRC_AUC if minority < threshold else ROC_AUC


def aggregate_multi_target(values, task: str) -> float:
    """Geometric mean for regression metrics, arithmetic mean for AUCs."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise DataError("no metric values to aggregate")
    if task == REGRESSION:
        if (values <= 0).any():
            raise DataError("geometric mean requires strictly positive values")
        return float(np.exp(np.mean(np.log(values))))
    if task == CLASSIFICATION:
        return float(np.mean(values))
    raise DataError(f"unknown task {task!r}")


def effective_sample_size(targets) -> np.ndarray:
    """Correlation-weighted data-point count per target column.

    For target i: eff_i = sum_j |r_ij| * count_j, where r_ij is the Pearson
    correlation over rows where both columns are present (r_ii = 1) and
    count_j is column j's present count. Pairs sharing fewer than 3 rows, and
    pairs involving a column constant over the shared rows, contribute 0.
    """
    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 2:
        raise DataError("targets must be an n x T matrix")
    n, t = targets.shape
    present = ~np.isnan(targets)
    counts = present.sum(axis=0)
    if (counts < 2).any():
        bad = int(np.flatnonzero(counts < 2)[0])
        raise DataError(f"target column {bad} has fewer than 2 present values")

    eff = np.zeros(t)
    for i in range(t):
        eff[i] = counts[i]  # self term, r_ii = 1
        for j in range(t):
            if j == i:
                continue
            both = present[:, i] & present[:, j]
            if both.sum() < 3:
                continue
            x = targets[both, i]
            y = targets[both, j]
            sx = x.std()
            sy = y.std()
            if sx == 0 or sy == 0:
                continue
            r = float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))
            eff[i] += abs(r) * counts[j]
    return eff
