"""Permutation importance and ensemble-level importance aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import DataError
from .metrics import compute_metric, higher_is_better

MIN_PERMUTATION_ROWS = 10


@dataclass(frozen=True)
class ImportanceVector:
    """Non-negative per-feature scores; normalized vectors sum to 1."""

    feature_names: tuple[str, ...]
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.feature_names),):
            raise DataError("importance length does not match feature names")
        if (values < 0).any():
            raise DataError("importance values must be non-negative")
        if self.normalized and abs(float(values.sum()) - 1.0) > 1e-9:
            raise DataError("normalized importance must sum to 1")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def permutation_importance(
    predict: Callable[[np.ndarray], np.ndarray],
    X_val: np.ndarray,
    y_val: np.ndarray,
    metric: str,
    repeats: int = 5,
    seed: int = 0,
    feature_names: Sequence[str] | None = None,
) -> ImportanceVector:
    """Mean metric degradation from shuffling each column of X_val.

    The shuffle stream is seeded per (seed, feature, repeat), so results do
    not depend on evaluation order. Negative mean degradations clamp to 0.
    """
    if repeats < 1:
        raise DataError("permutation importance needs repeats >= 1")
    X_val = np.asarray(X_val, dtype=float)
    if X_val.ndim != 2 or X_val.shape[0] < MIN_PERMUTATION_ROWS:
        raise DataError(
            f"permutation importance needs >= {MIN_PERMUTATION_ROWS} validation rows"
        )
    y_val = np.asarray(y_val, dtype=float)
    names = (tuple(feature_names) if feature_names is not None
             else tuple(f"x{j}" for j in range(X_val.shape[1])))
    if len(names) != X_val.shape[1]:
        raise DataError("feature_names length does not match matrix width")

    sign = -1.0 if higher_is_better(metric) else 1.0
    base = compute_metric(predict(X_val), y_val, metric).value
    values = np.empty(X_val.shape[1])
    for j in range(X_val.shape[1]):
        total = 0.0
        for r in range(repeats):
            rng = np.random.default_rng([seed, j, r])
            shuffled = X_val.copy()
            shuffled[:, j] = shuffled[rng.permutation(X_val.shape[0]), j]
            degraded = compute_metric(predict(shuffled), y_val, metric).value
            total += sign * (degraded - base)
        values[j] = max(total / repeats, 0.0)
    return ImportanceVector(feature_names=names, values=values, normalized=False)


def normalize_importance(v: ImportanceVector) -> ImportanceVector:
    """Scale to sum 1; an all-zero vector maps to the uniform vector."""
    total = float(v.values.sum())
    if total == 0.0:
        values = np.full(len(v.feature_names), 1.0 / len(v.feature_names))
    else:
        values = v.values / total
    return ImportanceVector(feature_names=v.feature_names, values=values,
                            normalized=True)


def aggregate_importance(
    vectors: Sequence[ImportanceVector], weights: Sequence[float]
) -> ImportanceVector:
    """Weighted mean of normalized vectors over a shared feature list."""
    if not vectors:
        raise DataError("no importance vectors to aggregate")
    if len(vectors) != len(weights):
        raise DataError("one weight required per importance vector")
    names = vectors[0].feature_names
    for v in vectors:
        if v.feature_names != names:
            raise DataError("importance vectors cover different feature lists")
        if not v.normalized:
            raise DataError("aggregate_importance expects normalized vectors")
    weights = np.asarray(weights, dtype=float)
    if (weights < 0).any():
        raise DataError("weights must be non-negative")
    total = float(weights.sum())
    if total == 0.0:
        raise DataError("weights must not all be zero")
    acc = np.zeros(len(names))
    for v, w in zip(vectors, weights):
        acc += (w / total) * v.values
    return normalize_importance(ImportanceVector(names, acc))
