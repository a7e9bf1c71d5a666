"""Paired bootstrap comparison of two prediction sets on shared ground truth.

Each resample draws the same index set for both models; the reported p-value
is the mid-p fraction of resamples where model B strictly beats model A plus
half the ties. "Better" means lower error or higher AUC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .metrics import AUC_METRICS, ALL_METRICS, compute_metric, higher_is_better

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class BootstrapResult:
    p_value: float
    n_boot: int
    metric: str
    seed: int
    metric_a: float
    metric_b: float
    samples: tuple[tuple[float, float], ...] | None = None


def bootstrap_compare(
    pred_a,
    pred_b,
    truth,
    metric: str,
    n_boot: int = 10000,
    seed: int = 0,
    keep_samples: bool = False,
) -> BootstrapResult:
    """Probability that model B outperforms model A under paired resampling.

    AUC metrics redraw any resample missing a class (up to 100 attempts per
    slot). Deterministic for a fixed seed: each resample re-seeds from
    (seed, resample index), independent of evaluation order.
    """
    pred_a = np.asarray(pred_a, dtype=float)
    pred_b = np.asarray(pred_b, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if metric not in ALL_METRICS:
        raise DataError(f"unknown metric {metric!r}")
    if not (pred_a.shape == pred_b.shape == truth.shape) or truth.ndim != 1:
        raise DataError("pred_a, pred_b, and truth must be equal-length vectors")
    n = truth.size
    if n < 10:
        raise DataError("bootstrap comparison needs at least 10 points")
    if n_boot < 1:
        raise DataError("n_boot must be >= 1")
    needs_both_classes = metric in AUC_METRICS
    if needs_both_classes and len(np.unique(truth)) < 2:
        raise DataError("AUC comparison needs both classes in truth")

    full_a = compute_metric(pred_a, truth, metric).value
    full_b = compute_metric(pred_b, truth, metric).value

    b_wins = 0.0
    samples: list[tuple[float, float]] = []
    better_if_higher = higher_is_better(metric)
    for i in range(n_boot):
        rng = np.random.default_rng([seed, i])
        idx = rng.integers(0, n, size=n)
        if needs_both_classes:
            redraws = 0
            while len(np.unique(truth[idx])) < 2:
                redraws += 1
                if redraws > _MAX_REDRAWS:
                    raise DataError(
                        "could not draw a two-class resample after "
                        f"{_MAX_REDRAWS} attempts (extreme class skew)"
                    )
                idx = rng.integers(0, n, size=n)
        m_a = compute_metric(pred_a[idx], truth[idx], metric).value
        m_b = compute_metric(pred_b[idx], truth[idx], metric).value
        if m_a == m_b:
            b_wins += 0.5
        elif (m_b > m_a) == better_if_higher:
            b_wins += 1.0
        if keep_samples:
            samples.append((m_a, m_b))

    return BootstrapResult(
        p_value=b_wins / n_boot,
        n_boot=n_boot,
        metric=metric,
        seed=seed,
        metric_a=full_a,
        metric_b=full_b,
        samples=tuple(samples) if keep_samples else None,
    )
