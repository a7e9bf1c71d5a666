"""The ensemble orchestrator: per-slot randomized splits, sub-model training,
prune-to-best, importance-based feature pruning, retraining, and
validation-weighted aggregation of predictions and importances.

Pipeline order inside fit_metamodel:
  1. drop rows with a missing target
  2. drop columns constant over the pooled training region (non-test rows)
  3. fit the scaler on the pooled region, apply it everywhere
  4. give every roster member its own seeded train/val split of that region
  5. fit all sub-models (concurrently; slot order fixes all reductions)
  6. score each on its own validation set (MSE, or ROC/PRC-AUC by skew rule)
  7. retain the keep_models best
  8. aggregate importances (built-in or permutation), prune features with
     importance strictly greater than feature_keep_ratio times the maximum
  9. retrain the retained slots on the pruned features, same splits
 10. recompute validation scores; weights are 1/MSE or AUC, normalized to 1
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, DataError, NumericError
from .importance import (
    ImportanceVector,
    aggregate_importance,
    normalize_importance,
    permutation_importance,
)
from .learners import (
    CLASSIFICATION_CATALOGUE,
    REGRESSION_CATALOGUE,
    ClassifierSpec,
    RegressorSpec,
    TrainedClassifier,
    TrainedRegressor,
    fit_classifier,
    fit_regressor,
    predict_proba,
    predict_regressor,
)
from .metrics import MSE, MetricValue, compute_metric, select_weight_metric
from .tabular import (
    CLASSIFICATION,
    REGRESSION,
    ColumnFilterReport,
    DataSplit,
    FeatureTable,
    ScalerParams,
    TargetColumn,
    apply_scaler,
    filter_columns,
    fit_scaler,
)

WORKERS_ENV = "METAMODEL_WORKERS"

MIN_TARGET_ROWS = 30
_MIN_POOLED_ROWS = 10
_MIN_PERMUTATION_VAL = 10
_WEIGHT_FLOOR = 1e-12


def _derived_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def default_roster(task: str, seed: int = 0, copies: int = 2):
    """Seed-varied copies of the full catalogue (2 x 10 kinds by default)."""
    catalogue = REGRESSION_CATALOGUE if task == REGRESSION else CLASSIFICATION_CATALOGUE
    spec_cls = RegressorSpec if task == REGRESSION else ClassifierSpec
    roster = []
    index = 0
    for _ in range(copies):
        for kind in catalogue:
            roster.append(spec_cls(kind=kind, hyperparameters={},
                                   seed=_derived_seed(seed, 1, index)))
            index += 1
    return tuple(roster)


@dataclass(frozen=True)
class MetaModelConfig:
    task: str
    roster: tuple = ()
    keep_models: int = 10
    feature_keep_ratio: float = 0.02
    split_fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    minority_threshold: float = 0.10
    max_kind_fraction: float | None = None
    permutation_repeats: int = 5

    def __post_init__(self):
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ConfigError(f"unknown task {self.task!r}")
        roster = self.roster or default_roster(self.task, self.seed)
        spec_cls = RegressorSpec if self.task == REGRESSION else ClassifierSpec
        for spec in roster:
            if not isinstance(spec, spec_cls):
                raise ConfigError(
                    f"roster spec {spec!r} does not match task {self.task!r}"
                )
        object.__setattr__(self, "roster", tuple(roster))
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.keep_models < 1:
            raise ConfigError("keep_models must be >= 1")
        if not 0.0 < self.feature_keep_ratio < 1.0:
            raise ConfigError("feature_keep_ratio must be in (0, 1)")
        if len(self.split_fractions) != 3 or min(self.split_fractions) <= 0:
            raise ConfigError("split_fractions must be three positive values")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ConfigError("split_fractions must sum to 1")
        if not 0.0 < self.minority_threshold < 1.0:
            raise ConfigError("minority_threshold must be in (0, 1)")
        if self.max_kind_fraction is not None and not 0.0 < self.max_kind_fraction <= 1.0:
            raise ConfigError("max_kind_fraction must be in (0, 1]")
        if self.permutation_repeats < 1:
            raise ConfigError("permutation_repeats must be >= 1")


@dataclass(frozen=True)
class SubModelSlot:
    spec: RegressorSpec | ClassifierSpec
    split_seed: int
    split: DataSplit
    score: MetricValue
    weight: float
    model: TrainedRegressor | TrainedClassifier


@dataclass(frozen=True)
class MetaModel:
    config: MetaModelConfig
    task: str
    target_name: str
    slots: tuple[SubModelSlot, ...]
    feature_names: tuple[str, ...]
    scaler: ScalerParams
    filter_report: ColumnFilterReport
    importance: ImportanceVector


def resolve_workers(n_workers: int | None = None) -> int:
    if n_workers is not None:
        return max(1, int(n_workers))
    env = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None


def _catalogue_index(task: str, kind: str) -> int:
    catalogue = REGRESSION_CATALOGUE if task == REGRESSION else CLASSIFICATION_CATALOGUE
    return catalogue.index(kind)


def _slot_split(pooled: np.ndarray, fractions, split_seed: int) -> DataSplit:
    """Train/val split of the pooled region at the train:val ratio of the
    configured fractions."""
    f_train, f_val, _ = fractions
    val_share = f_val / (f_train + f_val)
    n = pooled.size
    n_val = min(max(1, int(np.floor(val_share * n))), n - 1)
    perm = np.random.default_rng(split_seed).permutation(pooled)
    return DataSplit(
        train_idx=tuple(sorted(int(i) for i in perm[n_val:])),
        val_idx=tuple(sorted(int(i) for i in perm[:n_val])),
        test_idx=(),
    )


def _score_slot(task, trained, X_val, y_val, minority_threshold) -> MetricValue:
    if task == REGRESSION:
        pred = predict_regressor(trained, X_val)
        return compute_metric(pred, y_val, MSE)
    metric = select_weight_metric(y_val, minority_threshold)
    prob = predict_proba(trained, X_val)
    return compute_metric(prob, y_val, metric)


def _raw_weight(task: str, score: MetricValue) -> float:
    if task == REGRESSION:
        return 1.0 / max(score.value, _WEIGHT_FLOOR)
    return max(score.value, _WEIGHT_FLOOR)


def _slot_importance(task, trained, X_val, y_val, score_name, repeats,
                     perm_seed) -> ImportanceVector:
    """Built-in importance when the learner has one, else permutation
    importance on the slot's validation data."""
    names = trained.feature_names
    if trained.builtin_importance is not None:
        vec = ImportanceVector(names, trained.builtin_importance)
    elif X_val.shape[0] < _MIN_PERMUTATION_VAL:
        # validation set too small to permute: neutral (uniform) contribution
        vec = ImportanceVector(names, np.zeros(len(names)))
    else:
        if task == REGRESSION:
            predict, metric = (lambda X: predict_regressor(trained, X)), MSE
        else:
            predict, metric = (lambda X: predict_proba(trained, X)), score_name
        vec = permutation_importance(predict, X_val, y_val, metric,
                                     repeats=repeats, seed=perm_seed,
                                     feature_names=names)
    return normalize_importance(vec)


def _fit_one(task, spec, X, y, feature_names):
    if task == REGRESSION:
        return fit_regressor(spec, X, y, feature_names)
    return fit_classifier(spec, X, y, feature_names)


def _rank_and_retain(config, candidates):
    """Sort by validation score (ties: catalogue order, spec seed, slot
    index) and keep the best, optionally capping any one kind's share."""
    task = config.task

    def sort_key(entry):
        i, spec, _, score = entry
        primary = score.value if task == REGRESSION else -score.value
        return (primary, _catalogue_index(task, spec.kind), spec.seed, i)

    ranked = sorted(candidates, key=sort_key)
    n_keep = min(config.keep_models, len(config.roster))
    if config.max_kind_fraction is None:
        return ranked[:n_keep]
    cap = max(1, int(np.floor(config.max_kind_fraction * n_keep)))
    kept: list = []
    skipped: list = []
    counts: dict[str, int] = {}
    for entry in ranked:
        kind = entry[1].kind
        if len(kept) < n_keep and counts.get(kind, 0) < cap:
            kept.append(entry)
            counts[kind] = counts.get(kind, 0) + 1
        else:
            skipped.append(entry)
    for entry in skipped:  # relax the cap rather than under-fill
        if len(kept) >= n_keep:
            break
        kept.append(entry)
    kept.sort(key=sort_key)
    return kept


def fit_metamodel(
    config: MetaModelConfig,
    table: FeatureTable,
    target: TargetColumn,
    test_idx: Sequence[int] | None = None,
    n_workers: int | None = None,
) -> MetaModel:
    """Run the full train/prune/retrain/weight pipeline for one target."""
    if target.task != config.task:
        raise ConfigError(
            f"target task {target.task!r} does not match config task {config.task!r}"
        )
    if len(target.values) != table.n_rows:
        raise DataError("target length does not match table rows")
    if table.n_cols == 0:
        raise DataError("feature table has no columns")
    workers = resolve_workers(n_workers)

    present = np.flatnonzero(target.present_mask)
    if present.size < MIN_TARGET_ROWS:
        raise DataError(
            f"need >= {MIN_TARGET_ROWS} rows with a present target, got {present.size}"
        )
    test_set: set[int] = set()
    if test_idx is not None:
        test_set = {int(i) for i in test_idx}
        bad = [i for i in test_set if not 0 <= i < table.n_rows]
        if bad:
            raise DataError(f"test index {bad[0]} out of range")
    pooled = np.array([i for i in present if i not in test_set], dtype=int)
    if pooled.size < _MIN_POOLED_ROWS:
        raise DataError(
            f"only {pooled.size} non-test rows with a present target "
            f"(need >= {_MIN_POOLED_ROWS})"
        )
    y_all = target.values
    if config.task == CLASSIFICATION and len(np.unique(y_all[pooled])) < 2:
        raise DataError("classification target has a single class in the training region")

    work_table, filter_report = filter_columns(table, pooled)
    scaler_full = fit_scaler(work_table, pooled)
    scaled = apply_scaler(work_table, scaler_full)
    X_all = scaled.values
    feature_names = scaled.column_names

    slots_meta = []
    for i, spec in enumerate(config.roster):
        split_seed = _derived_seed(config.seed, 2, i)
        slots_meta.append((i, spec, split_seed,
                           _slot_split(pooled, config.split_fractions, split_seed)))

    def fit_and_score(entry, names, X):
        i, spec, _, split = entry
        train = list(split.train_idx)
        val = list(split.val_idx)
        trained = _fit_one(config.task, spec, X[train], y_all[train], names)
        score = _score_slot(config.task, trained, X[val], y_all[val],
                            config.minority_threshold)
        return trained, score

    def fit_all(entries, names, X, *, allow_drop):
        results = [None] * len(entries)
        failures = []

        def run(k):
            try:
                results[k] = fit_and_score(entries[k], names, X)
            except (DataError, NumericError) as exc:
                failures.append((k, exc))

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, range(len(entries))))
        else:
            for k in range(len(entries)):
                run(k)
        if failures:
            failures.sort(key=lambda f: f[0])
            if not allow_drop or sum(r is not None for r in results) < min(
                config.keep_models, len(config.roster)
            ):
                raise failures[0][1]
            for k, exc in failures:
                entry = entries[k]
                warnings.warn(
                    f"sub-model {entry[1].kind!r} (slot {entry[0]}) dropped: {exc}"
                )
        return results

    first_pass = fit_all(slots_meta, feature_names, X_all, allow_drop=True)
    candidates = [
        (i, spec, result[0], result[1])
        for (i, spec, _, _), result in zip(slots_meta, first_pass)
        if result is not None
    ]
    retained = _rank_and_retain(config, candidates)
    retained_meta = [slots_meta[entry[0]] for entry in retained]

    # pre-retrain importances drive feature pruning
    prov_weights = [_raw_weight(config.task, entry[3]) for entry in retained]
    pre_vectors = []
    for entry in retained:
        i, spec, trained, score = entry
        split = slots_meta[i][3]
        val = list(split.val_idx)
        pre_vectors.append(_slot_importance(
            config.task, trained, X_all[val], y_all[val], score.name,
            config.permutation_repeats, _derived_seed(config.seed, 3, i),
        ))
    pre_importance = aggregate_importance(pre_vectors, prov_weights)
    kept_names = select_features_by_importance(pre_importance,
                                               config.feature_keep_ratio)
    kept_idx = [feature_names.index(n) for n in kept_names]
    X_kept = X_all[:, kept_idx]

    second_pass = fit_all(retained_meta, kept_names, X_kept, allow_drop=False)

    final_slots = []
    final_vectors = []
    raw_weights = []
    for entry, result in zip(retained_meta, second_pass):
        i, spec, split_seed, split = entry
        trained, score = result
        raw_weights.append(_raw_weight(config.task, score))
        val = list(split.val_idx)
        final_vectors.append(_slot_importance(
            config.task, trained, X_kept[val], y_all[val], score.name,
            config.permutation_repeats, _derived_seed(config.seed, 4, i),
        ))
        final_slots.append((spec, split_seed, split, score, trained))

    total = float(sum(raw_weights))
    weights = [w / total for w in raw_weights]
    final_importance = aggregate_importance(final_vectors, weights)

    slots = tuple(
        SubModelSlot(spec=spec, split_seed=split_seed, split=split,
                     score=score, weight=weight, model=trained)
        for (spec, split_seed, split, score, trained), weight
        in zip(final_slots, weights)
    )
    return MetaModel(
        config=config,
        task=config.task,
        target_name=target.name,
        slots=slots,
        feature_names=kept_names,
        scaler=scaler_full.select(kept_names),
        filter_report=filter_report,
        importance=final_importance,
    )


def select_features_by_importance(
    importance: ImportanceVector, keep_ratio: float
) -> tuple[str, ...]:
    """Features whose importance is strictly greater than keep_ratio times
    the maximum importance, in original column order."""
    values = importance.values
    threshold = keep_ratio * float(values.max())
    kept = tuple(
        name for name, v in zip(importance.feature_names, values) if v > threshold
    )
    if not kept:
        raise NumericError("feature pruning removed every feature")
    return kept


def _scaled_matrix(model: MetaModel, table: FeatureTable) -> np.ndarray:
    missing = [n for n in model.feature_names if n not in table.column_names]
    if missing:
        raise DataError(f"table is missing retained feature column(s): {missing[:5]}")
    sub = table.select_columns(model.feature_names)
    return apply_scaler(sub, model.scaler).values


def metamodel_slot_predictions(model: MetaModel, table: FeatureTable) -> np.ndarray:
    """Per-slot predictions (columns follow slot order)."""
    X = _scaled_matrix(model, table)
    cols = []
    for slot in model.slots:
        if model.task == REGRESSION:
            cols.append(predict_regressor(slot.model, X))
        else:
            cols.append(predict_proba(slot.model, X))
    return np.column_stack(cols)


def metamodel_predict(model: MetaModel, table: FeatureTable) -> np.ndarray:
    """Weighted-mean prediction (probability of class 1 for classification),
    accumulated in fixed slot order."""
    per_slot = metamodel_slot_predictions(model, table)
    out = np.zeros(per_slot.shape[0])
    for k, slot in enumerate(model.slots):
        out += slot.weight * per_slot[:, k]
    return out


def metamodel_importance(model: MetaModel) -> ImportanceVector:
    """Weighted mean of the retained slots' normalized importances."""
    return model.importance
