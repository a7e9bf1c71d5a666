"""Sub-model catalogue: declarative specs plus fit/predict/importance dispatch.

Regression kinds: lasso, ridge, knn, kernel-ridge, random-forest,
gradient-boosted-trees, gaussian-process, rbf-interpolation, mlp, resnet.
Classification kinds: knn, lda, qda, logistic, naive-bayes, random-forest,
gradient-boosted-trees, gaussian-process, mlp, resnet.

All learners expect feature matrices already standardized by the caller;
kernel and neural learners center/scale targets internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Sequence

import numpy as np

from ..exceptions import DataError
from ..tabular import CLASSIFICATION, REGRESSION
from .kernel import (
    GaussianProcessClassifier,
    GaussianProcessRegressor,
    KernelRidge,
    RbfInterpolator,
)
from .linear import (
    GaussianNaiveBayes,
    LassoRegressor,
    LinearDiscriminant,
    LogisticRegression,
    QuadraticDiscriminant,
    RidgeRegressor,
)
from .neighbors import KnnModel
from .neural import NeuralNet
from .trees import GradientBoosting, RandomForest

_NEURAL_DEFAULTS = {
    "batch_size": 64,
    "max_epochs": 200,
    "patience": 20,
    "learning_rate": 1e-3,
    "holdout": 0.1,
}

# kind -> (hyperparameter defaults, factory(hp, seed), builtin importance?, min rows)
_REGRESSORS: dict[str, dict] = {
    "lasso": {
        "defaults": {"alpha": 0.01, "tol": 1e-6, "max_sweeps": 10000},
        "factory": lambda hp, seed: LassoRegressor(seed=seed, **hp),
        "min_rows": 4,
    },
    "ridge": {
        "defaults": {"alpha": 1.0},
        "factory": lambda hp, seed: RidgeRegressor(seed=seed, **hp),
        "min_rows": 4,
    },
    "knn": {
        "defaults": {"k": 5},
        "factory": lambda hp, seed: KnnModel(mode=REGRESSION, seed=seed, **hp),
        "min_rows": 2,
    },
    "kernel-ridge": {
        "defaults": {"alpha": 1e-3, "bandwidth": None},
        "factory": lambda hp, seed: KernelRidge(seed=seed, **hp),
        "min_rows": 4,
    },
    "random-forest": {
        "defaults": {"n_trees": 200, "max_depth": None, "min_leaf": 1,
                     "max_features": None, "bootstrap": True},
        "factory": lambda hp, seed: RandomForest(mode=REGRESSION, seed=seed, **hp),
        "min_rows": 4,
    },
    "gradient-boosted-trees": {
        "defaults": {"n_stages": 300, "max_depth": 6, "learning_rate": 0.1,
                     "min_leaf": 1},
        "factory": lambda hp, seed: GradientBoosting(mode=REGRESSION, seed=seed, **hp),
        "min_rows": 4,
    },
    "gaussian-process": {
        "defaults": {"noise": 1e-2, "bandwidth": None, "max_rows": 2000},
        "factory": lambda hp, seed: GaussianProcessRegressor(seed=seed, **hp),
        "min_rows": 4,
    },
    "rbf-interpolation": {
        "defaults": {"smoothing": 1e-3, "bandwidth": None},
        "factory": lambda hp, seed: RbfInterpolator(seed=seed, **hp),
        "min_rows": 4,
    },
    "mlp": {
        "defaults": {"hidden": (128, 128), **_NEURAL_DEFAULTS},
        "factory": lambda hp, seed: NeuralNet(arch="mlp", task=REGRESSION,
                                              seed=seed, **hp),
        "min_rows": 10,
    },
    "resnet": {
        "defaults": {"width": 128, "n_blocks": 3, **_NEURAL_DEFAULTS},
        "factory": lambda hp, seed: NeuralNet(arch="resnet", task=REGRESSION,
                                              seed=seed, **hp),
        "min_rows": 10,
    },
}

_CLASSIFIERS: dict[str, dict] = {
    "knn": {
        "defaults": {"k": 5},
        "factory": lambda hp, seed: KnnModel(mode=CLASSIFICATION, seed=seed, **hp),
        "min_rows": 2,
    },
    "lda": {
        "defaults": {"ridge": 1e-4},
        "factory": lambda hp, seed: LinearDiscriminant(seed=seed, **hp),
        "min_rows": 4,
    },
    "qda": {
        "defaults": {"ridge": 1e-4},
        "factory": lambda hp, seed: QuadraticDiscriminant(seed=seed, **hp),
        "min_rows": 4,
    },
    "logistic": {
        "defaults": {"alpha": 1e-2, "max_iter": 100, "tol": 1e-8},
        "factory": lambda hp, seed: LogisticRegression(seed=seed, **hp),
        "min_rows": 4,
    },
    "naive-bayes": {
        "defaults": {"var_smoothing": 1e-9},
        "factory": lambda hp, seed: GaussianNaiveBayes(seed=seed, **hp),
        "min_rows": 4,
    },
    "random-forest": {
        "defaults": {"n_trees": 200, "max_depth": None, "min_leaf": 1,
                     "max_features": None, "bootstrap": True},
        "factory": lambda hp, seed: RandomForest(mode=CLASSIFICATION, seed=seed, **hp),
        "min_rows": 4,
    },
    "gradient-boosted-trees": {
        "defaults": {"n_stages": 300, "max_depth": 6, "learning_rate": 0.1,
                     "min_leaf": 1},
        "factory": lambda hp, seed: GradientBoosting(mode=CLASSIFICATION,
                                                     seed=seed, **hp),
        "min_rows": 4,
    },
    "gaussian-process": {
        "defaults": {"bandwidth": None, "max_rows": 2000, "max_newton": 100,
                     "tol": 1e-8},
        "factory": lambda hp, seed: GaussianProcessClassifier(seed=seed, **hp),
        "min_rows": 4,
    },
    "mlp": {
        "defaults": {"hidden": (128, 128), **_NEURAL_DEFAULTS},
        "factory": lambda hp, seed: NeuralNet(arch="mlp", task=CLASSIFICATION,
                                              seed=seed, **hp),
        "min_rows": 10,
    },
    "resnet": {
        "defaults": {"width": 128, "n_blocks": 3, **_NEURAL_DEFAULTS},
        "factory": lambda hp, seed: NeuralNet(arch="resnet", task=CLASSIFICATION,
                                              seed=seed, **hp),
        "min_rows": 10,
    },
}

REGRESSION_CATALOGUE = tuple(_REGRESSORS)
CLASSIFICATION_CATALOGUE = tuple(_CLASSIFIERS)

# kinds whose fitted models expose a built-in importance vector
_BUILTIN_IMPORTANCE = {"lasso", "ridge", "logistic", "lda",
                       "random-forest", "gradient-boosted-trees"}


def _validate_spec(kind: str, hyperparameters: dict, seed: int, registry, label: str):
    if kind not in registry:
        raise DataError(f"unknown {label} kind {kind!r}")
    if seed < 0:
        raise DataError("spec seed must be non-negative")
    allowed = registry[kind]["defaults"]
    unknown = set(hyperparameters) - set(allowed)
    if unknown:
        raise DataError(
            f"{label} {kind!r} does not accept hyperparameter(s) "
            f"{sorted(unknown)}; allowed: {sorted(allowed)}"
        )


@dataclass(frozen=True)
class RegressorSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        _validate_spec(self.kind, self.hyperparameters, self.seed,
                       _REGRESSORS, "regressor")
        object.__setattr__(self, "hyperparameters",
                           MappingProxyType(dict(self.hyperparameters)))


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        _validate_spec(self.kind, self.hyperparameters, self.seed,
                       _CLASSIFIERS, "classifier")
        object.__setattr__(self, "hyperparameters",
                           MappingProxyType(dict(self.hyperparameters)))


@dataclass(frozen=True)
class TrainedRegressor:
    spec: RegressorSpec
    feature_names: tuple[str, ...]
    model: Any
    builtin_importance: np.ndarray | None

    def predict(self, X):
        return predict_regressor(self, X)


@dataclass(frozen=True)
class TrainedClassifier:
    spec: ClassifierSpec
    feature_names: tuple[str, ...]
    model: Any
    class_counts: tuple[int, int]
    builtin_importance: np.ndarray | None

    def predict_proba(self, X):
        return predict_proba(self, X)


def _check_matrix(X, y=None) -> tuple[np.ndarray, np.ndarray | None]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("feature matrix must be 2-D")
    if not np.isfinite(X).all():
        raise DataError("feature matrix contains non-finite values")
    if y is None:
        return X, None
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise DataError("target length does not match feature rows")
    if not np.isfinite(y).all():
        raise DataError("target contains non-finite values")
    return X, y


def _names_for(X, feature_names):
    if feature_names is None:
        return tuple(f"x{j}" for j in range(X.shape[1]))
    if len(feature_names) != X.shape[1]:
        raise DataError("feature_names length does not match matrix width")
    return tuple(feature_names)


def _resolve_hp(registry, kind, hyperparameters):
    hp = dict(registry[kind]["defaults"])
    hp.update(hyperparameters)
    return hp


def _builtin_importance(kind: str, model) -> np.ndarray | None:
    if kind not in _BUILTIN_IMPORTANCE:
        return None
    imp = model.importance() if hasattr(model, "importance") else model.importance_
    return np.asarray(imp, dtype=float)


def fit_regressor(spec: RegressorSpec, X, y,
                  feature_names: Sequence[str] | None = None) -> TrainedRegressor:
    """Fit one regression sub-model; deterministic for a fixed spec seed."""
    X, y = _check_matrix(X, y)
    names = _names_for(X, feature_names)
    entry = _REGRESSORS[spec.kind]
    min_rows = max(entry["min_rows"], 2)
    if spec.kind == "knn":
        min_rows = max(min_rows, _resolve_hp(_REGRESSORS, "knn", spec.hyperparameters)["k"])
    if X.shape[0] < min_rows:
        raise DataError(f"{spec.kind} needs at least {min_rows} rows, got {X.shape[0]}")
    model = entry["factory"](_resolve_hp(_REGRESSORS, spec.kind, spec.hyperparameters),
                             spec.seed)
    model.fit(X, y)
    return TrainedRegressor(spec=spec, feature_names=names, model=model,
                            builtin_importance=_builtin_importance(spec.kind, model))


def predict_regressor(trained: TrainedRegressor, X) -> np.ndarray:
    X, _ = _check_matrix(X)
    if X.shape[1] != len(trained.feature_names):
        raise DataError(
            f"expected {len(trained.feature_names)} feature columns, got {X.shape[1]}"
        )
    return np.asarray(trained.model.predict(X), dtype=float)


def regressor_importance(trained: TrainedRegressor) -> np.ndarray | None:
    """Built-in importance (|coefficient| or impurity reduction) or None."""
    return trained.builtin_importance


def fit_classifier(spec: ClassifierSpec, X, y,
                   feature_names: Sequence[str] | None = None) -> TrainedClassifier:
    """Fit one binary-classification sub-model (labels must be 0/1)."""
    X, y = _check_matrix(X, y)
    names = _names_for(X, feature_names)
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("classification labels must be 0/1")
    n_pos = int((y == 1.0).sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("classification target has a single class")
    entry = _CLASSIFIERS[spec.kind]
    min_rows = max(entry["min_rows"], 2)
    if spec.kind == "knn":
        min_rows = max(min_rows, _resolve_hp(_CLASSIFIERS, "knn", spec.hyperparameters)["k"])
    if X.shape[0] < min_rows:
        raise DataError(f"{spec.kind} needs at least {min_rows} rows, got {X.shape[0]}")
    model = entry["factory"](_resolve_hp(_CLASSIFIERS, spec.kind, spec.hyperparameters),
                             spec.seed)
    model.fit(X, y)
    return TrainedClassifier(spec=spec, feature_names=names, model=model,
                             class_counts=(n_neg, n_pos),
                             builtin_importance=_builtin_importance(spec.kind, model))


def predict_proba(trained: TrainedClassifier, X) -> np.ndarray:
    X, _ = _check_matrix(X)
    if X.shape[1] != len(trained.feature_names):
        raise DataError(
            f"expected {len(trained.feature_names)} feature columns, got {X.shape[1]}"
        )
    prob = np.asarray(trained.model.predict_proba(X), dtype=float)
    return np.clip(prob, 0.0, 1.0)


def classify(trained: TrainedClassifier, X, threshold: float = 0.5) -> np.ndarray:
    """Hard labels; probability ties at the threshold resolve to class 1."""
    if not 0.0 < threshold < 1.0:
        raise DataError(f"threshold must be in (0, 1), got {threshold}")
    return (predict_proba(trained, X) >= threshold).astype(float)


def classifier_importance(trained: TrainedClassifier) -> np.ndarray | None:
    return trained.builtin_importance
