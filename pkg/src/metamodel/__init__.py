"""Heterogeneous strong-learner ensemble for tabular property prediction.

Combines precomputed learned features with general-purpose descriptors,
weights diverse sub-models by validation performance, prunes the ensemble
and the feature set, and aggregates predictions, probabilities, and feature
importances as weighted means.
"""

from .ensemble import (
    MetaModel,
    MetaModelConfig,
    SubModelSlot,
    default_roster,
    fit_metamodel,
    metamodel_importance,
    metamodel_predict,
    metamodel_slot_predictions,
)
from .exceptions import ConfigError, DataError, MetaModelError, NumericError
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
    classifier_importance,
    classify,
    fit_classifier,
    fit_regressor,
    predict_proba,
    predict_regressor,
    regressor_importance,
)
from .metrics import (
    MetricValue,
    aggregate_multi_target,
    effective_sample_size,
    prc_auc,
    regression_error,
    roc_auc,
    select_weight_metric,
)
from .persist import load_metamodel, save_metamodel
from .significance import BootstrapResult, bootstrap_compare
from .tabular import (
    ColumnFilterReport,
    DataSplit,
    FeatureTable,
    ScalerParams,
    TargetColumn,
    apply_scaler,
    filter_columns,
    fit_scaler,
    load_dataset,
    load_split_file,
    make_random_split,
)

__version__ = "0.1.0"
