"""Versioned model-file container.

Layout: 4 magic bytes, uint32 format version, uint64 payload length, 32-byte
SHA-256 of the payload, then a JSON payload in which numpy arrays are encoded
as {"__nd__": {dtype, shape, base64 data}}. Round-tripping a model reproduces
its predictions bit for bit.
"""

from __future__ import annotations

import base64
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import DataError
from .ensemble import MetaModel, MetaModelConfig, SubModelSlot
from .importance import ImportanceVector
from .learners import (
    ClassifierSpec,
    RegressorSpec,
    TrainedClassifier,
    TrainedRegressor,
)
from .learners.kernel import (
    GaussianProcessClassifier,
    GaussianProcessRegressor,
    KernelRidge,
    RbfInterpolator,
)
from .learners.linear import (
    GaussianNaiveBayes,
    LassoRegressor,
    LinearDiscriminant,
    LogisticRegression,
    QuadraticDiscriminant,
    RidgeRegressor,
)
from .learners.neighbors import KnnModel
from .learners.neural import NeuralNet
from .learners.trees import GradientBoosting, RandomForest
from .metrics import MetricValue
from .tabular import (
    REGRESSION,
    ColumnFilterReport,
    DataSplit,
    ScalerParams,
)

MAGIC = b"MMDL"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQ32s")


class ModelFormatError(DataError):
    """Corrupt or truncated model file."""


class ModelVersionError(DataError):
    """Model file written by an incompatible format version."""


_MODEL_CLASSES = {
    "reg/lasso": LassoRegressor,
    "reg/ridge": RidgeRegressor,
    "reg/knn": KnnModel,
    "reg/kernel-ridge": KernelRidge,
    "reg/random-forest": RandomForest,
    "reg/gradient-boosted-trees": GradientBoosting,
    "reg/gaussian-process": GaussianProcessRegressor,
    "reg/rbf-interpolation": RbfInterpolator,
    "reg/mlp": NeuralNet,
    "reg/resnet": NeuralNet,
    "clf/knn": KnnModel,
    "clf/lda": LinearDiscriminant,
    "clf/qda": QuadraticDiscriminant,
    "clf/logistic": LogisticRegression,
    "clf/naive-bayes": GaussianNaiveBayes,
    "clf/random-forest": RandomForest,
    "clf/gradient-boosted-trees": GradientBoosting,
    "clf/gaussian-process": GaussianProcessClassifier,
    "clf/mlp": NeuralNet,
    "clf/resnet": NeuralNet,
}


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__nd__": {
            "dtype": obj.dtype.str,
            "shape": list(obj.shape),
            "data": base64.b64encode(np.ascontiguousarray(obj).tobytes()).decode("ascii"),
        }}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__nd__" in obj and set(obj) == {"__nd__"}:
            meta = obj["__nd__"]
            data = base64.b64decode(meta["data"])
            return np.frombuffer(data, dtype=np.dtype(meta["dtype"])).reshape(
                meta["shape"]).copy()
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def _spec_payload(spec) -> dict:
    return {"kind": spec.kind, "hyperparameters": dict(spec.hyperparameters),
            "seed": spec.seed}


def _slot_payload(task: str, slot: SubModelSlot) -> dict:
    prefix = "reg" if task == REGRESSION else "clf"
    trained = slot.model
    payload = {
        "spec": _spec_payload(slot.spec),
        "split_seed": slot.split_seed,
        "split": {"train": list(slot.split.train_idx),
                  "val": list(slot.split.val_idx),
                  "test": list(slot.split.test_idx)},
        "score": {"name": slot.score.name, "value": slot.score.value,
                  "n": slot.score.n},
        "weight": slot.weight,
        "model_tag": f"{prefix}/{slot.spec.kind}",
        "model_state": trained.model.to_state(),
        "feature_names": list(trained.feature_names),
        "builtin_importance": trained.builtin_importance,
    }
    if task != REGRESSION:
        payload["class_counts"] = list(trained.class_counts)
    return payload


def _restore_slot(task: str, payload: dict) -> SubModelSlot:
    tag = payload["model_tag"]
    cls = _MODEL_CLASSES.get(tag)
    if cls is None:
        raise ModelFormatError(f"unknown learner kind tag {tag!r}")
    inner = cls.from_state(payload["model_state"])
    spec_payload = payload["spec"]
    names = tuple(payload["feature_names"])
    builtin = payload["builtin_importance"]
    if task == REGRESSION:
        spec = RegressorSpec(**spec_payload)
        trained = TrainedRegressor(spec=spec, feature_names=names, model=inner,
                                   builtin_importance=builtin)
    else:
        spec = ClassifierSpec(**spec_payload)
        trained = TrainedClassifier(spec=spec, feature_names=names, model=inner,
                                    class_counts=tuple(payload["class_counts"]),
                                    builtin_importance=builtin)
    split = payload["split"]
    return SubModelSlot(
        spec=spec,
        split_seed=payload["split_seed"],
        split=DataSplit(train_idx=tuple(split["train"]),
                        val_idx=tuple(split["val"]),
                        test_idx=tuple(split["test"])),
        score=MetricValue(**payload["score"]),
        weight=payload["weight"],
        model=trained,
    )


def save_metamodel(model: MetaModel, path) -> None:
    config = model.config
    payload = {
        "config": {
            "task": config.task,
            "roster": [_spec_payload(s) for s in config.roster],
            "keep_models": config.keep_models,
            "feature_keep_ratio": config.feature_keep_ratio,
            "split_fractions": list(config.split_fractions),
            "seed": config.seed,
            "minority_threshold": config.minority_threshold,
            "max_kind_fraction": config.max_kind_fraction,
            "permutation_repeats": config.permutation_repeats,
        },
        "task": model.task,
        "target_name": model.target_name,
        "feature_names": list(model.feature_names),
        "scaler": {"column_names": list(model.scaler.column_names),
                   "mean": model.scaler.mean, "std": model.scaler.std},
        "filter_report": {
            "dropped_nonfinite": list(model.filter_report.dropped_nonfinite),
            "dropped_constant": list(model.filter_report.dropped_constant),
            "retained": list(model.filter_report.retained),
        },
        "importance": {"feature_names": list(model.importance.feature_names),
                       "values": model.importance.values,
                       "normalized": model.importance.normalized},
        "slots": [_slot_payload(model.task, s) for s in model.slots],
    }
    blob = json.dumps(_encode(payload), sort_keys=True).encode("utf-8")
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, len(blob),
                          hashlib.sha256(blob).digest())
    Path(path).write_bytes(header + blob)


def load_metamodel(path) -> MetaModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"model file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ModelFormatError(f"{path}: truncated header")
    magic, version, length, digest = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ModelFormatError(f"{path}: not a model file (bad magic)")
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"{path}: format version {version}, expected {FORMAT_VERSION}"
        )
    blob = raw[_HEADER.size:]
    if len(blob) != length:
        raise ModelFormatError(f"{path}: truncated or padded payload")
    if hashlib.sha256(blob).digest() != digest:
        raise ModelFormatError(f"{path}: payload checksum mismatch")
    try:
        payload = _decode(json.loads(blob.decode("utf-8")))
    except (ValueError, KeyError) as exc:
        raise ModelFormatError(f"{path}: unreadable payload: {exc}") from None

    cfg = payload["config"]
    task = payload["task"]
    spec_cls = RegressorSpec if task == REGRESSION else ClassifierSpec
    config = MetaModelConfig(
        task=cfg["task"],
        roster=tuple(spec_cls(**s) for s in cfg["roster"]),
        keep_models=cfg["keep_models"],
        feature_keep_ratio=cfg["feature_keep_ratio"],
        split_fractions=tuple(cfg["split_fractions"]),
        seed=cfg["seed"],
        minority_threshold=cfg["minority_threshold"],
        max_kind_fraction=cfg["max_kind_fraction"],
        permutation_repeats=cfg["permutation_repeats"],
    )
    scaler = ScalerParams(
        column_names=tuple(payload["scaler"]["column_names"]),
        mean=payload["scaler"]["mean"],
        std=payload["scaler"]["std"],
    )
    report = ColumnFilterReport(
        dropped_nonfinite=tuple(payload["filter_report"]["dropped_nonfinite"]),
        dropped_constant=tuple(payload["filter_report"]["dropped_constant"]),
        retained=tuple(payload["filter_report"]["retained"]),
    )
    importance = ImportanceVector(
        feature_names=tuple(payload["importance"]["feature_names"]),
        values=payload["importance"]["values"],
        normalized=payload["importance"]["normalized"],
    )
    slots = tuple(_restore_slot(task, s) for s in payload["slots"])
    return MetaModel(
        config=config,
        task=task,
        target_name=payload["target_name"],
        slots=slots,
        feature_names=tuple(payload["feature_names"]),
        scaler=scaler,
        filter_report=report,
        importance=importance,
    )
