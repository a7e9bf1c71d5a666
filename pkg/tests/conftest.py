"""Shared helpers for the test suite."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from metamodel.tabular import FeatureTable


def make_table(X, prefix="f_", kinds=None, row_prefix="r"):
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    names = tuple(f"{prefix}{j}" for j in range(p))
    if kinds is None:
        kinds = tuple(
            "learned-latent" if name.startswith("f_mpnn_") else "external-descriptor"
            for name in names
        )
    return FeatureTable(
        row_ids=tuple(f"{row_prefix}{i}" for i in range(n)),
        column_names=names,
        column_kinds=kinds,
        values=X,
    )


def write_csv(path: Path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return Path(path)


def write_dataset(path: Path, X, targets: dict, feature_names=None, ids=None):
    """Write the package CSV schema; NaN target cells become empty strings."""
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    feature_names = feature_names or [f"f_{j}" for j in range(p)]
    ids = ids or [f"m{i}" for i in range(n)]
    header = ["id"] + list(feature_names) + list(targets)
    rows = []
    for i in range(n):
        row = [ids[i]] + [repr(float(v)) for v in X[i]]
        for t in targets.values():
            v = t[i]
            row.append("" if (v is None or np.isnan(v)) else repr(float(v)))
        rows.append(row)
    return write_csv(path, header, rows)


def friedman_data(n, p, seed, noise=1.0):
    """Friedman-style nonlinear regression with p - 5 nuisance features."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, p))
    y = (10.0 * np.sin(np.pi * X[:, 0] * X[:, 1]) + 20.0 * (X[:, 2] - 0.5) ** 2
         + 10.0 * X[:, 3] + 5.0 * X[:, 4] + noise * rng.normal(size=n))
    return X, y


def two_blob_data(n, p, seed, sep=1.2):
    """Two Gaussian blobs in the first two dims, the rest pure nuisance."""
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.5).astype(float)
    X = rng.normal(size=(n, p))
    X[:, 0] += sep * (2.0 * y - 1.0)
    X[:, 1] -= sep * (2.0 * y - 1.0)
    return X, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
