"""K-nearest-neighbour models (Euclidean, uniform weights).

Distance ties resolve by stable index order so predictions are deterministic.
"""

from __future__ import annotations

import numpy as np

from .kernel import pairwise_sq_dists


class KnnModel:
    """Shared k-NN machinery; mode selects mean-of-targets or vote fraction."""

    def __init__(self, *, mode, k=5, seed=0):
        self.mode = mode
        self.k = int(k)
        self.seed = int(seed)

    def fit(self, X, y):
        self.X_ = X.copy()
        self.y_ = np.asarray(y, dtype=float).copy()
        return self

    def _neighbor_targets(self, X):
        d2 = pairwise_sq_dists(X, self.X_)
        order = np.argsort(d2, axis=1, kind="stable")[:, :self.k]
        return self.y_[order]

    def predict(self, X):
        return self._neighbor_targets(X).mean(axis=1)

    # vote fraction doubles as the class-1 probability
    predict_proba = predict

    def to_state(self):
        return {"mode": self.mode, "k": self.k, "seed": self.seed,
                "X": self.X_, "y": self.y_}

    @classmethod
    def from_state(cls, state):
        model = cls(mode=state["mode"], k=state["k"], seed=state["seed"])
        model.X_ = state["X"]
        model.y_ = state["y"]
        return model
