"""CART trees, bagged random forests, and stagewise gradient boosting.

Trees are grown with exact best-split search over sorted feature columns.
Split gains use the Newton form (sum g)^2 / sum h, which reduces to the
classic variance-reduction gain when every hessian is 1, or the weighted
Gini decrease for classification forests. Importances accumulate the raw
impurity decrease per feature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

_EPS = 1e-12
_MIN_GAIN = 1e-12


class Tree:
    """Flat-array binary tree; feature == -1 marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = np.flatnonzero(feat >= 0)
            if active.size == 0:
                break
            f = feat[active]
            go_left = X[active, f] <= self.threshold[node[active]]
            node[active] = np.where(
                go_left, self.left[node[active]], self.right[node[active]]
            )
        return self.value[node]

    def to_state(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_state(cls, state: dict) -> "Tree":
        return cls(state["feature"], state["threshold"], state["left"],
                   state["right"], state["value"])


def _best_split_newton(x, g, h, min_leaf):
    """Best threshold on one feature for the Newton gain; None if no valid cut."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    m = xs.size
    cg = np.cumsum(g[order])
    ch = np.cumsum(h[order])
    total_g = cg[-1]
    total_h = ch[-1]
    lo = min_leaf - 1
    hi = m - min_leaf  # candidate cut after position i for i in [lo, hi)
    if hi <= lo:
        return None
    valid = xs[lo:hi] < xs[lo + 1:hi + 1]
    if not valid.any():
        return None
    gl = cg[lo:hi]
    hl = ch[lo:hi]
    gr = total_g - gl
    hr = total_h - hl
    score = gl * gl / np.maximum(hl, _EPS) + gr * gr / np.maximum(hr, _EPS)
    score = np.where(valid, score, -np.inf)
    best = int(np.argmax(score))
    gain = score[best] - total_g * total_g / max(total_h, _EPS)
    if not math.isfinite(gain) or gain <= _MIN_GAIN:
        return None
    cut = lo + best
    return gain, 0.5 * (xs[cut] + xs[cut + 1])


def _best_split_gini(x, labels, min_leaf):
    """Best threshold on one feature for weighted Gini decrease."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    m = xs.size
    cpos = np.cumsum(labels[order])
    total_pos = cpos[-1]
    lo = min_leaf - 1
    hi = m - min_leaf
    if hi <= lo:
        return None
    valid = xs[lo:hi] < xs[lo + 1:hi + 1]
    if not valid.any():
        return None
    ml = np.arange(lo + 1, hi + 1, dtype=float)
    mr = m - ml
    pl = cpos[lo:hi]
    pr = total_pos - pl
    # m_part * gini(part) = 2 * pos * neg / m_part
    impurity_l = 2.0 * pl * (ml - pl) / ml
    impurity_r = 2.0 * pr * (mr - pr) / mr
    parent = 2.0 * total_pos * (m - total_pos) / m
    gain_all = np.where(valid, parent - impurity_l - impurity_r, -np.inf)
    best = int(np.argmax(gain_all))
    gain = gain_all[best]
    if not math.isfinite(gain) or gain <= _MIN_GAIN:
        return None
    cut = lo + best
    return gain, 0.5 * (xs[cut] + xs[cut + 1])


def grow_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray | None,
    *,
    criterion: str,
    max_depth: int | None,
    min_leaf: int,
    max_features: int | None,
    rng: np.random.Generator | None,
    importance_out: np.ndarray | None = None,
) -> Tree:
    """Grow one tree.

    criterion "newton": g/h are gradient and hessian vectors, leaf value is
    sum(g)/sum(h). criterion "gini": g holds 0/1 labels, leaf value is the
    class-1 fraction. Candidate features are scanned in ascending index order
    so equal gains resolve deterministically.
    """
    n, p = X.shape
    if criterion == "newton":
        hess = np.ones(n) if h is None else h
    elif criterion == "gini":
        hess = None
    else:
        raise ValueError(f"unknown criterion {criterion!r}")

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def leaf_value(idx) -> float:
        if criterion == "newton":
            return float(g[idx].sum() / max(hess[idx].sum(), _EPS))
        return float(g[idx].mean())

    root = new_node()
    stack = [(np.arange(n), 0, root)]
    while stack:
        idx, depth, node = stack.pop()
        vals = g[idx]
        depth_done = max_depth is not None and depth >= max_depth
        if depth_done or idx.size < 2 * min_leaf or (vals == vals[0]).all():
            value[node] = leaf_value(idx)
            continue

        if max_features is None or max_features >= p:
            candidates = range(p)
        else:
            candidates = np.sort(rng.choice(p, size=max_features, replace=False))

        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        for f in candidates:
            x = X[idx, f]
            if criterion == "newton":
                found = _best_split_newton(x, g[idx], hess[idx], min_leaf)
            else:
                found = _best_split_gini(x, g[idx], min_leaf)
            if found is not None and found[0] > best_gain:
                best_gain, best_thr = found
                best_feat = f

        if best_feat < 0:
            value[node] = leaf_value(idx)
            continue

        if importance_out is not None:
            importance_out[best_feat] += best_gain
        go_left = X[idx, best_feat] <= best_thr
        feature[node] = int(best_feat)
        threshold[node] = float(best_thr)
        left_node = new_node()
        right_node = new_node()
        left[node] = left_node
        right[node] = right_node
        stack.append((idx[~go_left], depth + 1, right_node))
        stack.append((idx[go_left], depth + 1, left_node))

    return Tree(feature, threshold, left, right, value)


class RandomForest:
    """Bagged CART trees with per-split feature subsampling.

    mode "regression": variance-reduction splits, mean-of-leaf-means output.
    mode "classification": Gini splits, probability = mean leaf class fraction.
    """

    def __init__(self, *, mode, n_trees=200, max_depth=None, min_leaf=1,
                 max_features=None, bootstrap=True, seed=0):
        self.mode = mode
        self.n_trees = int(n_trees)
        self.max_depth = max_depth
        self.min_leaf = int(min_leaf)
        self.max_features = max_features
        self.bootstrap = bool(bootstrap)
        self.seed = int(seed)
        self.trees_: list[Tree] = []
        self.importance_: np.ndarray | None = None

    def fit(self, X, y):
        n, p = X.shape
        mf = self.max_features if self.max_features is not None else math.ceil(p / 3)
        mf = min(int(mf), p)
        criterion = "newton" if self.mode == "regression" else "gini"
        self.importance_ = np.zeros(p)
        self.trees_ = []
        for t in range(self.n_trees):
            rng = np.random.default_rng([self.seed, t])
            boot = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            self.trees_.append(grow_tree(
                X[boot], y[boot], None,
                criterion=criterion,
                max_depth=self.max_depth,
                min_leaf=self.min_leaf,
                max_features=mf,
                rng=rng,
                importance_out=self.importance_,
            ))
        return self

    def predict(self, X):
        acc = np.zeros(X.shape[0])
        for tree in self.trees_:
            acc += tree.predict(X)
        return acc / len(self.trees_)

    # classification-mode output is already the mean leaf class fraction
    predict_proba = predict

    def to_state(self) -> dict:
        return {
            "mode": self.mode,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "importance": self.importance_,
            "trees": [t.to_state() for t in self.trees_],
        }

    @classmethod
    def from_state(cls, state: dict) -> "RandomForest":
        model = cls(mode=state["mode"], n_trees=state["n_trees"],
                    max_depth=state["max_depth"], min_leaf=state["min_leaf"],
                    max_features=state["max_features"],
                    bootstrap=state["bootstrap"], seed=state["seed"])
        model.importance_ = state["importance"]
        model.trees_ = [Tree.from_state(s) for s in state["trees"]]
        return model


class GradientBoosting:
    """Stagewise boosting on depth-limited trees.

    Regression uses squared loss (trees fit to residuals, leaves are mean
    residuals). Classification uses logistic loss with Newton leaf values
    sum(y - p) / sum(p (1 - p)) and a prior log-odds intercept; probability
    comes through the logistic link. train_loss_path_ records the training
    loss after the intercept and after every stage.
    """

    def __init__(self, *, mode, n_stages=300, max_depth=6, learning_rate=0.1,
                 min_leaf=1, seed=0):
        self.mode = mode
        self.n_stages = int(n_stages)
        self.max_depth = int(max_depth)
        self.learning_rate = float(learning_rate)
        self.min_leaf = int(min_leaf)
        self.seed = int(seed)
        self.base_score_ = 0.0
        self.trees_: list[Tree] = []
        self.importance_: np.ndarray | None = None
        self.train_loss_path_: list[float] = []

    def _loss(self, raw, y):
        if self.mode == "regression":
            d = raw - y
            return float(np.mean(d * d))
        s = 2.0 * y - 1.0
        return float(np.mean(np.logaddexp(0.0, -s * raw)))

    def fit(self, X, y):
        n, p = X.shape
        self.importance_ = np.zeros(p)
        self.trees_ = []
        if self.mode == "regression":
            self.base_score_ = float(np.mean(y))
        else:
            # log(k) - log(n - k): bitwise-antisymmetric under label flips,
            # so relabeling 0<->1 mirrors the whole boosting trajectory
            k = int(y.sum())
            self.base_score_ = float(np.log(k) - np.log(n - k))
        raw = np.full(n, self.base_score_)
        self.train_loss_path_ = [self._loss(raw, y)]
        sign = 2.0 * y - 1.0 if self.mode != "regression" else None
        for _ in range(self.n_stages):
            if self.mode == "regression":
                grad = y - raw
                hess = None
            else:
                # grad = y - p and hess = p (1 - p), written so a label flip
                # negates grad and preserves hess exactly in floating point
                grad = sign * expit(-sign * raw)
                hess = expit(raw) * expit(-raw)
            tree = grow_tree(
                X, grad, hess,
                criterion="newton",
                max_depth=self.max_depth,
                min_leaf=self.min_leaf,
                max_features=None,
                rng=None,
                importance_out=self.importance_,
            )
            raw += self.learning_rate * tree.predict(X)
            self.trees_.append(tree)
            self.train_loss_path_.append(self._loss(raw, y))
        return self

    def _raw(self, X):
        raw = np.full(X.shape[0], self.base_score_)
        for tree in self.trees_:
            raw += self.learning_rate * tree.predict(X)
        return raw

    def predict(self, X):
        raw = self._raw(X)
        if self.mode == "regression":
            return raw
        return expit(raw)

    predict_proba = predict

    def to_state(self) -> dict:
        return {
            "mode": self.mode,
            "n_stages": self.n_stages,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "min_leaf": self.min_leaf,
            "seed": self.seed,
            "base_score": self.base_score_,
            "importance": self.importance_,
            "trees": [t.to_state() for t in self.trees_],
        }

    @classmethod
    def from_state(cls, state: dict) -> "GradientBoosting":
        model = cls(mode=state["mode"], n_stages=state["n_stages"],
                    max_depth=state["max_depth"],
                    learning_rate=state["learning_rate"],
                    min_leaf=state["min_leaf"], seed=state["seed"])
        model.base_score_ = state["base_score"]
        model.importance_ = state["importance"]
        model.trees_ = [Tree.from_state(s) for s in state["trees"]]
        return model
