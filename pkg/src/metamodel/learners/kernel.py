"""Gaussian-kernel learners: kernel ridge, RBF interpolation, and exact /
Laplace-approximate Gaussian processes.

All kernels are exp(-||a-b||^2 / (2 h^2)) with h from the median pairwise
distance heuristic unless overridden. Factorizations escalate a diagonal
jitter from 1e-10 to 1e-4 before giving up.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular
from scipy.special import expit

from ..exceptions import NumericError

_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
_MEDIAN_CAP = 2000


def pairwise_sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.maximum(d2, 0.0)


def gaussian_kernel(A: np.ndarray, B: np.ndarray, bandwidth: float) -> np.ndarray:
    return np.exp(-pairwise_sq_dists(A, B) / (2.0 * bandwidth * bandwidth))


def median_bandwidth(X: np.ndarray, seed: int = 0) -> float:
    """Median pairwise distance; seeded subsample above the row cap."""
    n = X.shape[0]
    if n > _MEDIAN_CAP:
        idx = np.random.default_rng([seed, 104729]).choice(n, _MEDIAN_CAP, replace=False)
        X = X[np.sort(idx)]
        n = _MEDIAN_CAP
    d2 = pairwise_sq_dists(X, X)
    upper = d2[np.triu_indices(n, k=1)]
    if upper.size == 0:
        return 1.0
    med = float(np.median(np.sqrt(upper)))
    if med > 0:
        return med
    positive = upper[upper > 0]
    return float(np.sqrt(positive.mean())) if positive.size else 1.0


def factor_with_jitter(K: np.ndarray):
    """Cholesky of K (+ escalating jitter). Returns (cho_factor result, jitter)."""
    for jitter in _JITTERS:
        try:
            mat = K if jitter == 0.0 else K + jitter * np.eye(K.shape[0])
            return cho_factor(mat, lower=True), jitter
        except LinAlgError:
            continue
    raise NumericError(
        "kernel matrix not positive definite after jitter escalation to 1e-4"
    )


class _TargetScaler:
    """Center/scale targets internally; un-scale on predict."""

    def __init__(self, y: np.ndarray):
        self.mean = float(np.mean(y))
        sd = float(np.std(y))
        self.std = sd if sd > 0 else 1.0

    def scale(self, y):
        return (y - self.mean) / self.std

    def unscale(self, y):
        return self.mean + self.std * y

    def to_state(self):
        return {"mean": self.mean, "std": self.std}

    @classmethod
    def from_state(cls, state):
        obj = cls.__new__(cls)
        obj.mean = state["mean"]
        obj.std = state["std"]
        return obj


class KernelRidge:
    """Gaussian-kernel ridge regression: (K + alpha I) dual = y."""

    def __init__(self, *, alpha=1e-3, bandwidth=None, seed=0):
        self.alpha = float(alpha)
        self.bandwidth = bandwidth
        self.seed = int(seed)

    def fit(self, X, y):
        self.X_ = X.copy()
        self.scaler_ = _TargetScaler(y)
        self.h_ = float(self.bandwidth) if self.bandwidth else median_bandwidth(X, self.seed)
        K = gaussian_kernel(X, X, self.h_)
        K[np.diag_indices_from(K)] += self.alpha
        factor, _ = factor_with_jitter(K)
        self.dual_ = cho_solve(factor, self.scaler_.scale(y))
        return self

    def predict(self, X):
        return self.scaler_.unscale(gaussian_kernel(X, self.X_, self.h_) @ self.dual_)

    def to_state(self):
        return {"alpha": self.alpha, "seed": self.seed, "h": self.h_,
                "X": self.X_, "dual": self.dual_, "scaler": self.scaler_.to_state()}

    @classmethod
    def from_state(cls, state):
        model = cls(alpha=state["alpha"], seed=state["seed"])
        model.h_ = state["h"]
        model.X_ = state["X"]
        model.dual_ = state["dual"]
        model.scaler_ = _TargetScaler.from_state(state["scaler"])
        return model


class RbfInterpolator:
    """Gaussian RBF interpolation with a smoothing ridge.

    smoothing == 0 gives exact interpolation (LU solve, jitter fallback only
    on a singular system).
    """

    def __init__(self, *, smoothing=1e-3, bandwidth=None, seed=0):
        self.smoothing = float(smoothing)
        self.bandwidth = bandwidth
        self.seed = int(seed)

    def fit(self, X, y):
        self.X_ = X.copy()
        self.scaler_ = _TargetScaler(y)
        self.h_ = float(self.bandwidth) if self.bandwidth else median_bandwidth(X, self.seed)
        K = gaussian_kernel(X, X, self.h_)
        ys = self.scaler_.scale(y)
        if self.smoothing > 0:
            K[np.diag_indices_from(K)] += self.smoothing
            factor, _ = factor_with_jitter(K)
            self.dual_ = cho_solve(factor, ys)
        else:
            self.dual_ = None
            for jitter in _JITTERS:
                try:
                    mat = K if jitter == 0.0 else K + jitter * np.eye(K.shape[0])
                    self.dual_ = np.linalg.solve(mat, ys)
                    break
                except np.linalg.LinAlgError:
                    continue
            if self.dual_ is None:
                raise NumericError("singular interpolation system after jitter escalation")
        return self

    def predict(self, X):
        return self.scaler_.unscale(gaussian_kernel(X, self.X_, self.h_) @ self.dual_)

    def to_state(self):
        return {"smoothing": self.smoothing, "seed": self.seed, "h": self.h_,
                "X": self.X_, "dual": self.dual_, "scaler": self.scaler_.to_state()}

    @classmethod
    def from_state(cls, state):
        model = cls(smoothing=state["smoothing"], seed=state["seed"])
        model.h_ = state["h"]
        model.X_ = state["X"]
        model.dual_ = state["dual"]
        model.scaler_ = _TargetScaler.from_state(state["scaler"])
        return model


def _subsample_rows(n: int, cap: int, seed: int) -> np.ndarray | None:
    if n <= cap:
        return None
    idx = np.random.default_rng([seed, 7907]).choice(n, cap, replace=False)
    return np.sort(idx)


class GaussianProcessRegressor:
    """Exact GP regression with a Gaussian kernel and fixed noise variance.

    Training rows are capped by a seeded subsample. Predictive variance is
    that of the latent function (noise-free), scaled back to target units.
    """

    def __init__(self, *, noise=1e-2, bandwidth=None, max_rows=2000, seed=0):
        self.noise = float(noise)
        self.bandwidth = bandwidth
        self.max_rows = int(max_rows)
        self.seed = int(seed)

    def fit(self, X, y):
        sub = _subsample_rows(X.shape[0], self.max_rows, self.seed)
        if sub is not None:
            X = X[sub]
            y = y[sub]
        self.X_ = X.copy()
        self.scaler_ = _TargetScaler(y)
        self.h_ = float(self.bandwidth) if self.bandwidth else median_bandwidth(X, self.seed)
        K = gaussian_kernel(X, X, self.h_)
        K[np.diag_indices_from(K)] += self.noise
        (L, lower), _ = factor_with_jitter(K)
        self.L_ = np.tril(L) if lower else np.triu(L).T
        self.alpha_ = cho_solve((self.L_, True), self.scaler_.scale(y))
        return self

    def predict(self, X):
        return self.scaler_.unscale(gaussian_kernel(X, self.X_, self.h_) @ self.alpha_)

    def predict_with_variance(self, X):
        """Mean and latent posterior variance (target units)."""
        k_star = gaussian_kernel(X, self.X_, self.h_)
        mean = self.scaler_.unscale(k_star @ self.alpha_)
        v = solve_triangular(self.L_, k_star.T, lower=True)
        var = np.maximum(1.0 - np.sum(v * v, axis=0), 0.0)
        return mean, var * self.scaler_.std ** 2

    @property
    def noise_variance_(self) -> float:
        """Noise variance in target units."""
        return self.noise * self.scaler_.std ** 2

    def to_state(self):
        return {"noise": self.noise, "max_rows": self.max_rows, "seed": self.seed,
                "h": self.h_, "X": self.X_, "L": self.L_, "alpha": self.alpha_,
                "scaler": self.scaler_.to_state()}

    @classmethod
    def from_state(cls, state):
        model = cls(noise=state["noise"], max_rows=state["max_rows"], seed=state["seed"])
        model.h_ = state["h"]
        model.X_ = state["X"]
        model.L_ = state["L"]
        model.alpha_ = state["alpha"]
        model.scaler_ = _TargetScaler.from_state(state["scaler"])
        return model


class GaussianProcessClassifier:
    """Binary GP classification: Gaussian-kernel latent function, logistic
    likelihood, Laplace-approximate posterior.

    Newton iterations maximize log p(y|f) - f' K^-1 f / 2 with step halving;
    objective_path_ records the (non-decreasing) objective and
    final_grad_norm_ the gradient norm at the mode. Predictive probabilities
    use the logistic-over-Gaussian moderation sigma(mu / sqrt(1 + pi v / 8)).
    """

    def __init__(self, *, bandwidth=None, max_rows=2000, max_newton=100,
                 tol=1e-8, seed=0):
        self.bandwidth = bandwidth
        self.max_rows = int(max_rows)
        self.max_newton = int(max_newton)
        self.tol = float(tol)
        self.seed = int(seed)

    def fit(self, X, y):
        sub = _subsample_rows(X.shape[0], self.max_rows, self.seed)
        if sub is not None:
            X = X[sub]
            y = y[sub]
        self.X_ = X.copy()
        n = X.shape[0]
        self.h_ = float(self.bandwidth) if self.bandwidth else median_bandwidth(X, self.seed)
        K = gaussian_kernel(X, X, self.h_)
        (Lk, lower), jitter = factor_with_jitter(K)
        if jitter:
            K[np.diag_indices_from(K)] += jitter
        Lk = np.tril(Lk)

        def objective(f):
            s = 2.0 * y - 1.0
            loglik = -np.sum(np.logaddexp(0.0, -s * f))
            u = solve_triangular(Lk, f, lower=True)
            return loglik - 0.5 * float(u @ u)

        def penalized_grad(f):
            u = solve_triangular(Lk, f, lower=True)
            kinv_f = solve_triangular(Lk.T, u, lower=False)
            return (y - expit(f)) - kinv_f

        f = np.zeros(n)
        obj = objective(f)
        self.objective_path_ = [obj]
        for _ in range(self.max_newton):
            pi = expit(f)
            grad_loglik = y - pi
            w = pi * (1.0 - pi)
            # Newton direction via B = I + W^1/2 K W^1/2 (stable RW formulation)
            sw = np.sqrt(w)
            B = np.eye(n) + sw[:, None] * K * sw[None, :]
            (Lb, _), _ = factor_with_jitter(B)
            Lb = np.tril(Lb)
            b = w * f + grad_loglik
            a = b - sw * cho_solve((Lb, True), sw * (K @ b))
            direction = K @ a - f
            step = 1.0
            new_obj = objective(f + direction)
            while new_obj < obj and step > 1e-6:
                step *= 0.5
                new_obj = objective(f + step * direction)
            if new_obj < obj:
                break  # no improving step left: already at the mode (fp limit)
            f = f + step * direction
            obj = new_obj
            self.objective_path_.append(obj)
            if float(np.linalg.norm(penalized_grad(f))) < self.tol:
                break
        self.final_grad_norm_ = float(np.linalg.norm(penalized_grad(f)))
        self.f_mode_ = f
        self.grad_at_mode_ = y - expit(f)
        pi = expit(f)
        self.w_mode_ = pi * (1.0 - pi)
        sw = np.sqrt(self.w_mode_)
        B = np.eye(n) + sw[:, None] * K * sw[None, :]
        (Lb, _), _ = factor_with_jitter(B)
        self.Lb_ = np.tril(Lb)
        return self

    def predict_proba(self, X):
        k_star = gaussian_kernel(X, self.X_, self.h_)
        mu = k_star @ self.grad_at_mode_
        sw = np.sqrt(self.w_mode_)
        v = solve_triangular(self.Lb_, sw[:, None] * k_star.T, lower=True)
        var = np.maximum(1.0 - np.sum(v * v, axis=0), 0.0)
        return expit(mu / np.sqrt(1.0 + np.pi * var / 8.0))

    def to_state(self):
        return {"max_rows": self.max_rows, "max_newton": self.max_newton,
                "tol": self.tol, "seed": self.seed, "h": self.h_, "X": self.X_,
                "grad_at_mode": self.grad_at_mode_, "w_mode": self.w_mode_,
                "Lb": self.Lb_}

    @classmethod
    def from_state(cls, state):
        model = cls(max_rows=state["max_rows"], max_newton=state["max_newton"],
                    tol=state["tol"], seed=state["seed"])
        model.h_ = state["h"]
        model.X_ = state["X"]
        model.grad_at_mode_ = state["grad_at_mode"]
        model.w_mode_ = state["w_mode"]
        model.Lb_ = state["Lb"]
        return model
