"""Linear-family learners: lasso and ridge regression, logistic regression,
linear/quadratic discriminant analysis, and Gaussian naive Bayes.

Covariance-based models regularize with ridge * trace(S)/p on the diagonal
and escalate that ridge tenfold a few times before declaring the matrix not
positive definite.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import expit

from ..exceptions import NumericError

_COV_ESCALATIONS = 6


def _soft_threshold(value: float, amount: float) -> float:
    if value > amount:
        return value - amount
    if value < -amount:
        return value + amount
    return 0.0


class LassoRegressor:
    """L1-penalized least squares by cyclic coordinate descent.

    Inputs are standardized internally (constant columns keep coefficient 0),
    the target is centered, and the objective
    ||y - Xw||^2 / (2n) + alpha ||w||_1 is recorded after every sweep in
    objective_path_.
    """

    def __init__(self, *, alpha=0.01, tol=1e-6, max_sweeps=10000, seed=0):
        self.alpha = float(alpha)
        self.tol = float(tol)
        self.max_sweeps = int(max_sweeps)
        self.seed = int(seed)

    def fit(self, X, y):
        n, p = X.shape
        self.x_mean_ = X.mean(axis=0)
        sd = np.sqrt(X.var(axis=0))
        self.x_std_ = np.where(sd > 0, sd, 1.0)
        self.y_mean_ = float(np.mean(y))
        Xs = (X - self.x_mean_) / self.x_std_
        yc = y - self.y_mean_

        col_sq = np.mean(Xs * Xs, axis=0)
        w = np.zeros(p)
        residual = yc.copy()
        self.objective_path_ = []
        for _ in range(self.max_sweeps):
            max_delta = 0.0
            for j in range(p):
                if col_sq[j] == 0.0:
                    continue
                xj = Xs[:, j]
                old = w[j]
                rho = (xj @ residual) / n + col_sq[j] * old
                new = _soft_threshold(rho, self.alpha) / col_sq[j]
                if new != old:
                    residual += xj * (old - new)
                    w[j] = new
                    max_delta = max(max_delta, abs(new - old))
            self.objective_path_.append(
                float(0.5 * np.mean(residual * residual) + self.alpha * np.sum(np.abs(w)))
            )
            if max_delta < self.tol:
                break
        self.coef_ = w
        return self

    def predict(self, X):
        return self.y_mean_ + ((X - self.x_mean_) / self.x_std_) @ self.coef_

    def importance(self):
        return np.abs(self.coef_)

    def to_state(self):
        return {"alpha": self.alpha, "tol": self.tol, "max_sweeps": self.max_sweeps,
                "seed": self.seed, "coef": self.coef_, "x_mean": self.x_mean_,
                "x_std": self.x_std_, "y_mean": self.y_mean_}

    @classmethod
    def from_state(cls, state):
        model = cls(alpha=state["alpha"], tol=state["tol"],
                    max_sweeps=state["max_sweeps"], seed=state["seed"])
        model.coef_ = state["coef"]
        model.x_mean_ = state["x_mean"]
        model.x_std_ = state["x_std"]
        model.y_mean_ = state["y_mean"]
        model.objective_path_ = []
        return model


class RidgeRegressor:
    """Tikhonov-regularized least squares via the normal equations."""

    def __init__(self, *, alpha=1.0, seed=0):
        self.alpha = float(alpha)
        self.seed = int(seed)

    def fit(self, X, y):
        self.x_mean_ = X.mean(axis=0)
        self.y_mean_ = float(np.mean(y))
        Xc = X - self.x_mean_
        yc = y - self.y_mean_
        A = Xc.T @ Xc + self.alpha * np.eye(X.shape[1])
        rhs = Xc.T @ yc
        w = None
        for jitter in (0.0, 1e-10, 1e-8, 1e-6, 1e-4):
            try:
                w = np.linalg.solve(A + jitter * np.eye(A.shape[0]), rhs)
                break
            except np.linalg.LinAlgError:
                continue
        if w is None:
            raise NumericError("singular normal matrix after jitter escalation")
        self.coef_ = w
        return self

    def predict(self, X):
        return self.y_mean_ + (X - self.x_mean_) @ self.coef_

    def importance(self):
        return np.abs(self.coef_)

    def to_state(self):
        return {"alpha": self.alpha, "seed": self.seed, "coef": self.coef_,
                "x_mean": self.x_mean_, "y_mean": self.y_mean_}

    @classmethod
    def from_state(cls, state):
        model = cls(alpha=state["alpha"], seed=state["seed"])
        model.coef_ = state["coef"]
        model.x_mean_ = state["x_mean"]
        model.y_mean_ = state["y_mean"]
        return model


class LogisticRegression:
    """L2-penalized logistic regression by damped Newton iterations.

    Minimizes mean softplus(-s z) + alpha/2 ||w||^2 (intercept unpenalized);
    objective_path_ records the penalized mean log-likelihood (negated loss),
    which step halving keeps non-decreasing.
    """

    def __init__(self, *, alpha=1e-2, max_iter=100, tol=1e-8, seed=0):
        self.alpha = float(alpha)
        self.max_iter = int(max_iter)
        self.tol = float(tol)
        self.seed = int(seed)

    def _loss(self, Xa, y, theta):
        z = Xa @ theta
        s = 2.0 * y - 1.0
        return float(np.mean(np.logaddexp(0.0, -s * z))
                     + 0.5 * self.alpha * np.sum(theta[:-1] ** 2))

    def fit(self, X, y):
        n, p = X.shape
        Xa = np.hstack([X, np.ones((n, 1))])
        theta = np.zeros(p + 1)
        reg = self.alpha * np.ones(p + 1)
        reg[-1] = 0.0
        loss = self._loss(Xa, y, theta)
        self.objective_path_ = [-loss]
        for _ in range(self.max_iter):
            z = Xa @ theta
            prob = expit(z)
            grad = Xa.T @ (prob - y) / n + reg * theta
            if float(np.max(np.abs(grad))) < self.tol:
                break
            w = prob * (1.0 - prob)
            H = (Xa.T * w) @ Xa / n + np.diag(reg)
            try:
                direction = -np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                raise NumericError("singular logistic Hessian") from None
            step = 1.0
            new_loss = self._loss(Xa, y, theta + direction)
            while new_loss > loss and step > 1e-10:
                step *= 0.5
                new_loss = self._loss(Xa, y, theta + step * direction)
            if new_loss > loss:
                break
            theta = theta + step * direction
            loss = new_loss
            self.objective_path_.append(-loss)
        self.coef_ = theta[:-1]
        self.intercept_ = float(theta[-1])
        return self

    def predict_proba(self, X):
        return expit(X @ self.coef_ + self.intercept_)

    def importance(self):
        return np.abs(self.coef_)

    def to_state(self):
        return {"alpha": self.alpha, "max_iter": self.max_iter, "tol": self.tol,
                "seed": self.seed, "coef": self.coef_, "intercept": self.intercept_}

    @classmethod
    def from_state(cls, state):
        model = cls(alpha=state["alpha"], max_iter=state["max_iter"],
                    tol=state["tol"], seed=state["seed"])
        model.coef_ = state["coef"]
        model.intercept_ = state["intercept"]
        model.objective_path_ = []
        return model


def _class_stats(X, y):
    stats = []
    for c in (0.0, 1.0):
        mask = y == c
        Xc = X[mask]
        mu = Xc.mean(axis=0)
        centered = Xc - mu
        scatter = centered.T @ centered
        stats.append((int(mask.sum()), mu, scatter))
    return stats


def _regularized_cho(S, ridge):
    """Cholesky of S + r I with escalating trace-scaled ridge."""
    p = S.shape[0]
    base = np.trace(S) / p
    if base <= 0:
        base = 1.0
    r = ridge
    for _ in range(_COV_ESCALATIONS):
        try:
            mat = S + r * base * np.eye(p)
            return cho_factor(mat, lower=True), mat
        except LinAlgError:
            r *= 10.0
    raise NumericError("covariance not positive definite after maximum regularization")


class LinearDiscriminant:
    """Two-class Gaussian discriminant with a pooled, ridge-regularized
    covariance; the decision function is linear."""

    def __init__(self, *, ridge=1e-4, seed=0):
        self.ridge = float(ridge)
        self.seed = int(seed)

    def fit(self, X, y):
        n = X.shape[0]
        (n0, mu0, s0), (n1, mu1, s1) = _class_stats(X, y)
        pooled = (s0 + s1) / n
        factor, _ = _regularized_cho(pooled, self.ridge)
        self.coef_ = cho_solve(factor, mu1 - mu0)
        mid = 0.5 * (mu0 + mu1)
        self.intercept_ = float(np.log(n1 / n0) - mid @ self.coef_)
        return self

    def predict_proba(self, X):
        return expit(X @ self.coef_ + self.intercept_)

    def importance(self):
        return np.abs(self.coef_)

    def to_state(self):
        return {"ridge": self.ridge, "seed": self.seed, "coef": self.coef_,
                "intercept": self.intercept_}

    @classmethod
    def from_state(cls, state):
        model = cls(ridge=state["ridge"], seed=state["seed"])
        model.coef_ = state["coef"]
        model.intercept_ = state["intercept"]
        return model


class QuadraticDiscriminant:
    """Two-class Gaussian discriminant with per-class regularized covariance."""

    def __init__(self, *, ridge=1e-4, seed=0):
        self.ridge = float(ridge)
        self.seed = int(seed)

    def fit(self, X, y):
        self.params_ = []
        n = X.shape[0]
        for n_c, mu, scatter in _class_stats(X, y):
            cov = scatter / n_c
            factor, mat = _regularized_cho(cov, self.ridge)
            logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
            self.params_.append({
                "mu": mu,
                "cov": mat,
                "logdet": logdet,
                "log_prior": float(np.log(n_c / n)),
            })
        return self

    def _log_density(self, X, params):
        factor = cho_factor(params["cov"], lower=True)
        diff = X - params["mu"]
        maha = np.sum(diff * cho_solve(factor, diff.T).T, axis=1)
        return -0.5 * (maha + params["logdet"]) + params["log_prior"]

    def predict_proba(self, X):
        d0 = self._log_density(X, self.params_[0])
        d1 = self._log_density(X, self.params_[1])
        return expit(d1 - d0)

    def importance(self):
        return None

    def to_state(self):
        return {"ridge": self.ridge, "seed": self.seed,
                "params": [dict(p) for p in self.params_]}

    @classmethod
    def from_state(cls, state):
        model = cls(ridge=state["ridge"], seed=state["seed"])
        model.params_ = state["params"]
        return model


class GaussianNaiveBayes:
    """Per-feature Gaussian class conditionals with a variance floor."""

    def __init__(self, *, var_smoothing=1e-9, seed=0):
        self.var_smoothing = float(var_smoothing)
        self.seed = int(seed)

    def fit(self, X, y):
        n = X.shape[0]
        floor = self.var_smoothing * max(float(X.var(axis=0).max()), 1e-12)
        self.theta_ = []
        self.var_ = []
        self.log_prior_ = []
        for c in (0.0, 1.0):
            Xc = X[y == c]
            self.theta_.append(Xc.mean(axis=0))
            self.var_.append(np.maximum(Xc.var(axis=0), floor))
            self.log_prior_.append(float(np.log(Xc.shape[0] / n)))
        return self

    def _joint_log_lik(self, X, c):
        diff = X - self.theta_[c]
        return self.log_prior_[c] - 0.5 * np.sum(
            np.log(2.0 * np.pi * self.var_[c]) + diff * diff / self.var_[c], axis=1
        )

    def predict_proba(self, X):
        return expit(self._joint_log_lik(X, 1) - self._joint_log_lik(X, 0))

    def importance(self):
        return None

    def to_state(self):
        return {"var_smoothing": self.var_smoothing, "seed": self.seed,
                "theta": list(self.theta_), "var": list(self.var_),
                "log_prior": list(self.log_prior_)}

    @classmethod
    def from_state(cls, state):
        model = cls(var_smoothing=state["var_smoothing"], seed=state["seed"])
        model.theta_ = list(state["theta"])
        model.var_ = list(state["var"])
        model.log_prior_ = list(state["log_prior"])
        return model
