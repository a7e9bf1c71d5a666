"""Feed-forward and residual networks trained with mini-batch Adam.

Both architectures share the training loop: seeded He initialization with a
zero output layer, an internal 10% holdout for early stopping, and best-epoch
weight restoration. The zero output layer makes classifier training exactly
symmetric under 0<->1 relabeling and starts regressors at the target mean.

loss_and_gradient exposes the analytic full-batch gradient over a flat
parameter vector for finite-difference verification.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit


def _relu(z):
    return np.maximum(z, 0.0)


class MlpCore:
    """Plain feed-forward net: affine + ReLU hidden layers, linear output."""

    def __init__(self, layer_sizes: list[int], rng: np.random.Generator | None):
        self.layer_sizes = [int(s) for s in layer_sizes]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for i, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
            last = i == len(layer_sizes) - 2
            if last or rng is None:
                W = np.zeros((fan_in, fan_out))
            else:
                W = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            self.weights.append(W)
            self.biases.append(np.zeros(fan_out))

    def forward(self, X):
        h = X
        pre: list[np.ndarray] = []
        post: list[np.ndarray] = [X]
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            pre.append(z)
            h = z if i == len(self.weights) - 1 else _relu(z)
            post.append(h)
        return h[:, 0], (pre, post)

    def backward(self, cache, dout):
        pre, post = cache
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        delta = dout[:, None]
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = post[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0)
        return grads_w, grads_b

    def params(self):
        return self.weights + self.biases

    def set_params(self, params):
        k = len(self.weights)
        self.weights = [p.copy() for p in params[:k]]
        self.biases = [p.copy() for p in params[k:]]

    def arch_state(self):
        return {"arch": "mlp", "layer_sizes": self.layer_sizes}


class ResNetCore:
    """Input projection, residual blocks h <- h + W2 relu(W1 h + b1) + b2,
    linear output head."""

    def __init__(self, n_features: int, width: int, n_blocks: int,
                 rng: np.random.Generator | None):
        self.n_features = int(n_features)
        self.width = int(width)
        self.n_blocks = int(n_blocks)

        def init(fan_in, fan_out, zero=False):
            if zero or rng is None:
                return np.zeros((fan_in, fan_out))
            return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))

        self.w_in = init(n_features, width)
        self.b_in = np.zeros(width)
        self.blocks = [
            (init(width, width), np.zeros(width), init(width, width), np.zeros(width))
            for _ in range(n_blocks)
        ]
        self.w_out = init(width, 1, zero=True)
        self.b_out = np.zeros(1)

    def forward(self, X):
        z_in = X @ self.w_in + self.b_in
        h = _relu(z_in)
        hs = [h]  # hs[k] is the input to block k; hs[-1] feeds the output head
        block_cache = []
        for w1, b1, w2, b2 in self.blocks:
            z1 = h @ w1 + b1
            a1 = _relu(z1)
            h = h + a1 @ w2 + b2
            block_cache.append((z1, a1))
            hs.append(h)
        out = h @ self.w_out + self.b_out
        return out[:, 0], (X, z_in, hs, block_cache)

    def backward(self, cache, dout):
        X, z_in, hs, block_cache = cache
        delta = dout[:, None]
        g_w_out = hs[-1].T @ delta
        g_b_out = delta.sum(axis=0)
        dh = delta @ self.w_out.T
        g_blocks = []
        for k in range(self.n_blocks - 1, -1, -1):
            w1, _, w2, _ = self.blocks[k]
            z1, a1 = block_cache[k]
            da1 = dh @ w2.T
            dz1 = da1 * (z1 > 0)
            g_blocks.append((
                hs[k].T @ dz1,
                dz1.sum(axis=0),
                a1.T @ dh,
                dh.sum(axis=0),
            ))
            dh = dh + dz1 @ w1.T  # identity skip plus the block path
        g_blocks.reverse()
        dz_in = dh * (z_in > 0)
        grads = [X.T @ dz_in, dz_in.sum(axis=0)]
        for gw1, gb1, gw2, gb2 in g_blocks:
            grads.extend([gw1, gb1, gw2, gb2])
        grads.extend([g_w_out, g_b_out])
        return grads

    def params(self):
        out = [self.w_in, self.b_in]
        for w1, b1, w2, b2 in self.blocks:
            out.extend([w1, b1, w2, b2])
        out.extend([self.w_out, self.b_out])
        return out

    def set_params(self, params):
        params = [p.copy() for p in params]
        self.w_in, self.b_in = params[0], params[1]
        self.blocks = [
            tuple(params[2 + 4 * k: 6 + 4 * k]) for k in range(self.n_blocks)
        ]
        self.w_out, self.b_out = params[-2], params[-1]

    def arch_state(self):
        return {"arch": "resnet", "n_features": self.n_features,
                "width": self.width, "n_blocks": self.n_blocks}


def _loss_and_dout(out, y, task, n):
    """Mean loss over n rows and its gradient w.r.t. the raw output."""
    if task == "regression":
        diff = out - y
        return float(0.5 * np.mean(diff * diff)), diff / n
    s = 2.0 * y - 1.0
    loss = float(np.mean(np.logaddexp(0.0, -s * out)))
    return loss, (expit(out) - y) / n


def _grads_for(core, X, y, task):
    out, cache = core.forward(X)
    loss, dout = _loss_and_dout(out, y, task, X.shape[0])
    if isinstance(core, MlpCore):
        gw, gb = core.backward(cache, dout)
        return loss, gw + gb
    return loss, core.backward(cache, dout)


def flatten_params(params):
    return np.concatenate([p.ravel() for p in params])


def set_flat_params(core, flat):
    params = core.params()
    shaped = []
    pos = 0
    for p in params:
        shaped.append(flat[pos:pos + p.size].reshape(p.shape))
        pos += p.size
    core.set_params(shaped)


def loss_and_gradient(core, X, y, task):
    """Full-batch loss and flat analytic gradient (for FD verification)."""
    loss, grads = _grads_for(core, X, y, task)
    return loss, flatten_params(grads)


class NeuralNet:
    """Trainer wrapper shared by the MLP and ResNet learner kinds."""

    def __init__(self, *, arch, task, hidden=(128, 128), width=128, n_blocks=3,
                 batch_size=64, max_epochs=200, patience=20, learning_rate=1e-3,
                 holdout=0.1, seed=0):
        self.arch = arch
        self.task = task
        if isinstance(hidden, (int, np.integer)):
            hidden = (hidden,)
        self.hidden = tuple(int(h) for h in hidden)
        self.width = int(width)
        self.n_blocks = int(n_blocks)
        self.batch_size = int(batch_size)
        self.max_epochs = int(max_epochs)
        self.patience = int(patience)
        self.learning_rate = float(learning_rate)
        self.holdout = float(holdout)
        self.seed = int(seed)

    def _build_core(self, n_features, rng):
        if self.arch == "mlp":
            return MlpCore([n_features, *self.hidden, 1], rng)
        return ResNetCore(n_features, self.width, self.n_blocks, rng)

    def fit(self, X, y):
        n, p = X.shape
        if self.task == "regression":
            self.y_mean_ = float(np.mean(y))
            sd = float(np.std(y))
            self.y_std_ = sd if sd > 0 else 1.0
            y_fit = (y - self.y_mean_) / self.y_std_
        else:
            self.y_mean_, self.y_std_ = 0.0, 1.0
            y_fit = y.astype(float)

        core = self._build_core(p, np.random.default_rng([self.seed, 1]))
        holdout_rng = np.random.default_rng([self.seed, 2])
        batch_rng = np.random.default_rng([self.seed, 3])

        n_hold = min(max(1, int(round(self.holdout * n))), n - 1)
        perm = holdout_rng.permutation(n)
        hold_idx, train_idx = perm[:n_hold], perm[n_hold:]
        X_tr, y_tr = X[train_idx], y_fit[train_idx]
        X_ho, y_ho = X[hold_idx], y_fit[hold_idx]
        n_tr = X_tr.shape[0]
        batch = min(self.batch_size, n_tr)

        params = core.params()
        m_state = [np.zeros_like(p_) for p_ in params]
        v_state = [np.zeros_like(p_) for p_ in params]
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        step = 0

        def holdout_loss():
            out, _ = core.forward(X_ho)
            loss, _ = _loss_and_dout(out, y_ho, self.task, X_ho.shape[0])
            return loss

        best_loss = holdout_loss()
        best_params = [p_.copy() for p_ in core.params()]
        bad_epochs = 0
        for _ in range(self.max_epochs):
            order = batch_rng.permutation(n_tr)
            for start in range(0, n_tr, batch):
                rows = order[start:start + batch]
                _, grads = _grads_for(core, X_tr[rows], y_tr[rows], self.task)
                step += 1
                params = core.params()
                for k, g in enumerate(grads):
                    m_state[k] = beta1 * m_state[k] + (1 - beta1) * g
                    v_state[k] = beta2 * v_state[k] + (1 - beta2) * (g * g)
                    m_hat = m_state[k] / (1 - beta1 ** step)
                    v_hat = v_state[k] / (1 - beta2 ** step)
                    params[k] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
            loss = holdout_loss()
            if loss < best_loss:
                best_loss = loss
                best_params = [p_.copy() for p_ in core.params()]
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs > self.patience:
                    break
        core.set_params(best_params)
        self.core_ = core
        return self

    def _raw(self, X):
        out, _ = self.core_.forward(X)
        return out

    def predict(self, X):
        raw = self._raw(X)
        if self.task == "regression":
            return self.y_mean_ + self.y_std_ * raw
        return expit(raw)

    predict_proba = predict

    def to_state(self):
        return {
            "arch": self.arch, "task": self.task, "hidden": list(self.hidden),
            "width": self.width, "n_blocks": self.n_blocks,
            "batch_size": self.batch_size, "max_epochs": self.max_epochs,
            "patience": self.patience, "learning_rate": self.learning_rate,
            "holdout": self.holdout, "seed": self.seed,
            "y_mean": self.y_mean_, "y_std": self.y_std_,
            "core": self.core_.arch_state(),
            "params": [p.copy() for p in self.core_.params()],
        }

    @classmethod
    def from_state(cls, state):
        model = cls(arch=state["arch"], task=state["task"], hidden=state["hidden"],
                    width=state["width"], n_blocks=state["n_blocks"],
                    batch_size=state["batch_size"], max_epochs=state["max_epochs"],
                    patience=state["patience"], learning_rate=state["learning_rate"],
                    holdout=state["holdout"], seed=state["seed"])
        model.y_mean_ = state["y_mean"]
        model.y_std_ = state["y_std"]
        arch_state = state["core"]
        if arch_state["arch"] == "mlp":
            core = MlpCore(arch_state["layer_sizes"], rng=None)
        else:
            core = ResNetCore(arch_state["n_features"], arch_state["width"],
                              arch_state["n_blocks"], rng=None)
        core.set_params(state["params"])
        model.core_ = core
        return model
