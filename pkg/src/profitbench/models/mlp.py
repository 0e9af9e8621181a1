"""Single-hidden-layer perceptron trained on squared error.

tanh hidden units, linear output, Adam updates over shuffled minibatches
with a fixed epoch budget. All randomness (initialization and shuffling)
comes from one seeded generator, so refits are bitwise identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TooFewRows

EPOCHS = 300
BATCH = 16
LR = 0.01


def init_params(n_inputs: int, hidden: int, rng: np.random.Generator) -> np.ndarray:
    """Flat parameter vector with small random symmetry-breaking weights."""
    w1 = rng.normal(0.0, 1.0 / np.sqrt(n_inputs), size=(hidden, n_inputs))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=hidden)
    b2 = np.zeros(1)
    return np.concatenate([w1.ravel(), b1, w2, b2])


def _unpack(params: np.ndarray, n_inputs: int, hidden: int):
    i = hidden * n_inputs
    w1 = params[:i].reshape(hidden, n_inputs)
    b1 = params[i : i + hidden]
    w2 = params[i + hidden : i + 2 * hidden]
    b2 = params[i + 2 * hidden]
    return w1, b1, w2, b2


def forward(params: np.ndarray, X: np.ndarray, n_inputs: int, hidden: int) -> np.ndarray:
    w1, b1, w2, b2 = _unpack(params, n_inputs, hidden)
    a = np.tanh(X @ w1.T + b1)
    return a @ w2 + b2


def loss(params: np.ndarray, X: np.ndarray, y: np.ndarray, n_inputs: int, hidden: int) -> float:
    r = forward(params, X, n_inputs, hidden) - y
    return float(np.mean(r * r))


def gradient(params: np.ndarray, X: np.ndarray, y: np.ndarray, n_inputs: int, hidden: int) -> np.ndarray:
    """Analytic gradient of the mean squared error, flattened like params."""
    w1, b1, w2, _ = _unpack(params, n_inputs, hidden)
    z = X @ w1.T + b1
    a = np.tanh(z)
    r = a @ w2 + _unpack(params, n_inputs, hidden)[3] - y
    dpred = 2.0 * r / len(y)
    dw2 = a.T @ dpred
    db2 = dpred.sum()
    dz = np.outer(dpred, w2) * (1.0 - a * a)
    dw1 = dz.T @ X
    db1 = dz.sum(axis=0)
    return np.concatenate([dw1.ravel(), db1, dw2, [db2]])


@dataclass
class MlpPredictor:
    params: np.ndarray
    n_inputs: int
    hidden: int
    train_mse: float

    def predict(self, query: np.ndarray) -> float:
        return float(forward(self.params, query[None, :], self.n_inputs, self.hidden)[0])


def mlp_fit(
    X: np.ndarray,
    targets: np.ndarray,
    hidden: int,
    seed: int,
    epochs: int = EPOCHS,
    batch: int = BATCH,
    lr: float = LR,
) -> MlpPredictor:
    X = np.asarray(X, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n, n_inputs = X.shape
    if n < 10:
        raise TooFewRows(f"MLP needs at least 10 rows, got {n}")
    rng = np.random.default_rng(seed)
    params = init_params(n_inputs, hidden, rng)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    batch = min(batch, n)
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch):
            idx = perm[start : start + batch]
            g = gradient(params, X[idx], targets[idx], n_inputs, hidden)
            step += 1
            m = beta1 * m + (1 - beta1) * g
            v = beta2 * v + (1 - beta2) * g * g
            m_hat = m / (1 - beta1**step)
            v_hat = v / (1 - beta2**step)
            params = params - lr * m_hat / (np.sqrt(v_hat) + eps)
    return MlpPredictor(
        params=params,
        n_inputs=n_inputs,
        hidden=hidden,
        train_mse=loss(params, X, targets, n_inputs, hidden),
    )
