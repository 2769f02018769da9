"""Fully-connected regression network trained with Adam.

Hidden layers take the configured activation, the output is linear, and
the loss is mean squared error.  All randomness (init, batch shuffling)
comes from the caller's seed, so fits are bit-reproducible.
"""
from __future__ import annotations

import numpy as np

from ..errors import TrainingFailure, ValidationError
from .specs import MLPSpec, Standardizer, check_xy

BATCH_SIZE = 32
EPOCHS = 300
BETA1 = 0.9
BETA2 = 0.999
ADAM_EPS = 1e-8


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "logistic":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)  # relu


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation at pre-activation z (a = act(z))."""
    if name == "identity":
        return np.ones_like(z)
    if name == "logistic":
        return a * (1.0 - a)
    if name == "tanh":
        return 1.0 - a ** 2
    return (z > 0.0).astype(z.dtype)  # relu


def init_params(layer_sizes, n_features: int, rng: np.random.Generator) -> list:
    """Uniform fan-in-scaled weights, zero biases, one (W, b) pair per layer."""
    sizes = [n_features, *layer_sizes, 1]
    params = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params.append([W, np.zeros(fan_out)])
    return params


def forward(params, activation: str, X: np.ndarray):
    """Returns (prediction vector, per-layer (z, a) cache)."""
    a = X
    cache = []
    last = len(params) - 1
    for i, (W, b) in enumerate(params):
        z = a @ W + b
        a = z if i == last else _act(activation, z)
        cache.append((z, a))
    return a[:, 0], cache


def loss_and_grads(params, activation: str, X: np.ndarray, y: np.ndarray):
    """MSE loss and its gradient for every weight and bias."""
    pred, cache = forward(params, activation, X)
    resid = pred - y
    n = len(y)
    loss = float(np.mean(resid ** 2))
    grads = [None] * len(params)
    delta = (2.0 / n) * resid[:, None]  # dL/dz at the linear output
    for i in range(len(params) - 1, -1, -1):
        a_prev = X if i == 0 else cache[i - 1][1]
        grads[i] = [a_prev.T @ delta, delta.sum(axis=0)]
        if i > 0:
            z_prev, a_prev_act = cache[i - 1]
            delta = (delta @ params[i][0].T) * _act_grad(activation, z_prev, a_prev_act)
    return loss, grads


class MLPModel:
    def __init__(self, spec: MLPSpec, standardizer: Standardizer, params: list):
        self.spec = spec
        self.standardizer = standardizer
        self.params = params

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.standardizer.mean):
            raise ValidationError(
                f"expected {len(self.standardizer.mean)} columns, got {X.shape}")
        if len(X) == 0:
            return np.zeros(0)
        pred, _ = forward(self.params, self.spec.activation, self.standardizer.apply(X))
        return pred

    def to_dict(self) -> dict:
        return {
            "kind": "mlp",
            "spec": {"layer_sizes": list(self.spec.layer_sizes),
                     "learning_rate": self.spec.learning_rate,
                     "activation": self.spec.activation},
            "standardizer": self.standardizer.to_dict(),
            "params": [[W.tolist(), b.tolist()] for W, b in self.params],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLPModel":
        spec = MLPSpec(layer_sizes=tuple(d["spec"]["layer_sizes"]),
                       learning_rate=d["spec"]["learning_rate"],
                       activation=d["spec"]["activation"])
        params = [[np.array(W, dtype=np.float64), np.array(b, dtype=np.float64)]
                  for W, b in d["params"]]
        return cls(spec=spec, standardizer=Standardizer.from_dict(d["standardizer"]),
                   params=params)


def train_mlp(X, y, spec: MLPSpec, seed: int = 0, epochs: int = EPOCHS,
              batch_size: int = BATCH_SIZE) -> MLPModel:
    """Adam-trained MLP; raises TrainingFailure when the loss goes non-finite."""
    X, y = check_xy(X, y)
    standardizer = Standardizer.fit(X)
    Z = standardizer.apply(X)
    rng = np.random.default_rng(seed)
    params = init_params(spec.layer_sizes, Z.shape[1], rng)
    mom = [[np.zeros_like(W), np.zeros_like(b)] for W, b in params]
    vel = [[np.zeros_like(W), np.zeros_like(b)] for W, b in params]
    n = len(y)
    step = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            idx = order[lo:lo + batch_size]
            loss, grads = loss_and_grads(params, spec.activation, Z[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingFailure(
                    f"MLP loss diverged (spec {spec.fields()}, step {step})")
            step += 1
            c1 = 1.0 - BETA1 ** step
            c2 = 1.0 - BETA2 ** step
            for p, m, v, g in zip(params, mom, vel, grads):
                for k in range(2):
                    m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k]
                    v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] ** 2
                    p[k] = p[k] - spec.learning_rate * (m[k] / c1) / (
                        np.sqrt(v[k] / c2) + ADAM_EPS)
    return MLPModel(spec=spec, standardizer=standardizer, params=params)
