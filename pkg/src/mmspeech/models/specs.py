"""Hyperparameter specs and the training-set standardizer."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..errors import ValidationError

KERNELS = ("linear", "rbf", "sigmoid")
ACTIVATIONS = ("identity", "logistic", "tanh", "relu")


@dataclass(frozen=True)
class SVRSpec:
    C: float
    epsilon: float
    kernel: str

    family = "svr"

    def __post_init__(self):
        if not self.C > 0:
            raise ValidationError(f"C must be positive, got {self.C}")
        if self.epsilon < 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.kernel not in KERNELS:
            raise ValidationError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")

    def fields(self) -> dict:
        return {"C": self.C, "epsilon": self.epsilon, "kernel": self.kernel}


@dataclass(frozen=True)
class MLPSpec:
    layer_sizes: tuple
    learning_rate: float
    activation: str

    family = "mlp"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if not self.layer_sizes or any(s < 1 for s in self.layer_sizes):
            raise ValidationError("layer_sizes must be non-empty positive integers")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(
                f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")

    def fields(self) -> dict:
        return {"layer_sizes": "x".join(map(str, self.layer_sizes)),
                "learning_rate": self.learning_rate, "activation": self.activation}


@dataclass(frozen=True)
class GBTSpec:
    n_estimators: int
    max_depth: int
    learning_rate: float
    subsample: float
    colsample_bytree: float

    family = "gbt"

    def __post_init__(self):
        if self.n_estimators < 0:
            raise ValidationError("n_estimators must be >= 0")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1")
        if not 0 < self.subsample <= 1 or not 0 < self.colsample_bytree <= 1:
            raise ValidationError("subsample and colsample_bytree must lie in (0, 1]")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be positive")

    def fields(self) -> dict:
        return {"n_estimators": self.n_estimators, "max_depth": self.max_depth,
                "learning_rate": self.learning_rate, "subsample": self.subsample,
                "colsample_bytree": self.colsample_bytree}


ModelSpec = Union[SVRSpec, MLPSpec, GBTSpec]


class Standardizer:
    """Per-column mean/SD transform fitted on a training matrix.

    Sample SD (ddof=1); zero-variance columns get SD 1 so they map to 0.
    """

    def __init__(self, mean: np.ndarray, sd: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.sd = np.asarray(sd, dtype=np.float64)

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValidationError("standardizer needs a non-empty 2-D matrix")
        mean = X.mean(axis=0)
        sd = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
        sd = np.where(sd > 0, sd, 1.0)
        return cls(mean, sd)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.mean):
            raise ValidationError(
                f"expected {len(self.mean)} columns, got {X.shape}")
        return (X - self.mean) / self.sd

    def __eq__(self, other):
        return (isinstance(other, Standardizer)
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.sd, other.sd))

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "sd": self.sd.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["mean"]), np.array(d["sd"]))


def fit_standardizer(X: np.ndarray) -> Standardizer:
    return Standardizer.fit(X)


def check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("X must be 2-D")
    if len(X) != len(y):
        raise ValidationError(f"X has {len(X)} rows but y has {len(y)}")
    if len(y) < 2:
        raise ValidationError("need at least 2 training rows")
    return X, y
