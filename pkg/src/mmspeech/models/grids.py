"""Hyperparameter grid enumeration.

Grids are full Cartesian products of the published value lists, iterated
with the first-listed parameter outermost so enumeration order is stable.
"""
from __future__ import annotations

from itertools import product

from ..errors import ValidationError
from .specs import GBTSpec, MLPSpec, SVRSpec

SVR_C = (1e-1, 1.0, 10.0, 1e2, 1e3, 1e4)
SVR_EPSILON = (0.01, 0.1, 0.5, 1.0)
SVR_KERNELS = ("linear", "rbf", "sigmoid")

MLP_LAYERS = (
    (10, 50), (10, 30, 100), (10, 50, 100), (10, 50, 200),
    (10, 100, 100), (10, 100, 200), (50, 10), (100, 30, 10),
    (100, 50, 10), (200, 50, 10), (100, 100, 10), (200, 100, 10),
)
MLP_LEARNING_RATES = (0.0001, 0.001, 0.01)
MLP_ACTIVATIONS = ("identity", "logistic", "tanh", "relu")

GBT_N_ESTIMATORS = (2, 3, 4, 5)
GBT_MAX_DEPTH = (3, 4, 5, 6, 8)
GBT_LEARNING_RATES = (0.001, 0.05, 0.01, 0.1, 0.15, 0.3)
GBT_SUBSAMPLE = (0.1, 0.3, 0.5, 0.7, 1.0)
GBT_COLSAMPLE = (0.1, 0.3, 0.5, 0.7, 1.0)


def enumerate_grid(family: str) -> list:
    """Full published grid for one model family, in deterministic order."""
    family = family.lower()
    if family == "svr":
        return [SVRSpec(C=c, epsilon=e, kernel=k)
                for c, e, k in product(SVR_C, SVR_EPSILON, SVR_KERNELS)]
    if family == "mlp":
        return [MLPSpec(layer_sizes=ls, learning_rate=lr, activation=act)
                for ls, lr, act in product(MLP_LAYERS, MLP_LEARNING_RATES,
                                           MLP_ACTIVATIONS)]
    if family == "gbt":
        return [GBTSpec(n_estimators=n, max_depth=d, learning_rate=lr,
                        subsample=ss, colsample_bytree=cs)
                for n, d, lr, ss, cs in product(GBT_N_ESTIMATORS, GBT_MAX_DEPTH,
                                                GBT_LEARNING_RATES, GBT_SUBSAMPLE,
                                                GBT_COLSAMPLE)]
    raise ValidationError(f"unknown model family {family!r}")


def smoke_grid(family: str) -> list:
    """Small grids for smoke tests and quick runs."""
    family = family.lower()
    if family == "svr":
        return [SVRSpec(C=c, epsilon=0.1, kernel=k)
                for c, k in product((1.0, 10.0, 100.0, 1000.0), ("linear", "rbf"))]
    if family == "mlp":
        return [MLPSpec(layer_sizes=ls, learning_rate=0.01, activation=act)
                for ls, act in product(((10, 50), (50, 10)), ("relu", "tanh"))]
    if family == "gbt":
        return [GBTSpec(n_estimators=n, max_depth=d, learning_rate=0.3,
                        subsample=1.0, colsample_bytree=1.0)
                for n, d in product((2, 5), (3, 6))]
    raise ValidationError(f"unknown model family {family!r}")
