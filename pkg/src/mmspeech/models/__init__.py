"""Regression models: SVR (SMO), MLP (Adam), gradient-boosted trees."""
from __future__ import annotations

import json
from pathlib import Path

from ..errors import ValidationError
from .gbt import GBTModel, train_gbt
from .grids import enumerate_grid, smoke_grid
from .mlp import MLPModel, train_mlp
from .specs import (GBTSpec, MLPSpec, ModelSpec, Standardizer, SVRSpec,
                    fit_standardizer)
from .svr import SVRModel, train_svr

PERSIST_VERSION = 1

__all__ = [
    "SVRSpec", "MLPSpec", "GBTSpec", "ModelSpec", "Standardizer",
    "fit_standardizer", "train_svr", "train_mlp", "train_gbt", "fit_model",
    "SVRModel", "MLPModel", "GBTModel", "enumerate_grid", "smoke_grid",
    "save_model", "load_model", "spec_from_dict",
]


def fit_model(spec, X, y, seed: int = 0):
    """Train whichever family the spec belongs to; standardization is internal."""
    if isinstance(spec, SVRSpec):
        return train_svr(X, y, spec)
    if isinstance(spec, MLPSpec):
        return train_mlp(X, y, spec, seed=seed)
    if isinstance(spec, GBTSpec):
        return train_gbt(X, y, spec, seed=seed)
    raise ValidationError(f"unknown spec type {type(spec).__name__}")


def spec_from_dict(family: str, d: dict):
    family = family.lower()
    if family == "svr":
        return SVRSpec(**d)
    if family == "mlp":
        d = dict(d)
        d["layer_sizes"] = tuple(d["layer_sizes"])
        return MLPSpec(**d)
    if family == "gbt":
        return GBTSpec(**d)
    raise ValidationError(f"unknown model family {family!r}")


_MODEL_CLASSES = {"svr": SVRModel, "mlp": MLPModel, "gbt": GBTModel}


def save_model(model, path) -> None:
    """Versioned JSON dump of the fitted state, for reproducibility audits."""
    doc = {"version": PERSIST_VERSION}
    doc.update(model.to_dict())
    Path(path).write_text(json.dumps(doc) + "\n")


def load_model(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != PERSIST_VERSION:
        raise ValidationError(f"unsupported model dump version {doc.get('version')!r}")
    kind = doc.get("kind")
    if kind not in _MODEL_CLASSES:
        raise ValidationError(f"unknown model kind {kind!r}")
    return _MODEL_CLASSES[kind].from_dict(doc)
