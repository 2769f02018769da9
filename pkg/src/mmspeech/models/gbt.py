"""Gradient-boosted regression trees, squared error, exact greedy splits.

Second-order formulation with hessian 1 per row: leaf weight -G/(H + lambda)
with lambda = 1, split gain from the usual left/right/parent score
difference, minimum split gain 0, minimum 1 sample per leaf.  Row and
column subsampling are drawn deterministically from the training seed.
"""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .specs import GBTSpec, Standardizer, check_xy

LAMBDA = 1.0


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "weight")

    def __init__(self, weight=None, feature=None, threshold=None,
                 left=None, right=None):
        self.weight = weight
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right

    def predict_one(self, x):
        node = self
        while node.weight is None:
            node = node.left if x[node.feature] < node.threshold else node.right
        return node.weight

    def to_dict(self):
        if self.weight is not None:
            return {"w": self.weight}
        return {"f": int(self.feature), "t": float(self.threshold),
                "l": self.left.to_dict(), "r": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d):
        if "w" in d:
            return cls(weight=d["w"])
        return cls(feature=d["f"], threshold=d["t"],
                   left=cls.from_dict(d["l"]), right=cls.from_dict(d["r"]))


def _best_split(X, g, rows, features):
    """Exact greedy split search; ties go to the lowest feature index,
    then the lowest threshold."""
    H_total = float(len(rows)) + LAMBDA
    G_total = float(g[rows].sum())
    parent_score = G_total ** 2 / H_total
    best_gain = 0.0
    best = None
    for f in features:
        vals = X[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sg = g[rows][order]
        csum = np.cumsum(sg)
        n = len(rows)
        # candidate cut after position i when value changes
        for i in range(n - 1):
            if sv[i + 1] <= sv[i]:
                continue
            GL = csum[i]
            HL = i + 1.0 + LAMBDA
            GR = G_total - GL
            HR = n - i - 1.0 + LAMBDA
            gain = GL ** 2 / HL + GR ** 2 / HR - parent_score
            if gain > best_gain + 1e-12:
                thr = 0.5 * (sv[i] + sv[i + 1])
                best_gain = gain
                best = (f, thr, order[:i + 1], order[i + 1:])
    return best


def _build_tree(X, g, rows, features, depth, max_depth):
    G = float(g[rows].sum())
    H = float(len(rows)) + LAMBDA
    if depth >= max_depth or len(rows) < 2:
        return _Node(weight=-G / H)
    split = _best_split(X, g, rows, features)
    if split is None:
        return _Node(weight=-G / H)
    f, thr, left_local, right_local = split
    return _Node(feature=f, threshold=thr,
                 left=_build_tree(X, g, rows[left_local], features,
                                  depth + 1, max_depth),
                 right=_build_tree(X, g, rows[right_local], features,
                                   depth + 1, max_depth))


class GBTModel:
    def __init__(self, spec: GBTSpec, standardizer: Standardizer,
                 base_score: float, trees: list):
        self.spec = spec
        self.standardizer = standardizer
        self.base_score = base_score
        self.trees = trees

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.standardizer.mean):
            raise ValidationError(
                f"expected {len(self.standardizer.mean)} columns, got {X.shape}")
        if len(X) == 0:
            return np.zeros(0)
        Z = self.standardizer.apply(X)
        pred = np.full(len(Z), self.base_score)
        for tree in self.trees:
            pred += self.spec.learning_rate * np.array(
                [tree.predict_one(z) for z in Z])
        return pred

    def to_dict(self) -> dict:
        return {
            "kind": "gbt",
            "spec": self.spec.fields(),
            "standardizer": self.standardizer.to_dict(),
            "base_score": self.base_score,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GBTModel":
        return cls(spec=GBTSpec(**d["spec"]),
                   standardizer=Standardizer.from_dict(d["standardizer"]),
                   base_score=d["base_score"],
                   trees=[_Node.from_dict(t) for t in d["trees"]])


def train_gbt(X, y, spec: GBTSpec, seed: int = 0) -> GBTModel:
    """Boosted trees on the squared-error gradient; deterministic in seed."""
    X, y = check_xy(X, y)
    standardizer = Standardizer.fit(X)
    Z = standardizer.apply(X)
    rng = np.random.default_rng(seed)
    n, d = Z.shape
    base = float(np.mean(y))
    pred = np.full(n, base)
    trees = []
    for _ in range(spec.n_estimators):
        n_rows = max(1, int(round(spec.subsample * n)))
        n_cols = max(1, int(round(spec.colsample_bytree * d)))
        rows = np.sort(rng.choice(n, size=n_rows, replace=False))
        features = np.sort(rng.choice(d, size=n_cols, replace=False))
        g = pred - y  # gradient of 0.5 * (pred - y)^2
        tree = _build_tree(Z, g, rows, features, 0, spec.max_depth)
        trees.append(tree)
        pred += spec.learning_rate * np.array([tree.predict_one(z) for z in Z])
    return GBTModel(spec=spec, standardizer=standardizer, base_score=base,
                    trees=trees)
