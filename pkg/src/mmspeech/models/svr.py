"""Epsilon-insensitive support vector regression trained by SMO.

The dual is solved with working-set SMO over the 2n box variables
(alpha, alpha*): the first index is the maximal KKT violator, the second
maximizes the second-order objective decrease.  Convergence is declared
when the violation m - M drops to the tolerance; the bias is then the
midpoint (m + M) / 2.  The hot loop is numba-compiled when available.
"""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .specs import Standardizer, SVRSpec, check_xy

DEFAULT_TOL = 1e-3


def _gamma_scale(X: np.ndarray) -> float:
    d = X.shape[1]
    var = float(X.var())
    return 1.0 / (d * var) if var > 0 else 1.0 / d


def kernel_matrix(kind: str, A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    if kind == "linear":
        return A @ B.T
    if kind == "rbf":
        sq = (np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :]
              - 2.0 * (A @ B.T))
        return np.exp(-gamma * np.maximum(sq, 0.0))
    if kind == "sigmoid":
        return np.tanh(gamma * (A @ B.T))
    raise ValidationError(f"unknown kernel {kind!r}")


_STALL_WINDOW = 8192


def _smo_core(K, y, C, eps, tol, max_iter):
    """Sequential minimal optimization over (alpha, alpha*).

    Each iteration runs one fused O(n) pass that applies the previous
    rank-one gradient update and selects the maximal KKT violator, then a
    second pass that picks its partner by largest second-order objective
    decrease.  A no-progress guard stops early when the KKT gap has not
    improved over a long window (pathological flat-valley cases where even
    the 10 n^2 cap would be burned without converging).

    Returns (alpha, alpha_star, m, M, n_iter).  Written to be numba-njit
    compatible; the module compiles it when numba is installed.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    alpha_star = np.zeros(n)
    diagK = np.empty(n)
    for t in range(n):
        diagK[t] = K[t, t]
    f0 = np.zeros(n)   # K @ (alpha - alpha*), maintained incrementally
    fa = np.zeros(n)   # y - f0 - eps, refreshed each pass
    lam = 0.0
    p = 0
    q = 0
    it = 0
    m = -1e300
    M = 1e300
    prev_best = 1e300
    cur_best = 1e300
    while True:
        # pass 1: apply pending update, refresh fa, find the maximal violator
        Kp = K[p]
        Kq = K[q]
        m = -1e300
        M = 1e300
        np_ = -1
        np_in_a = True
        for t in range(n):
            f0t = f0[t] + lam * (Kp[t] - Kq[t])
            f0[t] = f0t
            ft = y[t] - f0t - eps
            fa[t] = ft
            fs = ft + 2.0 * eps
            if alpha[t] < C and ft > m:
                m = ft
                np_ = t
                np_in_a = True
            if alpha_star[t] > 0.0 and fs > m:
                m = fs
                np_ = t
                np_in_a = False
            if alpha[t] > 0.0 and ft < M:
                M = ft
            if alpha_star[t] < C and fs < M:
                M = fs
        gap = m - M
        if gap <= tol or np_ < 0 or it >= max_iter:
            break
        if gap < cur_best:
            cur_best = gap
        if it % _STALL_WINDOW == 0 and it > 0:
            if cur_best > 0.8 * prev_best:
                break  # no meaningful progress in a whole window
            prev_best = cur_best
            cur_best = 1e300
        it += 1
        p = np_
        p_in_a = np_in_a
        # pass 2: second-order partner selection among violators
        Kp = K[p]
        Kpp = diagK[p]
        best = -1.0
        fq = M
        q = -1
        q_in_a = True
        for t in range(n):
            if t == p:
                continue
            ft = fa[t]
            fs = ft + 2.0 * eps
            if alpha[t] > 0.0 and ft < m:
                b = m - ft
                a = Kpp + diagK[t] - 2.0 * Kp[t]
                if a < 1e-12:
                    a = 1e-12
                v = b * b / a
                if v > best:
                    best = v
                    q = t
                    q_in_a = True
                    fq = ft
            if alpha_star[t] < C and fs < m:
                b = m - fs
                a = Kpp + diagK[t] - 2.0 * Kp[t]
                if a < 1e-12:
                    a = 1e-12
                v = b * b / a
                if v > best:
                    best = v
                    q = t
                    q_in_a = False
                    fq = fs
        if q < 0:
            break
        eta = Kpp + diagK[q] - 2.0 * Kp[q]
        if eta < 1e-12:
            eta = 1e-12
        lam = (m - fq) / eta
        head_p = (C - alpha[p]) if p_in_a else alpha_star[p]
        head_q = alpha[q] if q_in_a else (C - alpha_star[q])
        if head_p < lam:
            lam = head_p
        if head_q < lam:
            lam = head_q
        if lam <= 0.0:
            break
        if p_in_a:
            alpha[p] += lam
        else:
            alpha_star[p] -= lam
        if q_in_a:
            alpha[q] -= lam
        else:
            alpha_star[q] += lam
    return alpha, alpha_star, m, M, it


try:  # pragma: no cover - exercised implicitly everywhere
    from numba import njit

    _smo_core = njit(cache=True)(_smo_core)
except ImportError:  # pragma: no cover
    pass


class SVRModel:
    """Fitted SVR with its spec and training standardizer."""

    def __init__(self, spec: SVRSpec, standardizer: Standardizer, gamma: float,
                 support_X: np.ndarray, dual_coef: np.ndarray, bias: float,
                 n_iter: int = 0):
        self.spec = spec
        self.standardizer = standardizer
        self.gamma = gamma
        self.support_X = support_X
        self.dual_coef = dual_coef
        self.bias = bias
        self.n_iter = n_iter

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.standardizer.mean):
            raise ValidationError(
                f"expected {len(self.standardizer.mean)} columns, got {X.shape}")
        if len(X) == 0:
            return np.zeros(0)
        Z = self.standardizer.apply(X)
        if len(self.support_X) == 0:
            return np.full(len(Z), self.bias)
        K = kernel_matrix(self.spec.kernel, Z, self.support_X, self.gamma)
        return K @ self.dual_coef + self.bias

    def to_dict(self) -> dict:
        return {
            "kind": "svr",
            "spec": self.spec.fields(),
            "standardizer": self.standardizer.to_dict(),
            "gamma": self.gamma,
            "support_X": self.support_X.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SVRModel":
        return cls(spec=SVRSpec(**d["spec"]),
                   standardizer=Standardizer.from_dict(d["standardizer"]),
                   gamma=d["gamma"],
                   support_X=np.array(d["support_X"], dtype=np.float64).reshape(
                       -1, len(d["standardizer"]["mean"])),
                   dual_coef=np.array(d["dual_coef"], dtype=np.float64),
                   bias=d["bias"])


def train_svr(X, y, spec: SVRSpec, tol: float = DEFAULT_TOL,
              max_iter_factor: int = 10) -> SVRModel:
    """Fit epsilon-SVR; stops at KKT violation <= tol or 10 n^2 iterations."""
    X, y = check_xy(X, y)
    standardizer = Standardizer.fit(X)
    Z = standardizer.apply(X)
    gamma = _gamma_scale(Z)
    K = kernel_matrix(spec.kernel, Z, Z, gamma)
    alpha, alpha_star, m, M, n_iter = _smo_core(
        np.ascontiguousarray(K), y, float(spec.C), float(spec.epsilon),
        float(tol), max_iter_factor * len(y) ** 2)
    beta = alpha - alpha_star
    bias = (m + M) / 2.0
    sv = np.abs(beta) > 0
    return SVRModel(spec=spec, standardizer=standardizer, gamma=gamma,
                    support_X=Z[sv], dual_coef=beta[sv], bias=float(bias),
                    n_iter=n_iter)
