"""Nested leave-one-subject-out evaluation and rank statistics.

The outer loop holds out one subject at a time; the inner loop scores
every grid spec by another leave-one-subject-out pass over the remaining
subjects, mirroring the outer objective (mean of per-subject RMSEs).
Standardizers are always fitted on the training side of the split in use,
so the held-out subject can never influence scaling or model selection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .data import Instance
from .errors import EmptyDatasetError, TrainingFailure, ValidationError
from .models import fit_model
from .models.specs import Standardizer

SCORE_RANGE = (5.0, 25.0)


# ---------------------------------------------------------------------------
# design matrices
# ---------------------------------------------------------------------------

def design_matrix(instances: Sequence[Instance], modality: str):
    """Stack instance features into (X, y, subjects, reps) arrays."""
    rows = []
    for inst in instances:
        if modality == "audio":
            vec = inst.audio
        elif modality == "video":
            vec = inst.video
        else:
            if inst.audio is None or inst.video is None:
                raise ValidationError(
                    f"instance ({inst.subject_id}, {inst.rep}) lacks a modality")
            vec = np.concatenate([inst.audio, inst.video])
        if vec is None:
            raise ValidationError(
                f"instance ({inst.subject_id}, {inst.rep}) lacks {modality} features")
        rows.append(vec)
    X = np.vstack(rows)
    y = np.array([inst.target for inst in instances])
    subjects = np.array([inst.subject_id for inst in instances])
    reps = np.array([inst.rep for inst in instances])
    return X, y, subjects, reps


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def subject_rmse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.size == 0:
        raise ValidationError("RMSE of an empty prediction set")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


@dataclass
class FoldResult:
    subject_id: str
    spec: object
    inner_score: float
    y_true: np.ndarray
    y_pred: np.ndarray
    reps: np.ndarray
    standardizer: Standardizer

    @property
    def rmse(self) -> float:
        return subject_rmse(self.y_true, self.y_pred)


@dataclass
class EvaluationReport:
    modality: str
    family: str
    per_subject_rmse: dict
    mrmse: float
    group_mrmse: dict
    group_cv: dict
    folds: list = field(default_factory=list)


def aggregate_metrics(folds: Sequence[FoldResult], groups: dict,
                      modality: str = "", family: str = "") -> EvaluationReport:
    """mRMSE overall and per group, plus per-group CV of the subject RMSEs.

    CV is sample SD over mean; a single-subject group reports NaN.
    """
    if not folds:
        raise EmptyDatasetError("no folds to aggregate")
    per_subject = {f.subject_id: f.rmse for f in folds}
    mrmse = float(np.mean(list(per_subject.values())))
    group_mrmse, group_cv = {}, {}
    for group in sorted(set(groups.values())):
        vals = np.array([r for s, r in per_subject.items() if groups[s] == group])
        if vals.size == 0:
            continue
        group_mrmse[group] = float(np.mean(vals))
        if vals.size > 1 and np.mean(vals) > 0:
            group_cv[group] = float(np.std(vals, ddof=1) / np.mean(vals))
        else:
            group_cv[group] = float("nan")
    return EvaluationReport(modality=modality, family=family,
                            per_subject_rmse=per_subject, mrmse=mrmse,
                            group_mrmse=group_mrmse, group_cv=group_cv,
                            folds=list(folds))


# ---------------------------------------------------------------------------
# nested LOSO
# ---------------------------------------------------------------------------

def _fold_seed(master_seed: int, fold_index: int, spec_index: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(fold_index), int(spec_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _clamp(pred: np.ndarray, clamp: bool) -> np.ndarray:
    if clamp:
        return np.clip(pred, SCORE_RANGE[0], SCORE_RANGE[1])
    return pred


def _run_fold(fold_index, held_out, X, y, subjects, reps, grid, master_seed, clamp):
    train_mask = subjects != held_out
    X_tr, y_tr, subj_tr = X[train_mask], y[train_mask], subjects[train_mask]
    inner_subjects = sorted(set(subj_tr))
    scores = []
    for spec_index, spec in enumerate(grid):
        seed = _fold_seed(master_seed, fold_index, spec_index)
        inner_rmses = []
        failed = False
        for inner_out in inner_subjects:
            mask = subj_tr != inner_out
            try:
                model = fit_model(spec, X_tr[mask], y_tr[mask], seed=seed)
            except TrainingFailure:
                failed = True
                break
            pred = _clamp(model.predict(X_tr[~mask]), clamp)
            inner_rmses.append(subject_rmse(y_tr[~mask], pred))
        scores.append(math.inf if failed else float(np.mean(inner_rmses)))
    best_index = int(np.argmin(scores))  # ties resolve to the earliest spec
    if not math.isfinite(scores[best_index]):
        raise TrainingFailure(
            f"every grid spec failed on fold for subject {held_out!r}")
    best_spec = grid[best_index]
    refit_seed = _fold_seed(master_seed, fold_index, len(grid) + best_index)
    model = fit_model(best_spec, X_tr, y_tr, seed=refit_seed)
    test_mask = ~train_mask
    pred = _clamp(model.predict(X[test_mask]), clamp)
    return FoldResult(subject_id=held_out, spec=best_spec,
                      inner_score=scores[best_index],
                      y_true=y[test_mask], y_pred=pred, reps=reps[test_mask],
                      standardizer=model.standardizer)


def nested_loso(instances: Sequence[Instance], modality: str, grid: Sequence,
                seed: int = 0, n_jobs: int = 1, clamp: bool = False) -> list:
    """One FoldResult per subject; inner LOSO grid search selects the spec.

    Results are bit-identical for any n_jobs because every training run
    derives its seed from (master seed, fold index, spec index) alone.
    """
    if not grid:
        raise ValidationError("empty hyperparameter grid")
    X, y, subjects, reps = design_matrix(instances, modality)
    held_out_order = sorted(set(subjects))
    if len(held_out_order) < 3:
        raise ValidationError(
            f"nested LOSO needs at least 3 subjects, got {len(held_out_order)}")
    grid = list(grid)
    if n_jobs == 1:
        return [_run_fold(i, s, X, y, subjects, reps, grid, seed, clamp)
                for i, s in enumerate(held_out_order)]
    return Parallel(n_jobs=n_jobs)(
        delayed(_run_fold)(i, s, X, y, subjects, reps, grid, seed, clamp)
        for i, s in enumerate(held_out_order))


# ---------------------------------------------------------------------------
# rank statistics
# ---------------------------------------------------------------------------

def _midranks(row: np.ndarray) -> np.ndarray:
    order = np.argsort(row, kind="stable")
    ranks = np.empty(len(row))
    i = 0
    while i < len(row):
        j = i
        while j + 1 < len(row) and row[order[j + 1]] == row[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def friedman_test(matrix) -> dict:
    """Friedman rank test over a complete blocks x treatments matrix.

    Mid-ranks within each block, tie-corrected chi-square statistic,
    df = treatments - 1.  When every block is fully tied the correction
    degenerates and the statistic is 0 by policy (p = 1).
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValidationError("friedman_test expects a 2-D matrix")
    n, k = matrix.shape
    if n < 2 or k < 2:
        raise ValidationError(f"need >= 2 blocks and >= 2 treatments, got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValidationError("friedman_test requires complete blocks (no missing cells)")
    ranks = np.vstack([_midranks(row) for row in matrix])
    rank_sums = ranks.sum(axis=0)
    chi2 = 12.0 / (n * k * (k + 1)) * float((rank_sums ** 2).sum()) - 3.0 * n * (k + 1)
    ties = 0.0
    for row in matrix:
        _, counts = np.unique(row, return_counts=True)
        ties += float((counts ** 3 - counts).sum())
    correction = 1.0 - ties / (n * k * (k * k - 1))
    chi2 = 0.0 if correction <= 0 else chi2 / correction
    df = k - 1
    return {"chi2": chi2, "df": df, "p": chi_square_sf(chi2, df)}


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail chi-square probability Q(df/2, x/2).

    Regularized upper incomplete gamma via the standard series /
    continued-fraction split, absolute error well under 1e-8.
    """
    if x < 0 or df < 1:
        raise ValidationError(f"need x >= 0 and df >= 1, got x={x}, df={df}")
    return _gammainc_upper(df / 2.0, x / 2.0)


def _gammainc_upper(a: float, x: float) -> float:
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        # lower series: P(a, x), then Q = 1 - P
        term = 1.0 / a
        total = term
        n = 1
        while abs(term) > abs(total) * 1e-17 and n < 10000:
            term *= x / (a + n)
            total += term
            n += 1
        log_p = math.log(total) - x + a * math.log(x) - math.lgamma(a)
        return max(0.0, min(1.0, 1.0 - math.exp(log_p)))
    # Lentz continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / max(b, tiny)
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = b + an / (c if abs(c) > tiny else tiny)
        if abs(c) < tiny:
            c = tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    log_q = math.log(h) - x + a * math.log(x) - math.lgamma(a)
    return max(0.0, min(1.0, math.exp(log_q)))
