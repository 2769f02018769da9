"""Report emission: feature tables, per-run CSVs and the scatter figure.

All writers format numbers deterministically so identical runs are
byte-identical.  Feature CSVs use shortest round-trip floats because they
are re-read for modeling; report CSVs use fixed decimals.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# feature tables
# ---------------------------------------------------------------------------

def write_feature_csv(path, table: dict, names: Sequence[str]) -> None:
    """`subject,rep,<names>` rows sorted by (subject, rep)."""
    lines = ["subject,rep," + ",".join(names)]
    for (sid, rep) in sorted(table):
        vec = table[(sid, rep)]
        cells = ["" if not math.isfinite(v) else _fmt(v) for v in vec]
        lines.append(f"{sid},{rep}," + ",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_feature_csv(path, names: Sequence[str]) -> dict:
    """Inverse of write_feature_csv; rows with empty cells are skipped."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValidationError(f"{path}: empty feature file")
    header = text[0].split(",")
    if header[:2] != ["subject", "rep"] or header[2:] != list(names):
        raise ValidationError(f"{path}: unexpected feature header")
    table = {}
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(names) + 2:
            raise ValidationError(f"{path}:{lineno}: wrong number of fields")
        if any(c == "" for c in cells[2:]):
            continue  # missing value: instance was excluded
        table[(cells[0], int(cells[1]))] = np.array([float(c) for c in cells[2:]])
    return table


# ---------------------------------------------------------------------------
# evaluation reports
# ---------------------------------------------------------------------------

def write_report_csv(path, report, groups: dict) -> None:
    """Per-subject rows: subject, group, n_reps, rmse, chosen-spec fields."""
    spec_fields = list(report.folds[0].spec.fields())
    lines = ["subject,group,n_reps,rmse," + ",".join(spec_fields)]
    for fold in sorted(report.folds, key=lambda f: f.subject_id):
        spec = fold.spec.fields()
        cells = [fold.subject_id, groups[fold.subject_id], str(len(fold.reps)),
                 f"{fold.rmse:.6f}"] + [str(spec[k]) for k in spec_fields]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary_csv(path, reports: Sequence) -> None:
    """One row per (modality, model): mrmse, group mrmse and group CV."""
    lines = ["modality,model,mrmse,mrmse_als,mrmse_hc,cv_als,cv_hc"]
    for rep in reports:
        def cell(d, key):
            v = d.get(key, float("nan"))
            return "" if not math.isfinite(v) else f"{v:.6f}"
        lines.append(",".join([
            rep.modality, rep.family, f"{rep.mrmse:.6f}",
            cell(rep.group_mrmse, "ALS"), cell(rep.group_mrmse, "HC"),
            cell(rep.group_cv, "ALS"), cell(rep.group_cv, "HC"),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_predictions_csv(path, folds) -> None:
    lines = ["subject,rep,y_true,y_pred"]
    for fold in sorted(folds, key=lambda f: f.subject_id):
        order = np.argsort(fold.reps)
        for i in order:
            lines.append(f"{fold.subject_id},{fold.reps[i]},"
                         f"{_fmt(fold.y_true[i])},{_fmt(fold.y_pred[i])}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_friedman_csv(path, result: dict, conditions: Sequence[str],
                       block_subjects: Sequence[str]) -> None:
    lines = ["chi2,df,p,n_conditions,n_block_subjects,conditions,block_subjects",
             ",".join([
                 f"{result['chi2']:.6f}", str(result["df"]), f"{result['p']:.6f}",
                 str(len(conditions)), str(len(block_subjects)),
                 ";".join(conditions), ";".join(block_subjects),
             ])]
    Path(path).write_text("\n".join(lines) + "\n")


def write_exclusions(path, exclusions) -> None:
    lines = [e.line() for e in exclusions]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


# ---------------------------------------------------------------------------
# scatter figure
# ---------------------------------------------------------------------------

GROUP_COLORS = {"ALS": "red", "HC": "blue"}
_SIZE = 480.0
_MARGIN = 56.0


def scatter_svg(predictions, groups: dict, path,
                score_range=(5.0, 25.0)) -> None:
    """True-vs-predicted scatter: one circle per repetition, identity line.

    `predictions` is a sequence of (subject, rep, y_true, y_pred).  ALS
    markers are red, HC blue.  The single <line> element is the identity.
    """
    predictions = list(predictions)
    if not predictions:
        raise ValidationError("scatter figure needs at least one prediction")
    lo, hi = score_range
    values = [v for _, _, t, p in predictions for v in (t, p)]
    lo = min(lo, min(values))
    hi = max(hi, max(values))
    pad = 0.04 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    span = hi - lo

    def sx(v):
        return _MARGIN + (v - lo) / span * (_SIZE - 2 * _MARGIN)

    def sy(v):
        return _SIZE - _MARGIN - (v - lo) / span * (_SIZE - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE:.0f}" '
        f'height="{_SIZE:.0f}" viewBox="0 0 {_SIZE:.0f} {_SIZE:.0f}">',
        f'<rect width="{_SIZE:.0f}" height="{_SIZE:.0f}" fill="white"/>',
        # axes
        f'<path d="M {sx(lo):.2f} {sy(lo):.2f} H {sx(hi):.2f} M {sx(lo):.2f} '
        f'{sy(lo):.2f} V {sy(hi):.2f}" stroke="black" fill="none"/>',
        # identity line
        f'<line x1="{sx(lo):.2f}" y1="{sy(lo):.2f}" x2="{sx(hi):.2f}" '
        f'y2="{sy(hi):.2f}" stroke="gray" stroke-dasharray="4 3"/>',
    ]
    tick = 5.0 * math.ceil(lo / 5.0)
    while tick <= hi:
        parts.append(f'<text x="{sx(tick):.2f}" y="{_SIZE - _MARGIN + 18:.2f}" '
                     f'font-size="11" text-anchor="middle">{tick:g}</text>')
        parts.append(f'<text x="{_MARGIN - 8:.2f}" y="{sy(tick) + 4:.2f}" '
                     f'font-size="11" text-anchor="end">{tick:g}</text>')
        tick += 5.0
    parts.append(f'<text x="{_SIZE / 2:.2f}" y="{_SIZE - 12:.2f}" font-size="13" '
                 f'text-anchor="middle">clinician score (5-25)</text>')
    parts.append(f'<text x="14" y="{_SIZE / 2:.2f}" font-size="13" '
                 f'text-anchor="middle" transform="rotate(-90 14 {_SIZE / 2:.2f})">'
                 f'predicted score (5-25)</text>')
    for sid, rep, y_true, y_pred in predictions:
        color = GROUP_COLORS.get(groups.get(sid, ""), "black")
        parts.append(f'<circle cx="{sx(y_true):.2f}" cy="{sy(y_pred):.2f}" r="3" '
                     f'fill="{color}" fill-opacity="0.65"><title>{sid} rep {rep}'
                     f'</title></circle>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
