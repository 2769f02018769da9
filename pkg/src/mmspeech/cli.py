"""Command-line entry points.

Exit codes: 0 success, 1 validation/data errors, 2 I/O errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .audio import AUDIO_FEATURE_NAMES
from .config import load_config
from .data import load_manifest, reconcile_instances, resolve
from .errors import ValidationError
from .evaluate import aggregate_metrics, friedman_test, nested_loso
from .models import enumerate_grid, smoke_grid
from .pipeline import extract_features, multimodal_exclusions
from .report import (read_feature_csv, scatter_svg, write_exclusions,
                     write_feature_csv, write_friedman_csv,
                     write_predictions_csv, write_report_csv, write_summary_csv)
from .synth import CohortParams, synth_cohort
from .video import VIDEO_FEATURE_NAMES


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmspeech",
        description="Audio-visual sentence-repetition analysis and score regression")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--manifest", help="dataset manifest JSON")
        p.add_argument("--out", dest="out_dir", help="output directory")
        p.add_argument("--seed", type=int, help="master seed")

    p = sub.add_parser("features", help="extract feature CSVs")
    common(p)

    p = sub.add_parser("evaluate", help="nested LOSO evaluation and reports")
    common(p)
    p.add_argument("--modality", choices=["audio", "video", "multimodal", "all"])
    p.add_argument("--model", choices=["svr", "mlp", "gbt", "all"])
    p.add_argument("--grid", choices=["full", "smoke"])
    p.add_argument("--jobs", type=int, help="parallel workers for outer folds")
    p.add_argument("--clamp-predictions", action="store_true", default=None,
                   dest="clamp_predictions")

    p = sub.add_parser("stats", help="Friedman test over written reports")
    common(p)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    common(p)
    p.add_argument("--subjects", type=int, help="number of subjects")
    p.add_argument("--reps", type=int, help="repetitions per subject")

    p = sub.add_parser("validate", help="check a manifest and its files")
    common(p)
    return parser


def _features_io(cfg, out: Path):
    """Load feature tables from the out dir, or extract and write them."""
    audio_csv = out / "features_audio.csv"
    video_csv = out / "features_video.csv"
    exclusions_log = out / "exclusions.log"
    if audio_csv.exists() and video_csv.exists():
        audio = read_feature_csv(audio_csv, AUDIO_FEATURE_NAMES)
        video = read_feature_csv(video_csv, VIDEO_FEATURE_NAMES)
        prior = []
        if exclusions_log.exists():
            prior = [line for line in exclusions_log.read_text().splitlines()
                     if line and not line.startswith("multimodal\t")]
        return audio, video, prior
    if cfg.manifest is None:
        raise ValidationError("--manifest is required when feature CSVs are absent")
    manifest = load_manifest(cfg.manifest)
    tables = extract_features(manifest, cfg.dsp)
    out.mkdir(parents=True, exist_ok=True)
    write_feature_csv(audio_csv, tables.audio, AUDIO_FEATURE_NAMES)
    write_feature_csv(video_csv, tables.video, VIDEO_FEATURE_NAMES)
    return tables.audio, tables.video, [e.line() for e in tables.exclusions]


def cmd_features(cfg) -> int:
    if cfg.manifest is None:
        raise ValidationError("features requires --manifest")
    manifest = load_manifest(cfg.manifest)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = extract_features(manifest, cfg.dsp)
    write_feature_csv(out / "features_audio.csv", tables.audio, AUDIO_FEATURE_NAMES)
    write_feature_csv(out / "features_video.csv", tables.video, VIDEO_FEATURE_NAMES)
    write_exclusions(out / "exclusions.log", tables.exclusions)
    print(f"audio instances: {len(tables.audio)}  video instances: {len(tables.video)}"
          f"  exclusions: {len(tables.exclusions)}")
    return 0


def cmd_evaluate(cfg) -> int:
    if cfg.manifest is None:
        raise ValidationError("evaluate requires --manifest")
    manifest = load_manifest(cfg.manifest)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    audio, video, exclusion_lines = _features_io(cfg, out)
    groups = manifest.groups
    targets = manifest.targets

    reports = []
    best = None
    for modality in cfg.modalities:
        instances = reconcile_instances(audio, video, targets, modality)
        subjects = {i.subject_id for i in instances}
        if len(subjects) < 3:
            raise ValidationError(
                f"modality {modality!r}: only {len(subjects)} subjects after "
                "reconciliation; need at least 3")
        if modality == "multimodal":
            exclusion_lines += [e.line() for e in multimodal_exclusions(audio, video)]
        for family in cfg.families:
            grid = enumerate_grid(family) if cfg.grid == "full" else smoke_grid(family)
            folds = nested_loso(instances, modality, grid, seed=cfg.seed,
                                n_jobs=cfg.jobs, clamp=cfg.clamp_predictions)
            report = aggregate_metrics(folds, groups, modality, family)
            reports.append(report)
            write_report_csv(out / f"report_{modality}_{family}.csv", report, groups)
            write_predictions_csv(out / f"predictions_{modality}_{family}.csv", folds)
            if best is None or report.mrmse < best.mrmse:
                best = report
            print(f"{modality}/{family}: mRMSE {report.mrmse:.4f}")
    write_summary_csv(out / "summary.csv", reports)
    preds = [(f.subject_id, int(r), float(t), float(p))
             for f in sorted(best.folds, key=lambda f: f.subject_id)
             for r, t, p in zip(f.reps, f.y_true, f.y_pred)]
    write_predictions_csv(out / "predictions.csv", best.folds)
    scatter_svg(preds, groups, out / "figure_scatter.svg")
    (out / "exclusions.log").write_text(
        "\n".join(exclusion_lines) + ("\n" if exclusion_lines else ""))
    print(f"summary: {out / 'summary.csv'}  best: {best.modality}/{best.family}")
    return 0


def cmd_stats(cfg) -> int:
    out = Path(cfg.out_dir)
    report_files = sorted(out.glob("report_*.csv"))
    if len(report_files) < 2:
        raise ValidationError(
            f"stats needs at least 2 report files in {out}, found {len(report_files)}")
    conditions = []
    per_condition = {}
    for path in report_files:
        name = path.stem[len("report_"):]
        rows = path.read_text().splitlines()
        header = rows[0].split(",")
        si, ri = header.index("subject"), header.index("rmse")
        rmses = {}
        for row in rows[1:]:
            cells = row.split(",")
            rmses[cells[si]] = float(cells[ri])
        conditions.append(name)
        per_condition[name] = rmses
    common = sorted(set.intersection(*[set(per_condition[c]) for c in conditions]))
    if not common:
        raise ValidationError("no subjects common to all conditions")
    matrix = [[per_condition[c][s] for c in conditions] for s in common]
    result = friedman_test(matrix)
    write_friedman_csv(out / "friedman.csv", result, conditions, common)
    print(f"chi2 {result['chi2']:.4f}  df {result['df']}  p {result['p']:.4f}  "
          f"blocks {len(common)}")
    return 0


def cmd_synth(cfg, subjects=None, reps=None) -> int:
    overrides = dict(cfg.synth)
    if subjects is not None:
        overrides["n_subjects"] = subjects
    if reps is not None:
        overrides["reps_per_subject"] = reps
    overrides["seed"] = cfg.seed
    params = CohortParams.from_dict({**CohortParams().to_dict(), **overrides})
    manifest = synth_cohort(params, cfg.out_dir)
    print(manifest)
    return 0


def cmd_validate(cfg) -> int:
    if cfg.manifest is None:
        raise ValidationError("validate requires --manifest")
    manifest = load_manifest(cfg.manifest)
    from .data import load_annotations, load_audio, load_landmarks, load_transcripts
    problems = 0
    for subject in manifest.subjects:
        for rec in subject.recordings:
            for key, loader in (("annotations_csv", load_annotations),
                                ("transcripts_txt", load_transcripts)):
                p = resolve(manifest, getattr(rec, key))
                if p is not None:
                    loader(p)
            p = resolve(manifest, rec.audio_wav)
            if p is not None:
                load_audio(p)
            p = resolve(manifest, rec.landmarks_csv)
            if p is not None:
                load_landmarks(p, rec.frame_rate)
    print(f"manifest OK: {len(manifest.subjects)} subjects")
    return problems


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config,
            manifest=args.manifest,
            out_dir=args.out_dir,
            seed=args.seed,
            modality=getattr(args, "modality", None),
            model=getattr(args, "model", None),
            grid=getattr(args, "grid", None),
            jobs=getattr(args, "jobs", None),
            clamp_predictions=getattr(args, "clamp_predictions", None),
        )
        if args.command == "features":
            return cmd_features(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "stats":
            return cmd_stats(cfg)
        if args.command == "synth":
            return cmd_synth(cfg, subjects=args.subjects, reps=args.reps)
        if args.command == "validate":
            return cmd_validate(cfg)
        raise ValidationError(f"unknown command {args.command!r}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
