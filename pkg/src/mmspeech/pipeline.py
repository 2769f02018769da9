"""Manifest-to-feature-table orchestration.

Walks every subject recording, slices both streams with the manual
annotations, and assembles the per-repetition audio (18) and video (15)
feature vectors.  Instances that cannot be computed are dropped and
recorded in an exclusion list; nothing is imputed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import audio as adsp
from . import video as vkin
from .config import DspConfig
from .data import (DatasetManifest, load_annotations, load_audio,
                   load_landmarks, load_transcripts, resolve, slice_spans)
from .errors import MissingFeature, ValidationError


@dataclass
class Exclusion:
    modality: str
    subject_id: str
    rep: Optional[int]
    reason: str

    def line(self) -> str:
        rep = "-" if self.rep is None else str(self.rep)
        return f"{self.modality}\t{self.subject_id}\t{rep}\t{self.reason}"


@dataclass
class FeatureTables:
    audio: dict = field(default_factory=dict)   # (subject, rep) -> 18-vector
    video: dict = field(default_factory=dict)   # (subject, rep) -> 15-vector
    exclusions: list = field(default_factory=list)
    # spans seen per modality, for exclusion accounting
    audio_candidates: int = 0
    video_candidates: int = 0


def extract_features(manifest: DatasetManifest,
                     dsp: DspConfig = DspConfig()) -> FeatureTables:
    tables = FeatureTables()
    pitch_cfg = dsp.pitch_config()
    for subject in manifest.subjects:
        seen_reps = set()
        for rec in subject.recordings:
            ann_path = resolve(manifest, rec.annotations_csv)
            if ann_path is None:
                continue  # nothing to slice; recording carries no instances
            spans = load_annotations(ann_path)
            for span in spans:
                if span.index in seen_reps:
                    raise ValidationError(
                        f"subject {subject.subject_id}: repetition {span.index} "
                        "appears in more than one recording")
                seen_reps.add(span.index)
            _extract_audio(tables, manifest, subject, rec, spans, dsp, pitch_cfg)
            _extract_video(tables, manifest, subject, rec, spans)
    return tables


def _extract_audio(tables, manifest, subject, rec, spans, dsp, pitch_cfg):
    sid = subject.subject_id
    wav_path = resolve(manifest, rec.audio_wav)
    if wav_path is None:
        return
    tables.audio_candidates += len(spans)
    clip = load_audio(wav_path)
    segments = slice_spans(clip, spans)
    transcripts = ([] if rec.transcripts_txt is None
                   else load_transcripts(resolve(manifest, rec.transcripts_txt)))

    template_mfcc = None
    for span, segment in zip(spans, segments):
        if span.index == 1:
            template_mfcc = adsp.mfcc(segment, window_s=dsp.mfcc_window_s,
                                      hop_s=dsp.mfcc_hop_s, n_mels=dsp.mfcc_n_mels,
                                      n_coeffs=dsp.mfcc_n_coeffs)
            tables.exclusions.append(Exclusion(
                "audio", sid, 1, "repetition 1 is the alignment template"))
            break
    if template_mfcc is None:
        for span in spans:
            tables.exclusions.append(Exclusion(
                "audio", sid, span.index, "no repetition 1 to serve as template"))
        return

    prev_offset = None
    for span, segment in zip(spans, segments):
        if span.index == 1:
            prev_offset = span.offset_s
            continue
        gap = 0.0 if prev_offset is None else max(0.0, span.onset_s - prev_offset)
        prev_offset = span.offset_s
        if len(transcripts) < span.index or not transcripts[span.index - 1].strip():
            tables.exclusions.append(Exclusion(
                "audio", sid, span.index, "missing transcript line"))
            continue
        context = adsp.RepetitionContext(
            span=span, preceding_gap_s=gap, template_mfcc=template_mfcc,
            reference_text=dsp.reference_sentence,
            hypothesis_text=transcripts[span.index - 1])
        try:
            feats = adsp.audio_features(
                segment, context, pitch_cfg=pitch_cfg,
                pause_threshold_db=dsp.pause_rel_threshold_db,
                min_pause_s=dsp.min_pause_s)
        except MissingFeature as exc:
            tables.exclusions.append(Exclusion("audio", sid, span.index, str(exc)))
            continue
        tables.audio[(sid, span.index)] = feats.as_array()


def _extract_video(tables, manifest, subject, rec, spans):
    sid = subject.subject_id
    lm_path = resolve(manifest, rec.landmarks_csv)
    if lm_path is None:
        return
    tables.video_candidates += len(spans)
    track = load_landmarks(lm_path, rec.frame_rate)
    norm = vkin.normalize_track(track)
    rest = vkin.rest_geometry(norm, spans)
    segments = vkin.slice_normalized(norm, spans)
    for span, segment in zip(spans, segments):
        try:
            feats = vkin.video_features(segment, rest)
        except MissingFeature as exc:
            tables.exclusions.append(Exclusion("video", sid, span.index, str(exc)))
            continue
        tables.video[(sid, span.index)] = feats.as_array()


def multimodal_exclusions(audio: dict, video: dict) -> list:
    """Reconciliation-stage exclusions: keys present in only one modality."""
    out = []
    audio_keys = set(audio)
    video_keys = set(video)
    for sid, rep in sorted(audio_keys - video_keys):
        out.append(Exclusion("multimodal", sid, rep, "no video features for this repetition"))
    for sid, rep in sorted(video_keys - audio_keys):
        out.append(Exclusion("multimodal", sid, rep, "no audio features for this repetition"))
    return out
