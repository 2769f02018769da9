"""Synthetic audio-visual cohort generator.

Stands in for the restricted clinical dataset: every subject gets WAV
repetitions synthesized as smooth pulse trains with controlled f0,
period perturbation (jitter target), peak-amplitude perturbation (shimmer
target) and noise calibrated to a target HNR, plus a 68-point landmark
track with sinusoidal mouth opening of controlled amplitude, annotations,
transcripts and clinician-style scores.

Perturbation sequences are centred and rescaled so the designed
jitter/shimmer of each repetition equals its target exactly; the DSP
recovery error is then attributable to the analysis path alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from .data import (AudioClip, RepetitionSpan, dump_manifest, load_manifest,
                   write_audio)

REFERENCE_SENTENCE = "buy bobby a puppy"


@dataclass(frozen=True)
class CohortParams:
    n_subjects: int = 20
    reps_per_subject: int = 10
    als_fraction: float = 0.5
    sample_rate: int = 16000
    frame_rate: float = 30.0
    f0_range: tuple = (110.0, 160.0)
    jitter_range: tuple = (0.005, 0.04)
    shimmer_range: tuple = (0.01, 0.05)
    hnr_db: Optional[float] = 35.0
    mouth_amp_range: tuple = (6.0, 30.0)   # pixels of peak opening
    open_freq_range: tuple = (1.8, 2.8)    # mouth open/close cycles per second
    rep_duration_s: float = 1.1
    gap_s: float = 0.33
    lead_s: float = 0.5
    pause_threshold: float = 0.55          # severity above which pauses appear
    target_noise_sd: float = 0.3
    target_weights: tuple = (6.0, 8.0, 6.0)  # low f0, jitter, small opening
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CohortParams":
        d = dict(d)
        for key in ("f0_range", "jitter_range", "shimmer_range",
                    "mouth_amp_range", "open_freq_range", "target_weights"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


# ---------------------------------------------------------------------------
# waveform synthesis
# ---------------------------------------------------------------------------

def design_perturbation(n: int, target: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean sequence delta with mean |delta_i - delta_{i-1}| == target.

    Applied multiplicatively to a constant base value this yields a
    sequence whose local perturbation ratio equals the target exactly.
    """
    if n < 2:
        return np.zeros(n)
    delta = rng.uniform(-1.0, 1.0, size=n)
    delta -= delta.mean()
    scale = float(np.mean(np.abs(np.diff(delta))))
    if scale == 0.0 or target == 0.0:
        return np.zeros(n)
    delta *= target / scale
    delta -= delta.mean()  # re-centre after scaling (no-op up to float fuzz)
    return delta


def synth_repetition(duration_s: float, f0: float, jitter: float, shimmer: float,
                     sr: int, rng: np.random.Generator,
                     pause: Optional[tuple] = None) -> np.ndarray:
    """Raised-cosine pulse train with designed period/amplitude perturbation.

    Pulse centres are placed with sub-sample precision by sampling the
    continuous pulse shape, so cycle marks and peak amplitudes are
    recoverable to well below one sample.  `pause` is an optional
    (start_s, dur_s) silent gap inside the repetition.
    """
    t0 = 1.0 / f0
    runs = []
    if pause is None:
        runs.append((0.02, duration_s - 0.02))
    else:
        ps, pd = pause
        runs.append((0.02, ps))
        runs.append((ps + pd, duration_s - 0.02))
    x = np.zeros(int(round(duration_s * sr)))
    half_w = max(4.0, 0.11 * t0 * sr)  # pulse half-width in samples
    for run_start, run_end in runs:
        n_cycles = int((run_end - run_start) / t0) - 1
        if n_cycles < 3:
            continue
        deltas = design_perturbation(n_cycles - 1, jitter, rng)
        periods = t0 * (1.0 + deltas)
        marks = run_start + t0 * 0.5 + np.concatenate([[0.0], np.cumsum(periods)])
        marks = marks[marks < run_end - (half_w + 2) / sr]
        amps = 1.0 + design_perturbation(len(marks), shimmer, rng)
        for mark, amp in zip(marks, amps):
            centre = mark * sr
            lo = max(0, int(np.ceil(centre - half_w)))
            hi = min(len(x), int(np.floor(centre + half_w)) + 1)
            if lo >= hi:
                continue
            tau = np.arange(lo, hi) - centre
            x[lo:hi] += amp * 0.5 * (1.0 + np.cos(np.pi * tau / half_w))
    return x


def _scored_rater_totals(target_half: float):
    """Split a half-integer target into two rater totals, each into 5 sub-scores."""
    total2 = int(round(target_half * 2))
    s1 = total2 // 2
    s2 = total2 - s1
    def split(total):
        base, rem = divmod(total, 5)
        return [base + 1 if i < rem else base for i in range(5)]
    return [split(s1), split(s2)]


# ---------------------------------------------------------------------------
# landmarks
# ---------------------------------------------------------------------------

def neutral_face() -> np.ndarray:
    """Static 68-point template in pixel coordinates (y grows downward)."""
    pts = np.zeros((68, 2))
    a = np.pi + np.arange(17) * (np.pi / 16.0)
    pts[0:17, 0] = 300 + 85 * np.cos(a)
    pts[0:17, 1] = 190 - 140 * np.sin(a)
    pts[17:22] = np.column_stack([np.linspace(238, 282, 5), np.full(5, 166.0)])
    pts[22:27] = np.column_stack([np.linspace(318, 362, 5), np.full(5, 166.0)])
    pts[27:31] = np.column_stack([np.full(4, 300.0), np.linspace(185, 240, 4)])
    pts[31:36] = np.column_stack([np.linspace(284, 316, 5), np.full(5, 254.0)])
    pts[36:42] = [(234, 180), (243, 175), (252, 175), (260, 180), (252, 185), (243, 185)]
    pts[42:48] = [(340, 180), (348, 175), (357, 175), (366, 180), (357, 185), (348, 185)]
    a = np.pi - np.arange(12) * (np.pi / 6.0)
    pts[48:60, 0] = 300 + 42 * np.cos(a)
    pts[48:60, 1] = 285 - 16 * np.sin(a)
    a = np.pi - np.arange(8) * (np.pi / 4.0)
    pts[60:68, 0] = 300 + 27 * np.cos(a)
    pts[60:68, 1] = 285 - 6 * np.sin(a)
    return pts

_LOWER_OUTER = (55, 56, 57, 58, 59)
_LOWER_OUTER_W = (0.55, 0.85, 1.0, 0.85, 0.55)
_LOWER_INNER = (65, 66, 67)
_LOWER_INNER_W = (0.8, 0.9, 0.8)
_UPPER_OUTER = (49, 50, 51, 52, 53)
_UPPER_OUTER_W = (0.5, 0.8, 1.0, 0.8, 0.5)
_JAWLINE = (5, 6, 7, 8, 9, 10, 11)
_JAWLINE_W = (0.2, 0.5, 0.8, 1.0, 0.8, 0.5, 0.2)


def animate_face(times: np.ndarray, spans, amp_px: float, open_freq: float,
                 noise_px: float, rng: np.random.Generator) -> np.ndarray:
    """Frames (n, 68, 2): neutral face + mouth opening inside spans + noise."""
    base = neutral_face()
    frames = np.repeat(base[None, :, :], len(times), axis=0)
    opening = np.zeros(len(times))
    for span in spans:
        inside = (times >= span.onset_s) & (times < span.offset_s)
        phase = 2.0 * np.pi * open_freq * (times[inside] - span.onset_s)
        opening[inside] = amp_px * 0.5 * (1.0 - np.cos(phase))
    for idx, w in zip(_LOWER_OUTER, _LOWER_OUTER_W):
        frames[:, idx, 1] += w * opening
    for idx, w in zip(_LOWER_INNER, _LOWER_INNER_W):
        frames[:, idx, 1] += 0.9 * w * opening
    for idx, w in zip(_UPPER_OUTER, _UPPER_OUTER_W):
        frames[:, idx, 1] -= 0.15 * w * opening
    for idx, w in zip(_JAWLINE, _JAWLINE_W):
        frames[:, idx, 1] += 1.25 * w * opening
    frames[:, 48, 0] -= 0.18 * opening
    frames[:, 54, 0] += 0.18 * opening
    frames += rng.normal(0.0, noise_px, size=frames.shape)
    return frames


# ---------------------------------------------------------------------------
# cohort assembly
# ---------------------------------------------------------------------------

def _subject_profile(rng: np.random.Generator, group: str, params: CohortParams):
    """Severity plus the three target-bearing generation parameters."""
    u = rng.uniform(0.35, 1.0) if group == "ALS" else rng.uniform(0.0, 0.5)
    def mix(base):
        return float(np.clip(base + rng.normal(0.0, 0.22), 0.0, 1.0))
    jit_hat = mix(u)
    f0_hat = mix(1.0 - u)
    amp_hat = mix(1.0 - u)
    lo, hi = params.f0_range
    f0 = lo + f0_hat * (hi - lo)
    lo, hi = params.jitter_range
    jitter = lo + jit_hat * (hi - lo)
    lo, hi = params.shimmer_range
    shimmer = lo + mix(u) * (hi - lo)
    lo, hi = params.mouth_amp_range
    amp = lo + amp_hat * (hi - lo)
    return u, f0, jitter, shimmer, amp, (jit_hat, f0_hat, amp_hat)


def _target_for(hats, params: CohortParams, rng: np.random.Generator) -> float:
    jit_hat, f0_hat, amp_hat = hats
    w_f0, w_jit, w_amp = params.target_weights
    clean = 5.0 + w_f0 * (1.0 - f0_hat) + w_jit * jit_hat + w_amp * (1.0 - amp_hat)
    noisy = clean + rng.normal(0.0, params.target_noise_sd)
    return float(np.clip(np.round(noisy * 2.0) / 2.0, 5.0, 25.0))


def synth_cohort(params: CohortParams, out_dir) -> Path:
    """Write a full synthetic dataset under out_dir; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence([int(params.seed)]))
    sr = params.sample_rate
    n_als = int(round(params.n_subjects * params.als_fraction))
    subjects = []
    for si in range(params.n_subjects):
        group = "ALS" if si < n_als else "HC"
        sid = f"{'A' if group == 'ALS' else 'H'}{si:03d}"
        u, f0, jitter, shimmer, amp, hats = _subject_profile(rng, group, params)
        target = _target_for(hats, params, rng)
        open_freq = rng.uniform(*params.open_freq_range)
        noise_px = 0.03 + 0.25 * u

        # timing layout
        spans = []
        t = params.lead_s
        for rep in range(1, params.reps_per_subject + 1):
            dur = params.rep_duration_s + 0.45 * u + rng.uniform(-0.05, 0.05)
            spans.append((rep, t, t + dur))
            t += dur + params.gap_s + 0.1 * u + rng.uniform(0.0, 0.05)
        total_s = t + 0.4

        # audio
        x = np.zeros(int(round(total_s * sr)))
        for rep, onset, offset in spans:
            dur = offset - onset
            pause = None
            if u > params.pause_threshold:
                pause = (0.45 * dur, min(0.08 + 0.15 * u, 0.3 * dur))
            seg = synth_repetition(dur, f0, jitter, shimmer, sr, rng, pause=pause)
            if params.hnr_db is not None:
                power = float(np.mean(seg ** 2))
                sigma = np.sqrt(power / 10.0 ** (params.hnr_db / 10.0))
                noise = rng.normal(0.0, sigma, size=len(seg))
                if pause is not None:
                    ps, pd = pause
                    lo = int(ps * sr)
                    hi = int((ps + pd) * sr)
                    noise[lo:hi] = 0.0
                seg = seg + noise
            lo = int(round(onset * sr))
            x[lo:lo + len(seg)] += seg
        peak = np.max(np.abs(x))
        if peak > 0:
            x *= 0.9 / peak
        subj_dir = out_dir / sid
        subj_dir.mkdir(exist_ok=True)
        write_audio(subj_dir / "audio.wav", AudioClip(samples=x, sample_rate=sr))

        # annotations
        ann = ["rep,onset_s,offset_s"]
        ann += [f"{rep},{onset:.6f},{offset:.6f}" for rep, onset, offset in spans]
        (subj_dir / "annotations.csv").write_text("\n".join(ann) + "\n")

        # transcripts
        lines = []
        words = REFERENCE_SENTENCE.split()
        for rep, _, _ in spans:
            hyp = []
            for w in words:
                r = rng.uniform()
                if r < 0.10 * u:
                    continue  # deletion
                if r < 0.20 * u and w == "puppy":
                    hyp.append("poppy")
                    continue
                hyp.append(w)
            lines.append(" ".join(hyp) if hyp else words[0])
        (subj_dir / "transcripts.txt").write_text("\n".join(lines) + "\n")

        # landmarks
        span_objs = [RepetitionSpan(index=r, onset_s=a, offset_s=b)
                     for r, a, b in spans]
        n_frames = int(np.ceil(total_s * params.frame_rate))
        times = np.arange(n_frames) / params.frame_rate
        frames = animate_face(times, span_objs, amp, open_freq, noise_px, rng)
        rows = ["frame,idx,x,y"]
        for fi in range(n_frames):
            rows.extend(
                f"{fi},{pi},{frames[fi, pi, 0]:.4f},{frames[fi, pi, 1]:.4f}"
                for pi in range(68))
        (subj_dir / "landmarks.csv").write_text("\n".join(rows) + "\n")

        subjects.append({
            "id": sid,
            "group": group,
            "scores": _scored_rater_totals(target),
            "recordings": [{
                "audio_wav": f"{sid}/audio.wav",
                "landmarks_csv": f"{sid}/landmarks.csv",
                "annotations_csv": f"{sid}/annotations.csv",
                "transcripts_txt": f"{sid}/transcripts.txt",
                "frame_rate": params.frame_rate,
            }],
        })

    manifest_path = out_dir / "manifest.json"
    import json
    manifest_path.write_text(json.dumps({"subjects": subjects}, indent=2) + "\n")
    # round-trip through the loader so the written form is the canonical one
    dump = dump_manifest(load_manifest(manifest_path))
    manifest_path.write_text(dump)
    return manifest_path
