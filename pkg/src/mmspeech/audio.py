"""Acoustic analysis for sentence-repetition recordings.

Everything needed to turn one repetition segment into its 18 audio
features: short-time energy, pause detection, autocorrelation pitch
tracking, cycle-level perturbation (jitter/shimmer), harmonics-to-noise
ratio, MFCC, dynamic time warping against the first-repetition template,
and word error rate against the task sentence.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import AudioClip, RepetitionSpan
from .errors import MissingFeature, ValidationError

AUDIO_FEATURE_NAMES = (
    "f0_mean", "f0_sd", "f0_median", "f0_min", "f0_max", "f0_range",
    "jitter_local", "jitter_rap", "jitter_ppq5",
    "shimmer_local", "shimmer_apq3", "shimmer_apq5",
    "hnr_mean",
    "sentence_duration_s", "inter_sentence_duration_s", "pause_duration_s",
    "wer", "dtw_to_template",
)


@dataclass(frozen=True)
class PitchConfig:
    f0_floor: float = 75.0
    f0_ceiling: float = 500.0
    window_s: float = 0.040
    hop_s: float = 0.010
    voicing_threshold: float = 0.45

    def __post_init__(self):
        if not 0 < self.f0_floor < self.f0_ceiling:
            raise ValidationError("need 0 < f0_floor < f0_ceiling")
        if self.window_s < 2.0 / self.f0_floor:
            raise ValidationError("window_s must cover at least two floor periods")


@dataclass(frozen=True)
class PitchTrack:
    frame_times: np.ndarray   # frame centers, seconds
    f0: np.ndarray            # Hz, valid only where voiced
    voiced: np.ndarray        # bool
    peak_corr: np.ndarray     # interpolated autocorrelation peak per frame

    def __post_init__(self):
        n = len(self.frame_times)
        if not (len(self.f0) == len(self.voiced) == len(self.peak_corr) == n):
            raise ValidationError("pitch track arrays must have equal length")
        if n > 1 and not np.all(np.diff(self.frame_times) > 0):
            raise ValidationError("frame_times must be strictly increasing")

    @property
    def voiced_f0(self) -> np.ndarray:
        return self.f0[self.voiced]


@dataclass(frozen=True)
class PeriodSequence:
    """Glottal cycle durations and the waveform peak magnitude per cycle."""

    periods: np.ndarray
    peak_amplitudes: np.ndarray

    def __post_init__(self):
        if len(self.periods) != len(self.peak_amplitudes):
            raise ValidationError("periods and peak_amplitudes must align")
        if len(self.periods) and np.min(self.periods) <= 0:
            raise ValidationError("periods must be positive")


@dataclass(frozen=True)
class AudioFeatures:
    f0_mean: float
    f0_sd: float
    f0_median: float
    f0_min: float
    f0_max: float
    f0_range: float
    jitter_local: float
    jitter_rap: float
    jitter_ppq5: float
    shimmer_local: float
    shimmer_apq3: float
    shimmer_apq5: float
    hnr_mean: float
    sentence_duration_s: float
    inter_sentence_duration_s: float
    pause_duration_s: float
    wer: float
    dtw_to_template: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in AUDIO_FEATURE_NAMES])


# ---------------------------------------------------------------------------
# short-time energy
# ---------------------------------------------------------------------------

def _frame_starts(n: int, win: int, hop: int) -> np.ndarray:
    if n < win:
        raise ValidationError(f"signal of {n} samples shorter than one {win}-sample window")
    return np.arange(0, n - win + 1, hop)


def rms_envelope(clip: AudioClip, window_s: float = 0.025,
                 hop_s: float = 0.010) -> np.ndarray:
    """Short-time RMS, returned as an array of (frame_start_time, rms) rows."""
    if not 0 < hop_s <= window_s:
        raise ValidationError("need 0 < hop_s <= window_s")
    sr = clip.sample_rate
    win = int(round(window_s * sr))
    hop = int(round(hop_s * sr))
    starts = _frame_starts(len(clip.samples), win, hop)
    sq = np.concatenate([[0.0], np.cumsum(clip.samples ** 2)])
    rms = np.sqrt((sq[starts + win] - sq[starts]) / win)
    return np.column_stack([starts / sr, rms])


def _db(x: np.ndarray) -> np.ndarray:
    return 20.0 * np.log10(np.maximum(x, 1e-12))


def suggest_spans(envelope: np.ndarray, rel_threshold_db: float = -25.0,
                  min_speech_s: float = 0.3, min_gap_s: float = 0.15) -> list:
    """Propose repetition spans from an RMS envelope.

    Above-threshold runs (relative to the peak frame, in dB) separated by
    gaps shorter than min_gap_s are merged; surviving runs shorter than
    min_speech_s are dropped.  Advisory only; manual annotations win.
    """
    envelope = np.asarray(envelope)
    if envelope.size == 0:
        raise ValidationError("empty envelope")
    times, rms = envelope[:, 0], envelope[:, 1]
    hop = times[1] - times[0] if len(times) > 1 else 0.01
    level = _db(rms)
    active = level > level.max() + rel_threshold_db
    if not active.any():
        return []
    runs = _runs(active)
    merged = [list(runs[0])]
    for start, stop in runs[1:]:
        if (start - merged[-1][1]) * hop < min_gap_s:
            merged[-1][1] = stop
        else:
            merged.append([start, stop])
    spans = []
    for start, stop in merged:
        dur = (stop - start) * hop
        if dur >= min_speech_s:
            spans.append(RepetitionSpan(index=len(spans) + 1,
                                        onset_s=times[start],
                                        offset_s=times[stop - 1] + hop))
    return spans


def _runs(mask: np.ndarray) -> list:
    """[start, stop) index pairs of the True runs in a boolean mask."""
    idx = np.flatnonzero(np.diff(np.concatenate([[0], mask.view(np.int8), [0]])))
    return list(zip(idx[0::2], idx[1::2]))


def detect_pauses(segment: AudioClip, rel_threshold_db: float = -25.0,
                  min_pause_s: float = 0.060, window_s: float = 0.025,
                  hop_s: float = 0.010) -> float:
    """Total seconds of interior sub-threshold runs of at least min_pause_s.

    Runs touching the first or last frame do not count as pauses.  A run's
    extent is the union of its frames' coverage: (count - 1) * hop + window.
    """
    if len(segment.samples) < int(round(window_s * segment.sample_rate)):
        return 0.0
    env = rms_envelope(segment, window_s=window_s, hop_s=hop_s)
    level = _db(env[:, 1])
    quiet = level < level.max() + rel_threshold_db
    total = 0.0
    nframes = len(level)
    for start, stop in _runs(quiet):
        if start == 0 or stop == nframes:
            continue
        extent = (stop - start - 1) * hop_s + window_s
        if extent >= min_pause_s:
            total += extent
    return total


# ---------------------------------------------------------------------------
# pitch
# ---------------------------------------------------------------------------

def _frame_matrix(samples: np.ndarray, win: int, hop: int) -> np.ndarray:
    starts = _frame_starts(len(samples), win, hop)
    return samples[starts[:, None] + np.arange(win)[None, :]], starts


def _normalized_autocorr(frames: np.ndarray, max_lag: int) -> np.ndarray:
    """Normalized cross-correlation r(tau) per frame, tau = 0..max_lag.

    r(tau) = sum x[t] x[t+tau] / sqrt(sum_{t<W-tau} x^2 * sum_{t>=tau} x^2),
    computed on mean-removed frames.
    """
    frames = frames - frames.mean(axis=1, keepdims=True)
    n, win = frames.shape
    nfft = 1
    while nfft < 2 * win:
        nfft *= 2
    spec = np.fft.rfft(frames, n=nfft, axis=1)
    corr = np.fft.irfft(spec.real ** 2 + spec.imag ** 2, n=nfft, axis=1)[:, :max_lag + 1]
    sq = np.concatenate([np.zeros((n, 1)), np.cumsum(frames ** 2, axis=1)], axis=1)
    total = sq[:, -1:]
    lags = np.arange(max_lag + 1)
    e_head = sq[:, win - lags] - sq[:, 0:1]     # energy of x[0 : W-tau]
    e_tail = total - sq[:, lags]                # energy of x[tau : W]
    denom = np.sqrt(e_head * e_tail)
    return np.where(denom > 1e-300, corr / np.maximum(denom, 1e-300), 0.0)


def _parabolic(y_m1, y_0, y_p1):
    """Vertex offset in [-0.5, 0.5] and value of the parabola through 3 points."""
    y_m1 = np.asarray(y_m1, dtype=np.float64)
    y_0 = np.asarray(y_0, dtype=np.float64)
    y_p1 = np.asarray(y_p1, dtype=np.float64)
    denom = y_m1 - 2.0 * y_0 + y_p1
    safe = np.where(denom == 0.0, 1.0, denom)
    offset = np.clip(np.where(denom == 0.0, 0.0, 0.5 * (y_m1 - y_p1) / safe), -0.5, 0.5)
    value = y_0 - 0.25 * (y_m1 - y_p1) * offset
    return offset, value


def estimate_pitch(clip: AudioClip, cfg: PitchConfig = PitchConfig()) -> PitchTrack:
    """Frame-wise autocorrelation pitch with parabolic peak interpolation.

    Candidate lags span [sr/f0_ceiling, sr/f0_floor]; the first (shortest-lag)
    strict local maximum whose interpolated height reaches the voicing
    threshold wins, which resolves ties between a period and its multiples
    in favour of the higher frequency.
    """
    sr = clip.sample_rate
    win = int(round(cfg.window_s * sr))
    hop = int(round(cfg.hop_s * sr))
    n = len(clip.samples)
    if n < win:
        empty = np.array([])
        return PitchTrack(frame_times=empty, f0=empty,
                          voiced=np.array([], dtype=bool), peak_corr=empty)
    frames, starts = _frame_matrix(clip.samples, win, hop)
    lag_min = max(2, int(np.ceil(sr / cfg.f0_ceiling)))
    lag_max = min(win - 2, int(np.floor(sr / cfg.f0_floor)))
    r = _normalized_autocorr(frames, lag_max + 1)

    nfr = len(frames)
    band = r[:, lag_min:lag_max + 1]
    is_max = (band > r[:, lag_min - 1:lag_max]) & (band > r[:, lag_min + 1:lag_max + 2])
    off, val = _parabolic(r[:, lag_min - 1:lag_max], band, r[:, lag_min + 1:lag_max + 2])
    ok = is_max & (val >= cfg.voicing_threshold)
    voiced = ok.any(axis=1)
    first = np.argmax(ok, axis=1)
    rows = np.arange(nfr)
    lag = lag_min + first + off[rows, first]
    f0 = np.where(voiced, np.clip(sr / np.maximum(lag, 1e-9), cfg.f0_floor, cfg.f0_ceiling), 0.0)
    peak = np.where(voiced, val[rows, first], 0.0)
    times = (starts + win / 2.0) / sr
    return PitchTrack(frame_times=times, f0=f0, voiced=voiced, peak_corr=peak)


# ---------------------------------------------------------------------------
# cycle extraction and perturbation metrics
# ---------------------------------------------------------------------------

EDGE_AMP_RATIO = 0.1  # stop walking cycles once peaks fall below this x region max


def extract_periods(clip: AudioClip, pitch: PitchTrack) -> PeriodSequence:
    """Locate one waveform peak per glottal cycle inside voiced regions.

    The walk starts at each voiced region's strongest peak and extends
    one expected period at a time in both directions, with sub-sample
    parabolic refinement of mark time and amplitude.  It stops when the
    next peak drops below EDGE_AMP_RATIO of the region maximum, so the
    half-window margins around a voiced run contribute no spurious
    cycles.  Periods never straddle a voiced-region boundary.
    """
    if not pitch.voiced.any():
        raise MissingFeature("no voiced frames: cannot extract glottal cycles")
    sr = clip.sample_rate
    x = clip.samples
    periods, amps = [], []
    for start_f, stop_f in _runs(pitch.voiced):
        t0 = pitch.frame_times[start_f]
        t1 = pitch.frame_times[stop_f - 1]
        lo = max(0, int(round((t0 - 0.02) * sr)))
        hi = min(len(x), int(round((t1 + 0.02) * sr)) + 1)
        if hi - lo < 3:
            continue
        region = x[lo:hi]
        sign = 1.0 if np.max(region) >= np.max(-region) else -1.0
        y = sign * x
        # run-median period: robust to isolated octave-error frames
        period = sr / float(np.median(pitch.f0[start_f:stop_f][pitch.voiced[start_f:stop_f]]))

        anchor = lo + int(np.argmax(y[lo:hi]))
        floor = EDGE_AMP_RATIO * y[anchor]
        marks = [_refine_peak(y, anchor)]
        for direction in (1.0, -1.0):
            cur = marks[0]
            while True:
                predicted = cur[0] + direction * period
                w_lo = max(lo + 1, int(round(predicted - 0.45 * period)))
                w_hi = min(hi - 2, int(round(predicted + 0.45 * period)))
                if w_hi <= w_lo:
                    break
                window = y[w_lo:w_hi + 1]
                local_max = ((window[1:-1] > window[:-2])
                             & (window[1:-1] > window[2:]))
                cand = np.flatnonzero(local_max) + w_lo + 1
                cand = cand[y[cand] >= floor]
                if cand.size == 0:
                    break
                nearest = cand[int(np.argmin(np.abs(cand - predicted)))]
                cur = _refine_peak(y, int(nearest))
                marks.append(cur)
        marks.sort(key=lambda mk: mk[0])
        for (ta, _), (tb, ab) in zip(marks, marks[1:]):
            periods.append((tb - ta) / sr)
            amps.append(abs(ab))
    if not periods:
        raise MissingFeature("voiced regions too short: no complete glottal cycle")
    return PeriodSequence(periods=np.array(periods), peak_amplitudes=np.array(amps))


def _refine_peak(y: np.ndarray, idx: int):
    """Parabolic sub-sample refinement of a local maximum at integer idx."""
    if 0 < idx < len(y) - 1:
        off, val = _parabolic(y[idx - 1], y[idx], y[idx + 1])
        return idx + float(off), float(val)
    return float(idx), float(y[idx])


def _perturbation(values: np.ndarray, window: int) -> float:
    """Mean absolute deviation from the centred moving average, over mean level.

    NaN when there are fewer values than the averaging window.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < window:
        return float("nan")
    half = window // 2
    if window == 2:
        dev = np.abs(np.diff(values))
    else:
        kernel = np.ones(window) / window
        smooth = np.convolve(values, kernel, mode="valid")
        dev = np.abs(values[half:n - half] - smooth)
    return float(np.mean(dev) / np.mean(values))


def jitter_metrics(ps: PeriodSequence) -> dict:
    """local, RAP and PPQ5 period perturbation ratios (NaN when too few cycles)."""
    if len(ps.periods) < 2:
        raise MissingFeature(f"need at least 2 periods for jitter, got {len(ps.periods)}")
    return {
        "jitter_local": _perturbation(ps.periods, 2),
        "jitter_rap": _perturbation(ps.periods, 3),
        "jitter_ppq5": _perturbation(ps.periods, 5),
    }


def shimmer_metrics(ps: PeriodSequence) -> dict:
    """Same perturbation battery applied to cycle peak amplitudes."""
    if len(ps.peak_amplitudes) < 2:
        raise MissingFeature(
            f"need at least 2 cycles for shimmer, got {len(ps.peak_amplitudes)}")
    return {
        "shimmer_local": _perturbation(ps.peak_amplitudes, 2),
        "shimmer_apq3": _perturbation(ps.peak_amplitudes, 3),
        "shimmer_apq5": _perturbation(ps.peak_amplitudes, 5),
    }


def f0_stats(pitch: PitchTrack) -> dict:
    """Six distribution statistics of the voiced-frame f0 values."""
    f0 = pitch.voiced_f0
    if f0.size == 0:
        raise MissingFeature("no voiced frames: f0 statistics undefined")
    sd = float(np.std(f0, ddof=1)) if f0.size > 1 else 0.0
    return {
        "f0_mean": float(np.mean(f0)),
        "f0_sd": sd,
        "f0_median": float(np.median(f0)),
        "f0_min": float(np.min(f0)),
        "f0_max": float(np.max(f0)),
        "f0_range": float(np.max(f0) - np.min(f0)),
    }


def hnr_mean(clip: AudioClip, pitch: PitchTrack,
             cfg: PitchConfig = PitchConfig()) -> float:
    """Mean frame HNR in dB, from the autocorrelation value at the f0 lag.

    r is clamped to [1e-6, 1 - 1e-6], capping single-frame HNR at about
    +/- 60 dB so pure tones stay finite.
    """
    if not pitch.voiced.any():
        raise MissingFeature("no voiced frames: HNR undefined")
    sr = clip.sample_rate
    win = int(round(cfg.window_s * sr))
    hop = int(round(cfg.hop_s * sr))
    frames, _ = _frame_matrix(clip.samples, win, hop)
    lag_max = min(win - 2, int(np.floor(sr / cfg.f0_floor)))
    r = _normalized_autocorr(frames, lag_max + 1)
    vals = []
    for i in np.flatnonzero(pitch.voiced):
        lag = int(round(sr / pitch.f0[i]))
        lag = min(max(lag, 1), lag_max)
        _, val = _parabolic(r[i, lag - 1], r[i, lag], r[i, lag + 1])
        val = min(max(float(val), 1e-6), 1.0 - 1e-6)
        vals.append(10.0 * np.log10(val / (1.0 - val)))
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# MFCC
# ---------------------------------------------------------------------------

def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def _mel_filterbank(n_mels: int, nfft: int, sr: int) -> np.ndarray:
    edges = _mel_to_hz(np.linspace(_hz_to_mel(0.0), _hz_to_mel(sr / 2.0), n_mels + 2))
    bins = np.fft.rfftfreq(nfft, d=1.0 / sr)
    fb = np.zeros((n_mels, len(bins)))
    for m in range(n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        up = (bins - lo) / max(mid - lo, 1e-12)
        down = (hi - bins) / max(hi - mid, 1e-12)
        fb[m] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def mfcc(clip: AudioClip, window_s: float = 0.025, hop_s: float = 0.010,
         n_mels: int = 26, n_coeffs: int = 13) -> np.ndarray:
    """Mel-frequency cepstra, one row per frame, first n_coeffs columns.

    Hann window, magnitude spectrum, triangular mel filterbank, log,
    orthonormal type-II DCT.
    """
    sr = clip.sample_rate
    win = int(round(window_s * sr))
    hop = int(round(hop_s * sr))
    frames, _ = _frame_matrix(clip.samples, win, hop)
    nfft = 1
    while nfft < win:
        nfft *= 2
    window = np.hanning(win)
    mag = np.abs(np.fft.rfft(frames * window, n=nfft, axis=1))
    fb = _mel_filterbank(n_mels, nfft, sr)
    energies = np.log(np.maximum(mag @ fb.T, 1e-30))
    # orthonormal DCT-II basis, rows k = 0..n_coeffs-1
    m = np.arange(n_mels)
    k = np.arange(n_coeffs)
    basis = np.cos(np.pi * np.outer(k, (m + 0.5)) / n_mels) * np.sqrt(2.0 / n_mels)
    basis[0] /= np.sqrt(2.0)
    return energies @ basis.T


# ---------------------------------------------------------------------------
# DTW
# ---------------------------------------------------------------------------

def dtw_alignment(a: np.ndarray, b: np.ndarray):
    """Minimum-cost monotone alignment of two frame sequences.

    Steps are (1,0), (0,1), (1,1) with Euclidean frame distance.  Returns
    (total_cost, n_steps) where n_steps is the smallest step count among
    minimum-cost paths, so the normalized distance is well defined.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:  # sequence of scalars
        a = a.reshape(-1, 1)
    if b.ndim == 1:
        b = b.reshape(-1, 1)
    if a.size == 0 or b.size == 0:
        raise ValidationError("DTW inputs must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ValidationError(f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    diff = a[:, None, :] - b[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).tolist()
    m, n = len(a), len(b)
    INF = float("inf")
    cost = [[INF] * n for _ in range(m)]
    steps = [[0] * n for _ in range(m)]
    for i in range(m):
        di = d[i]
        ci = cost[i]
        si = steps[i]
        for j in range(n):
            if i == 0 and j == 0:
                ci[0] = di[0]
                continue
            best, bstep = INF, 0
            if i and j:
                best, bstep = cost[i - 1][j - 1], steps[i - 1][j - 1]
            if i:
                c, s = cost[i - 1][j], steps[i - 1][j]
                if c < best or (c == best and s < bstep):
                    best, bstep = c, s
            if j:
                c, s = ci[j - 1], si[j - 1]
                if c < best or (c == best and s < bstep):
                    best, bstep = c, s
            ci[j] = best + di[j]
            si[j] = bstep + 1
    return cost[m - 1][n - 1], steps[m - 1][n - 1]


def dtw_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Alignment cost divided by path length (steps + 1)."""
    total, n_steps = dtw_alignment(a, b)
    return total / (n_steps + 1)


# ---------------------------------------------------------------------------
# word error rate
# ---------------------------------------------------------------------------

_PUNCT = re.compile(r"[^\w\s]", flags=re.UNICODE)


def normalize_words(text) -> list:
    """Case-fold, strip punctuation and split into words."""
    if isinstance(text, str):
        return _PUNCT.sub("", text.lower()).split()
    return [w for w in (_PUNCT.sub("", str(t).lower()) for t in text) if w]


def word_error_rate(reference, hypothesis) -> float:
    """(substitutions + insertions + deletions) / len(reference)."""
    ref = normalize_words(reference)
    hyp = normalize_words(hypothesis)
    if not ref:
        raise ValidationError("reference transcript is empty")
    prev = list(range(len(hyp) + 1))
    for i, rw in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, hw in enumerate(hyp, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (rw != hw))
        prev = cur
    return prev[-1] / len(ref)


# ---------------------------------------------------------------------------
# feature assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RepetitionContext:
    """Everything a repetition needs besides its own waveform."""

    span: RepetitionSpan
    preceding_gap_s: float
    template_mfcc: np.ndarray
    reference_text: str
    hypothesis_text: str


def audio_features(segment: AudioClip, context: RepetitionContext,
                   pitch_cfg: PitchConfig = PitchConfig(),
                   pause_threshold_db: float = -25.0,
                   min_pause_s: float = 0.060) -> AudioFeatures:
    """Compute the 18 audio features for one repetition (index >= 2).

    Raises MissingFeature when any constituent cannot be computed; callers
    drop the instance and log the reason.
    """
    if context.span.index < 2:
        raise ValidationError("repetition 1 is the alignment template, not a modeled instance")
    pitch = estimate_pitch(segment, pitch_cfg)
    stats = f0_stats(pitch)
    ps = extract_periods(segment, pitch)
    jit = jitter_metrics(ps)
    shim = shimmer_metrics(ps)
    hnr = hnr_mean(segment, pitch, pitch_cfg)
    pause = detect_pauses(segment, rel_threshold_db=pause_threshold_db,
                          min_pause_s=min_pause_s)
    wer = word_error_rate(context.reference_text, context.hypothesis_text)
    dtw = dtw_distance(mfcc(segment), context.template_mfcc)
    feats = AudioFeatures(
        **stats, **jit, **shim,
        hnr_mean=hnr,
        sentence_duration_s=context.span.duration_s,
        inter_sentence_duration_s=context.preceding_gap_s,
        pause_duration_s=pause,
        wer=wer,
        dtw_to_template=dtw,
    )
    bad = [n for n in AUDIO_FEATURE_NAMES if not np.isfinite(getattr(feats, n))]
    if bad:
        raise MissingFeature(f"could not compute {', '.join(bad)}")
    return feats
