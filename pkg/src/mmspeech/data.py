"""Dataset model and file ingestion.

A dataset is described by a single JSON manifest listing subjects, their
clinician scores and the per-recording file paths (WAV audio, landmark CSV,
annotation CSV, transcript text).  Loaders here only parse and validate;
no signal processing happens in this module.
"""
from __future__ import annotations

import json
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EmptyDatasetError, UnsupportedFormatError, ValidationError

GROUPS = ("ALS", "HC")

N_LANDMARKS = 68


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AudioClip:
    """Mono waveform with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if int(self.sample_rate) <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        if samples.ndim != 1:
            raise ValidationError("samples must be one-dimensional")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain non-finite values")
        if samples.size and np.max(np.abs(samples)) > 1.0 + 1e-12:
            raise ValidationError("samples exceed [-1, 1]")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class LandmarkTrack:
    """Per-frame facial landmarks, shape (n_frames, 68, 3)."""

    frames: np.ndarray
    frame_rate: float

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        object.__setattr__(self, "frames", frames)
        if frames.ndim != 3 or frames.shape[1:] != (N_LANDMARKS, 3):
            raise ValidationError(
                f"frames must have shape (n, {N_LANDMARKS}, 3), got {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValidationError("landmark coordinates contain non-finite values")
        if not self.frame_rate > 0:
            raise ValidationError(f"frame_rate must be positive, got {self.frame_rate}")

    def __len__(self):
        return len(self.frames)

    @property
    def duration_s(self) -> float:
        return len(self.frames) / self.frame_rate


@dataclass(frozen=True)
class RepetitionSpan:
    """One sentence repetition, [onset_s, offset_s), 1-based index."""

    index: int
    onset_s: float
    offset_s: float

    def __post_init__(self):
        if self.index < 1:
            raise ValidationError(f"repetition index must be >= 1, got {self.index}")
        if not self.onset_s < self.offset_s:
            raise ValidationError(
                f"span {self.index}: onset {self.onset_s} must precede offset {self.offset_s}")

    @property
    def duration_s(self) -> float:
        return self.offset_s - self.onset_s


@dataclass(frozen=True)
class Recording:
    """File paths for one recording session (any entry may be None)."""

    audio_wav: Optional[Path]
    landmarks_csv: Optional[Path]
    annotations_csv: Optional[Path]
    transcripts_txt: Optional[Path]
    frame_rate: Optional[float] = None


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    group: str
    rater_scores: tuple  # two tuples of five ints, each in [1, 5]
    recordings: tuple = ()

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValidationError(f"group must be one of {GROUPS}, got {self.group!r}")
        scores = self.rater_scores
        if len(scores) != 2 or any(len(r) != 5 for r in scores):
            raise ValidationError(
                f"subject {self.subject_id}: expected 2 raters x 5 sub-scores")
        for ri, rater in enumerate(scores):
            for si, s in enumerate(rater):
                if not (isinstance(s, int) and 1 <= s <= 5):
                    raise ValidationError(
                        f"subject {self.subject_id}: scores[{ri}][{si}]={s!r} outside [1, 5]")

    @property
    def target(self) -> float:
        """Mean of the two raters' five-score totals; lies in [5, 25]."""
        return (sum(self.rater_scores[0]) + sum(self.rater_scores[1])) / 2.0


@dataclass(frozen=True)
class DatasetManifest:
    subjects: tuple
    base_dir: Path = field(default_factory=Path)

    def subject(self, subject_id: str) -> SubjectRecord:
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise KeyError(subject_id)

    @property
    def groups(self) -> dict:
        return {s.subject_id: s.group for s in self.subjects}

    @property
    def targets(self) -> dict:
        return {s.subject_id: s.target for s in self.subjects}


@dataclass(frozen=True)
class Instance:
    """One modeled repetition with at least one feature modality."""

    subject_id: str
    rep: int
    target: float
    audio: Optional[np.ndarray] = None
    video: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.audio is None and self.video is None:
            raise ValidationError(
                f"instance ({self.subject_id}, rep {self.rep}) has no modality")


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

_RECORDING_KEYS = ("audio_wav", "landmarks_csv", "annotations_csv", "transcripts_txt")


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a dataset manifest JSON file.

    Referenced data files are not opened; paths are resolved relative to
    the manifest's directory.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError:
        raise
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from None

    if not isinstance(doc, dict) or "subjects" not in doc:
        raise ValidationError(f"{path}: manifest must be an object with a 'subjects' array")
    subjects = []
    seen = set()
    for i, entry in enumerate(doc["subjects"]):
        where = f"{path}: subjects[{i}]"
        for key in ("id", "group", "scores"):
            if key not in entry:
                raise ValidationError(f"{where}: missing required field '{key}'")
        sid = entry["id"]
        if sid in seen:
            raise ValidationError(f"{where}: duplicate subject id {sid!r}")
        seen.add(sid)
        scores = entry["scores"]
        if len(scores) != 2 or any(len(r) != 5 for r in scores):
            raise ValidationError(f"{where}: 'scores' must be two arrays of five integers")
        for ri, rater in enumerate(scores):
            for si, s in enumerate(rater):
                if not isinstance(s, int) or isinstance(s, bool) or not 1 <= s <= 5:
                    raise ValidationError(
                        f"{where}.scores[{ri}][{si}]: value {s!r} outside [1, 5]")
        recordings = []
        for j, rec in enumerate(entry.get("recordings", [])):
            unknown = set(rec) - set(_RECORDING_KEYS) - {"frame_rate"}
            if unknown:
                raise ValidationError(
                    f"{where}.recordings[{j}]: unknown fields {sorted(unknown)}")
            paths = {}
            for key in _RECORDING_KEYS:
                value = rec.get(key)
                paths[key] = None if value is None else Path(value)
            frame_rate = rec.get("frame_rate")
            if paths["landmarks_csv"] is not None:
                if frame_rate is None or not frame_rate > 0:
                    raise ValidationError(
                        f"{where}.recordings[{j}]: landmarks_csv requires a positive frame_rate")
            recordings.append(Recording(frame_rate=frame_rate, **paths))
        subjects.append(SubjectRecord(
            subject_id=str(sid),
            group=entry["group"],
            rater_scores=tuple(tuple(r) for r in scores),
            recordings=tuple(recordings),
        ))
    return DatasetManifest(subjects=tuple(subjects), base_dir=path.parent)


def dump_manifest(manifest: DatasetManifest) -> str:
    """Serialize a manifest back to its canonical JSON form."""
    doc = {"subjects": []}
    for s in manifest.subjects:
        recs = []
        for r in s.recordings:
            entry = {key: (None if getattr(r, key) is None else str(getattr(r, key)))
                     for key in _RECORDING_KEYS}
            if r.frame_rate is not None:
                entry["frame_rate"] = r.frame_rate
            recs.append(entry)
        doc["subjects"].append({
            "id": s.subject_id,
            "group": s.group,
            "scores": [list(r) for r in s.rater_scores],
            "recordings": recs,
        })
    return json.dumps(doc, indent=2) + "\n"


def resolve(manifest: DatasetManifest, p: Optional[Path]) -> Optional[Path]:
    """Resolve a manifest-relative path against the manifest directory."""
    if p is None:
        return None
    p = Path(p)
    return p if p.is_absolute() else manifest.base_dir / p


# ---------------------------------------------------------------------------
# file loaders
# ---------------------------------------------------------------------------

def load_audio(path) -> AudioClip:
    """Read a PCM-16 mono RIFF/WAVE file into an AudioClip.

    Samples are scaled by 1/32768 so full-scale negative maps to -1.0.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wav:
            nchannels = wav.getnchannels()
            sampwidth = wav.getsampwidth()
            comptype = wav.getcomptype()
            sample_rate = wav.getframerate()
            nframes = wav.getnframes()
            raw = wav.readframes(nframes)
    except wave.Error as exc:
        raise UnsupportedFormatError(f"{path}: not a readable WAVE file ({exc})") from None
    except EOFError:
        raise OSError(f"{path}: truncated WAV header") from None
    if comptype != "NONE":
        raise UnsupportedFormatError(f"{path}: compressed WAV ({comptype}) not supported")
    if nchannels != 1:
        raise UnsupportedFormatError(f"{path}: expected mono, got {nchannels} channels")
    if sampwidth != 2:
        raise UnsupportedFormatError(f"{path}: expected 16-bit PCM, got {8 * sampwidth}-bit")
    if len(raw) < 2 * nframes:
        raise OSError(f"{path}: truncated WAV data ({len(raw)} bytes for {nframes} frames)")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioClip(samples=samples, sample_rate=sample_rate)


def write_audio(path, clip: AudioClip) -> None:
    """Write an AudioClip as PCM-16 mono WAV."""
    data = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(clip.sample_rate)
        wav.writeframes(data.tobytes())


def load_landmarks(path, frame_rate: float) -> LandmarkTrack:
    """Read a landmark CSV (`frame,idx,x,y[,z]`) into a LandmarkTrack.

    Every frame must carry exactly 68 rows; a missing z column defaults
    to 0 for all points.
    """
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
        cols = [c.strip() for c in header.split(",")]
        if cols not in (["frame", "idx", "x", "y"], ["frame", "idx", "x", "y", "z"]):
            raise ValidationError(f"{path}: unexpected header {header!r}")
        has_z = len(cols) == 5
        try:
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ValidationError(f"{path}: unparseable row ({exc})") from None
    if table.size == 0:
        raise ValidationError(f"{path}: no landmark rows")
    if table.shape[1] != len(cols):
        raise ValidationError(f"{path}: rows have {table.shape[1]} fields, header has {len(cols)}")
    if not np.all(np.isfinite(table)):
        raise ValidationError(f"{path}: non-finite coordinate values")

    frame_idx = table[:, 0].astype(np.int64)
    point_idx = table[:, 1].astype(np.int64)
    uniq, counts = np.unique(frame_idx, return_counts=True)
    bad = np.nonzero(counts != N_LANDMARKS)[0]
    if bad.size:
        f = uniq[bad[0]]
        raise ValidationError(
            f"{path}: frame {f} has {counts[bad[0]]} points, expected {N_LANDMARKS}")
    n = len(uniq)
    if uniq[0] != 0 or uniq[-1] != n - 1:
        raise ValidationError(f"{path}: frame indices must be 0-based and consecutive")

    frames = np.zeros((n, N_LANDMARKS, 3))
    if np.any(point_idx < 0) or np.any(point_idx >= N_LANDMARKS):
        raise ValidationError(f"{path}: landmark index outside 0..{N_LANDMARKS - 1}")
    frames[frame_idx, point_idx, 0] = table[:, 2]
    frames[frame_idx, point_idx, 1] = table[:, 3]
    if has_z:
        frames[frame_idx, point_idx, 2] = table[:, 4]
    # catch duplicate idx within a frame (same count, wrong coverage)
    cover = np.zeros((n, N_LANDMARKS), dtype=bool)
    cover[frame_idx, point_idx] = True
    if not cover.all():
        f = int(np.nonzero(~cover.all(axis=1))[0][0])
        raise ValidationError(f"{path}: frame {f} does not cover all {N_LANDMARKS} landmark ids")
    return LandmarkTrack(frames=frames, frame_rate=float(frame_rate))


def load_annotations(path) -> list:
    """Read a `rep,onset_s,offset_s` CSV into a sorted list of RepetitionSpan."""
    path = Path(path)
    spans = []
    with open(path) as fh:
        header = fh.readline().strip()
        if [c.strip() for c in header.split(",")] != ["rep", "onset_s", "offset_s"]:
            raise ValidationError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 fields")
            try:
                rep = int(parts[0])
                onset = float(parts[1])
                offset = float(parts[2])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: unparseable values") from None
            spans.append(RepetitionSpan(index=rep, onset_s=onset, offset_s=offset))
    validate_spans(spans)
    return spans


def validate_spans(spans: Sequence[RepetitionSpan]) -> None:
    """Check ordering and non-overlap of repetition spans."""
    for prev, cur in zip(spans, spans[1:]):
        if cur.index <= prev.index:
            raise ValidationError(
                f"repetition indices must increase: {prev.index} then {cur.index}")
        if cur.onset_s < prev.offset_s:
            raise ValidationError(
                f"spans {prev.index} and {cur.index} overlap "
                f"([{prev.onset_s}, {prev.offset_s}) vs [{cur.onset_s}, {cur.offset_s}))")


def load_transcripts(path) -> list:
    """Read per-repetition ASR hypotheses, line i = repetition i (1-based)."""
    text = Path(path).read_text()
    return [line.strip() for line in text.splitlines()]


# ---------------------------------------------------------------------------
# slicing and reconciliation
# ---------------------------------------------------------------------------

def slice_spans(signal: Union[AudioClip, LandmarkTrack],
                spans: Sequence[RepetitionSpan]) -> list:
    """Cut a signal into per-repetition segments.

    Sample/frame k (at time k/rate) belongs to a span when
    onset_s <= k/rate < offset_s.
    """
    validate_spans(spans)
    if isinstance(signal, AudioClip):
        rate, n = signal.sample_rate, len(signal.samples)
    else:
        rate, n = signal.frame_rate, len(signal.frames)
    duration = n / rate
    out = []
    for span in spans:
        if span.offset_s > duration + 1e-9:
            raise ValidationError(
                f"span {span.index} [{span.onset_s}, {span.offset_s}) exceeds "
                f"signal duration {duration:.6f}s")
        start = int(np.ceil(span.onset_s * rate - 1e-9))
        stop = int(np.ceil(span.offset_s * rate - 1e-9))
        if isinstance(signal, AudioClip):
            out.append(AudioClip(samples=signal.samples[start:stop],
                                 sample_rate=signal.sample_rate))
        else:
            out.append(LandmarkTrack(frames=signal.frames[start:stop],
                                     frame_rate=signal.frame_rate))
    return out


def reconcile_instances(audio_features: dict, video_features: dict,
                        targets: dict, modality: str) -> list:
    """Assemble modeling instances for one modality.

    `audio_features` / `video_features` map (subject_id, rep) to feature
    vectors.  Audio feature keys never include repetition 1 (it is the
    alignment template); the multimodal set is the key intersection and
    therefore also excludes repetition 1.
    """
    if modality not in ("audio", "video", "multimodal"):
        raise ValidationError(f"unknown modality {modality!r}")
    instances = []
    if modality == "audio":
        keys = sorted(audio_features)
        for key in keys:
            sid, rep = key
            instances.append(Instance(subject_id=sid, rep=rep, target=targets[sid],
                                      audio=audio_features[key]))
    elif modality == "video":
        keys = sorted(video_features)
        for key in keys:
            sid, rep = key
            instances.append(Instance(subject_id=sid, rep=rep, target=targets[sid],
                                      video=video_features[key]))
    else:
        keys = sorted(set(audio_features) & set(video_features))
        for key in keys:
            sid, rep = key
            instances.append(Instance(subject_id=sid, rep=rep, target=targets[sid],
                                      audio=audio_features[key],
                                      video=video_features[key]))
    if not instances:
        raise EmptyDatasetError(f"no instances available for modality {modality!r}")
    return instances
