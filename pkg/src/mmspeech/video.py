"""Facial-landmark kinematics for sentence-repetition video.

Works on the 68-point landmark convention: inner eye corners 39/42 define
the intercanthal normalization, mouth corners are 48 (subject right) and
54 (left), lip midpoints 51/57, chin 8, outer lip contour 48-59.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import LandmarkTrack, RepetitionSpan
from .errors import MissingFeature, ValidationError

VIDEO_FEATURE_NAMES = (
    "path_lower_lip", "path_jaw",
    "mouth_area_mean_rel", "mouth_area_range_rel",
    "vel_width_max", "vel_width_min",
    "vel_lower_lip_max", "vel_lower_lip_min",
    "vel_jaw_max", "vel_jaw_min",
    "jaw_jerk_rms", "lr_area_absdiff", "corner_corr",
    "ecc_mean", "ecc_range",
)

EYE_INNER_R = 39
EYE_INNER_L = 42
MOUTH_CORNER_R = 48
MOUTH_CORNER_L = 54
UPPER_LIP_MID = 51
LOWER_LIP_MID = 57
JAW = 8
OUTER_LIP = tuple(range(48, 60))
# half contours split at the lip midpoints, closed implicitly
RIGHT_HALF = (51, 50, 49, 48, 59, 58, 57)
LEFT_HALF = (51, 52, 53, 54, 55, 56, 57)


@dataclass(frozen=True)
class NormalizedTrack:
    """Landmark track in intercanthal units, eye axis horizontal, midpoint at origin."""

    frames: np.ndarray
    frame_rate: float

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class MouthGeometry:
    width: float
    height: float
    area: float
    area_right: float
    area_left: float
    eccentricity: float


@dataclass(frozen=True)
class VideoFeatures:
    path_lower_lip: float
    path_jaw: float
    mouth_area_mean_rel: float
    mouth_area_range_rel: float
    vel_width_max: float
    vel_width_min: float
    vel_lower_lip_max: float
    vel_lower_lip_min: float
    vel_jaw_max: float
    vel_jaw_min: float
    jaw_jerk_rms: float
    lr_area_absdiff: float
    corner_corr: float
    ecc_mean: float
    ecc_range: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in VIDEO_FEATURE_NAMES])


# ---------------------------------------------------------------------------
# normalization
# ---------------------------------------------------------------------------

def normalize_track(track: LandmarkTrack) -> NormalizedTrack:
    """Translate, rotate and scale every frame into intercanthal units.

    The intercanthal midpoint moves to the origin, the inner-eye axis is
    rotated to the +x direction in the image plane, and all coordinates
    (including z) are divided by the intercanthal distance.
    """
    frames = np.array(track.frames, dtype=np.float64)
    right = frames[:, EYE_INNER_R, :]
    left = frames[:, EYE_INNER_L, :]
    axis = left - right
    dist = np.linalg.norm(axis, axis=1)
    bad = np.flatnonzero(dist <= 1e-12)
    if bad.size:
        raise ValidationError(f"frame {bad[0]}: coincident inner eye corners")
    mid = (right + left) / 2.0
    frames -= mid[:, None, :]
    cos = axis[:, 0] / np.hypot(axis[:, 0], axis[:, 1])
    sin = axis[:, 1] / np.hypot(axis[:, 0], axis[:, 1])
    x = frames[..., 0] * cos[:, None] + frames[..., 1] * sin[:, None]
    y = -frames[..., 0] * sin[:, None] + frames[..., 1] * cos[:, None]
    frames[..., 0] = x
    frames[..., 1] = y
    frames /= dist[:, None, None]
    return NormalizedTrack(frames=frames, frame_rate=track.frame_rate)


# ---------------------------------------------------------------------------
# per-frame geometry
# ---------------------------------------------------------------------------

def _shoelace(xy: np.ndarray) -> float:
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _segments_intersect(p, q, r, s) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1, d2 = orient(p, q, r), orient(p, q, s)
    d3, d4 = orient(r, s, p), orient(r, s, q)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _is_self_intersecting(xy: np.ndarray) -> bool:
    n = len(xy)
    edges = [(xy[i], xy[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # adjacent through closure
            if _segments_intersect(*edges[i], *edges[j]):
                return True
    return False


def mouth_geometry(frame: np.ndarray, check_contour: bool = False) -> MouthGeometry:
    """Width, height, areas and eccentricity of the outer-lip polygon.

    Distances use all available coordinates; areas and eccentricity use
    the x-y projection.  A self-intersecting contour only triggers a
    warning (the absolute shoelace value is used regardless).
    """
    frame = np.asarray(frame, dtype=np.float64)
    width = float(np.linalg.norm(frame[MOUTH_CORNER_L] - frame[MOUTH_CORNER_R]))
    height = float(np.linalg.norm(frame[LOWER_LIP_MID] - frame[UPPER_LIP_MID]))
    contour = frame[list(OUTER_LIP), :2]
    if check_contour and _is_self_intersecting(contour):
        warnings.warn("self-intersecting outer-lip contour; using |shoelace|",
                      stacklevel=2)
    area = abs(_shoelace(contour))
    area_right = abs(_shoelace(frame[list(RIGHT_HALF), :2]))
    area_left = abs(_shoelace(frame[list(LEFT_HALF), :2]))
    w2 = float(np.linalg.norm(frame[MOUTH_CORNER_L, :2] - frame[MOUTH_CORNER_R, :2]))
    h2 = float(np.linalg.norm(frame[LOWER_LIP_MID, :2] - frame[UPPER_LIP_MID, :2]))
    a = max(w2, h2) / 2.0
    b = min(w2, h2) / 2.0
    ecc = float(np.sqrt(max(0.0, 1.0 - (b / a) ** 2))) if a > 0 else 0.0
    return MouthGeometry(width=width, height=height, area=area,
                         area_right=area_right, area_left=area_left,
                         eccentricity=ecc)


def mouth_geometry_series(track: NormalizedTrack) -> dict:
    """Per-frame mouth geometry as arrays keyed by field name."""
    rows = [mouth_geometry(f) for f in track.frames]
    return {name: np.array([getattr(r, name) for r in rows])
            for name in ("width", "height", "area", "area_right", "area_left",
                         "eccentricity")}


# ---------------------------------------------------------------------------
# kinematics
# ---------------------------------------------------------------------------

def cumulative_path(track: NormalizedTrack, landmark: int) -> float:
    """Total Euclidean displacement of one landmark across the track."""
    if len(track) < 2:
        raise ValidationError("cumulative path needs at least 2 frames")
    pts = track.frames[:, landmark, :]
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def derivative_stats(signal: np.ndarray, frame_rate: float, order: int):
    """Forward finite-difference derivative statistics.

    order 1 returns (max, min) of the signed derivative; order 3 returns
    the RMS of the third derivative.  Needs order + 1 samples.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if order not in (1, 3):
        raise ValidationError(f"order must be 1 or 3, got {order}")
    if len(signal) < order + 1:
        raise ValidationError(f"need {order + 1} frames for order {order}, got {len(signal)}")
    deriv = np.diff(signal, n=order) * frame_rate ** order
    if order == 1:
        return float(deriv.max()), float(deriv.min())
    return float(np.sqrt(np.mean(deriv ** 2)))


def corner_speeds(track: NormalizedTrack):
    right = np.linalg.norm(np.diff(track.frames[:, MOUTH_CORNER_R, :], axis=0), axis=1)
    left = np.linalg.norm(np.diff(track.frames[:, MOUTH_CORNER_L, :], axis=0), axis=1)
    return right, left


def corner_correlation(track: NormalizedTrack) -> float:
    """Pearson correlation between right and left mouth-corner speeds."""
    if len(track) < 3:
        raise ValidationError("corner correlation needs at least 3 frames")
    right, left = corner_speeds(track)
    if np.std(right) == 0.0 or np.std(left) == 0.0:
        raise MissingFeature("mouth-corner speed series has zero variance")
    return float(np.corrcoef(right, left)[0, 1])


# ---------------------------------------------------------------------------
# rest reference and assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RestGeometry:
    area: float


def rest_geometry(track: NormalizedTrack, spans) -> RestGeometry:
    """Median mouth area over frames outside every annotated span.

    Falls back to the first 5 frames when no frame is outside a span.
    """
    n = len(track)
    times = np.arange(n) / track.frame_rate
    outside = np.ones(n, dtype=bool)
    for span in spans:
        outside &= ~((times >= span.onset_s) & (times < span.offset_s))
    idx = np.flatnonzero(outside)
    if idx.size == 0:
        idx = np.arange(min(5, n))
    areas = [mouth_geometry(track.frames[i]).area for i in idx]
    return RestGeometry(area=float(np.median(areas)))


def video_features(segment: NormalizedTrack, rest: RestGeometry) -> VideoFeatures:
    """Compute the 15 kinematic/geometric features for one repetition."""
    if len(segment) < 4:
        raise MissingFeature(f"segment has {len(segment)} frames, need at least 4")
    geo = mouth_geometry_series(segment)
    rate = segment.frame_rate

    vel_width = derivative_stats(geo["width"], rate, 1)
    lip_y = segment.frames[:, LOWER_LIP_MID, 1]
    jaw_y = segment.frames[:, JAW, 1]
    vel_lip = derivative_stats(lip_y, rate, 1)
    vel_jaw = derivative_stats(jaw_y, rate, 1)
    jerk = derivative_stats(jaw_y, rate, 3)
    corr = corner_correlation(segment)

    feats = VideoFeatures(
        path_lower_lip=cumulative_path(segment, LOWER_LIP_MID),
        path_jaw=cumulative_path(segment, JAW),
        mouth_area_mean_rel=float(np.mean(geo["area"])) - rest.area,
        mouth_area_range_rel=float(np.ptp(geo["area"])),
        vel_width_max=vel_width[0], vel_width_min=vel_width[1],
        vel_lower_lip_max=vel_lip[0], vel_lower_lip_min=vel_lip[1],
        vel_jaw_max=vel_jaw[0], vel_jaw_min=vel_jaw[1],
        jaw_jerk_rms=jerk,
        lr_area_absdiff=float(np.mean(np.abs(geo["area_right"] - geo["area_left"]))),
        corner_corr=corr,
        ecc_mean=float(np.mean(geo["eccentricity"])),
        ecc_range=float(np.ptp(geo["eccentricity"])),
    )
    bad = [n for n in VIDEO_FEATURE_NAMES if not np.isfinite(getattr(feats, n))]
    if bad:
        raise MissingFeature(f"could not compute {', '.join(bad)}")
    return feats


def slice_normalized(track: NormalizedTrack, spans) -> list:
    """Span-slice an already-normalized track (same rule as data.slice_spans)."""
    out = []
    duration = len(track) / track.frame_rate
    for span in spans:
        if span.offset_s > duration + 1e-9:
            raise ValidationError(
                f"span {span.index} exceeds track duration {duration:.6f}s")
        start = int(np.ceil(span.onset_s * track.frame_rate - 1e-9))
        stop = int(np.ceil(span.offset_s * track.frame_rate - 1e-9))
        out.append(NormalizedTrack(frames=track.frames[start:stop],
                                   frame_rate=track.frame_rate))
    return out
