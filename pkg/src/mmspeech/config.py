"""Run configuration: one structured file, overridable from the command line.

Every tunable constant of the analysis and training stack appears here
with its default, so a run is fully described by (config, seed).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import ValidationError

MODALITIES = ("audio", "video", "multimodal")
FAMILIES = ("svr", "mlp", "gbt")


@dataclass
class DspConfig:
    pitch_floor_hz: float = 75.0
    pitch_ceiling_hz: float = 500.0
    pitch_window_s: float = 0.040
    pitch_hop_s: float = 0.010
    voicing_threshold: float = 0.45
    pause_rel_threshold_db: float = -25.0
    min_pause_s: float = 0.060
    energy_window_s: float = 0.025
    energy_hop_s: float = 0.010
    segment_rel_threshold_db: float = -25.0
    segment_min_speech_s: float = 0.3
    segment_min_gap_s: float = 0.15
    mfcc_window_s: float = 0.025
    mfcc_hop_s: float = 0.010
    mfcc_n_mels: int = 26
    mfcc_n_coeffs: int = 13
    reference_sentence: str = "buy bobby a puppy"

    def pitch_config(self):
        from .audio import PitchConfig
        return PitchConfig(f0_floor=self.pitch_floor_hz,
                           f0_ceiling=self.pitch_ceiling_hz,
                           window_s=self.pitch_window_s,
                           hop_s=self.pitch_hop_s,
                           voicing_threshold=self.voicing_threshold)


@dataclass
class TrainConfig:
    svr_tol: float = 1e-3
    svr_max_iter_factor: int = 10
    mlp_epochs: int = 300
    mlp_batch_size: int = 32


@dataclass
class RunConfig:
    manifest: Optional[str] = None
    modality: str = "all"           # audio | video | multimodal | all
    model: str = "all"              # svr | mlp | gbt | all
    seed: int = 0
    out_dir: str = "out"
    clamp_predictions: bool = False
    jobs: int = 1
    grid: str = "full"              # full | smoke
    dsp: DspConfig = field(default_factory=DspConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: dict = field(default_factory=dict)   # CohortParams overrides

    def __post_init__(self):
        if self.modality not in MODALITIES + ("all",):
            raise ValidationError(f"modality must be one of {MODALITIES + ('all',)}")
        if self.model not in FAMILIES + ("all",):
            raise ValidationError(f"model must be one of {FAMILIES + ('all',)}")
        if self.grid not in ("full", "smoke"):
            raise ValidationError("grid must be 'full' or 'smoke'")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")

    @property
    def modalities(self) -> tuple:
        return MODALITIES if self.modality == "all" else (self.modality,)

    @property
    def families(self) -> tuple:
        return FAMILIES if self.model == "all" else (self.model,)

    def to_dict(self) -> dict:
        return asdict(self)


def _merge_dataclass(cls, base, overrides: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ValidationError(f"{where}: unknown config keys {sorted(unknown)}")
    kwargs = {**{f.name: getattr(base, f.name) for f in fields(cls)}, **overrides}
    return cls(**kwargs)


def load_config(path=None, **overrides) -> RunConfig:
    """Build a RunConfig from defaults, an optional JSON file, then overrides."""
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: malformed config JSON: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
    cfg = RunConfig()
    dsp_doc = doc.pop("dsp", {})
    train_doc = doc.pop("train", {})
    synth_doc = doc.pop("synth", {})
    cfg = _merge_dataclass(RunConfig, cfg, doc, str(path or "config"))
    cfg.dsp = _merge_dataclass(DspConfig, DspConfig(), dsp_doc, "config.dsp")
    cfg.train = _merge_dataclass(TrainConfig, TrainConfig(), train_doc, "config.train")
    cfg.synth = dict(synth_doc)
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    cfg.__post_init__()
    return cfg
