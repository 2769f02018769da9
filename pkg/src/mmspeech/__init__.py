"""Audio-visual sentence-repetition analysis and impairment-score regression.

A numpy-based library (plus a small CLI) that extracts 18 acoustic and 15
facial-kinematic features per sentence repetition, trains from-scratch
regressors (SVR/SMO, MLP, boosted trees) under nested leave-one-subject-out
cross-validation, and reports per-subject RMSE, mRMSE, group coefficients
of variation and Friedman statistics.  A synthetic-cohort generator stands
in for the restricted clinical dataset.
"""
from .audio import (AUDIO_FEATURE_NAMES, AudioFeatures, PitchConfig, PitchTrack,
                    PeriodSequence, audio_features, detect_pauses, dtw_distance,
                    estimate_pitch, extract_periods, f0_stats, hnr_mean,
                    jitter_metrics, mfcc, rms_envelope, shimmer_metrics,
                    suggest_spans, word_error_rate)
from .config import DspConfig, RunConfig, TrainConfig, load_config
from .data import (AudioClip, DatasetManifest, Instance, LandmarkTrack, Recording,
                   RepetitionSpan, SubjectRecord, dump_manifest, load_annotations,
                   load_audio, load_landmarks, load_manifest, load_transcripts,
                   reconcile_instances, slice_spans, write_audio)
from .errors import (EmptyDatasetError, MissingFeature, PipelineError,
                     TrainingFailure, UnsupportedFormatError, ValidationError)
from .evaluate import (EvaluationReport, FoldResult, aggregate_metrics,
                       chi_square_sf, design_matrix, friedman_test, nested_loso,
                       subject_rmse)
from .models import (GBTSpec, MLPSpec, SVRSpec, Standardizer, enumerate_grid,
                     fit_model, fit_standardizer, load_model, save_model,
                     smoke_grid, train_gbt, train_mlp, train_svr)
from .pipeline import extract_features
from .synth import CohortParams, synth_cohort
from .video import (VIDEO_FEATURE_NAMES, NormalizedTrack, VideoFeatures,
                    corner_correlation, cumulative_path, derivative_stats,
                    mouth_geometry, normalize_track, rest_geometry, video_features)

__version__ = "0.1.0"
