"""Deterministic augmentation and heart-rate evaluation for paired face-video / PPG samples."""

from .analysis import (FilterConfig, HrEstimate, MetricsReport, butterworth_bandpass,
                       compute_metrics, estimate_hr_fft)
from .core import (ConfigError, FormatError, InputError, ParameterError, PipelineError, Sample,
                   SeededRng, SignalTrace, VideoClip, derive_rng, validate_sample)
from .pipeline import OpSpec, PipelineSpec, apply_pipeline, proposed_pipeline_spec, sweep
from .synthgen import SynthConfig, generate_sample, oracle_extract

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "FilterConfig", "FormatError", "HrEstimate", "InputError", "MetricsReport",
    "OpSpec", "ParameterError", "PipelineError", "PipelineSpec", "Sample", "SeededRng",
    "SignalTrace", "SynthConfig", "VideoClip", "apply_pipeline", "butterworth_bandpass",
    "compute_metrics", "derive_rng", "estimate_hr_fft", "generate_sample", "oracle_extract",
    "proposed_pipeline_spec", "sweep", "validate_sample",
]
