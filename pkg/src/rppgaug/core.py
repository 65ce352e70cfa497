"""Shared data model, error types and the seeded random-stream contract.

Frames are stored as float32 tensors in T x H x W x C layout with values in
[0, 1]; the paired label trace holds one value per frame.  Every container
is an immutable value: arrays are exposed as read-only views.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

FRAME_DTYPE = np.float32

# Butterworth passband 0.75-2.5 Hz expressed in beats per minute.
HR_MIN_BPM = 45.0
HR_MAX_BPM = 150.0


class RppgAugError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RppgAugError, ValueError):
    """An operator or configuration parameter is out of its valid domain."""


class InputError(RppgAugError, ValueError):
    """Input data does not satisfy an operation's precondition."""


class ConfigError(RppgAugError):
    """A configuration file fails schema validation or cannot be parsed."""


class FormatError(RppgAugError):
    """An on-disk container or table is malformed."""


class PipelineError(RppgAugError):
    """An operator failed inside a pipeline; carries the operator index."""

    def __init__(self, index: int, name: str, cause: Exception):
        super().__init__(f"operator #{index} ({name}) failed: {cause}")
        self.index = index
        self.name = name
        self.cause = cause


def _frozen(arr: np.ndarray) -> np.ndarray:
    view = arr.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True, eq=False)
class VideoClip:
    """Frame tensor (T, H, W, C) plus its frame rate in Hz."""

    frames: np.ndarray
    fps: float

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=FRAME_DTYPE)
        object.__setattr__(self, "frames", _frozen(frames))
        object.__setattr__(self, "fps", float(self.fps))

    @property
    def shape(self):
        return self.frames.shape

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def replace(self, frames: np.ndarray) -> "VideoClip":
        return VideoClip(frames, self.fps)


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """1-D label waveform sampled at the owning clip's frame rate."""

    values: np.ndarray
    fps: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "fps", float(self.fps))

    def __len__(self) -> int:
        return self.values.shape[0]

    def replace(self, values: np.ndarray) -> "SignalTrace":
        return SignalTrace(values, self.fps)


@dataclass(frozen=True, eq=False)
class Sample:
    """A paired video clip and label trace."""

    clip: VideoClip
    trace: SignalTrace
    id: str = "sample"
    reference_hr: Optional[float] = None

    def with_clip(self, clip: VideoClip) -> "Sample":
        return Sample(clip, self.trace, self.id, self.reference_hr)

    def with_trace(self, trace: SignalTrace) -> "Sample":
        return Sample(self.clip, trace, self.id, self.reference_hr)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def validate_sample(s: Sample) -> list[Violation]:
    """Check every data-model invariant; returns one entry per violation."""
    out = []
    frames = s.clip.frames
    if frames.ndim != 4:
        out.append(Violation("bad-layout", f"frames must be 4-D THWC, got ndim={frames.ndim}"))
    else:
        t, h, w, c = frames.shape
        if t < 2:
            out.append(Violation("too-few-frames", f"T={t} < 2"))
        if h < 1 or w < 1:
            out.append(Violation("empty-frame", f"H={h}, W={w}"))
        if c not in (1, 3):
            out.append(Violation("bad-channels", f"C={c} not in (1, 3)"))
    finite = np.isfinite(frames)
    if not finite.all():
        out.append(Violation("non-finite-pixel", f"{int((~finite).sum())} non-finite pixels"))
    elif frames.size and (frames.min() < 0.0 or frames.max() > 1.0):
        out.append(Violation("pixel-out-of-range", "pixel values outside [0, 1]"))
    if not (s.clip.fps > 0 and np.isfinite(s.clip.fps)):
        out.append(Violation("bad-fps", f"clip fps={s.clip.fps}"))

    values = s.trace.values
    if values.ndim != 1:
        out.append(Violation("bad-trace-shape", f"trace must be 1-D, got ndim={values.ndim}"))
    elif frames.ndim >= 1 and values.shape[0] != frames.shape[0]:
        out.append(Violation(
            "length-mismatch",
            f"clip has {frames.shape[0]} frames, trace has {values.shape[0]} samples"))
    if not np.isfinite(values).all():
        out.append(Violation("non-finite-trace", "trace contains non-finite values"))
    if s.trace.fps != s.clip.fps:
        out.append(Violation("fps-mismatch", f"clip fps={s.clip.fps}, trace fps={s.trace.fps}"))

    hr = s.reference_hr
    if hr is not None and not (HR_MIN_BPM <= hr <= HR_MAX_BPM):
        out.append(Violation(
            "reference-hr-out-of-band",
            f"reference_hr={hr} outside [{HR_MIN_BPM}, {HR_MAX_BPM}] bpm"))
    return out


def _label_words(stage: str) -> tuple[int, int]:
    digest = hashlib.sha256(stage.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little"), int.from_bytes(digest[4:8], "little")


@dataclass(frozen=True)
class SeededRng:
    """Address of one random stream: a master seed plus a stream path.

    The stream path is a tuple of ``(stage, sample_index, operator_index)``
    triples; nested paths address sub-streams.  The generator depends only on
    the address, never on call order.
    """

    master_seed: int
    stream_path: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")

    def child(self, stage: str, sample_index: int = 0, operator_index: int = 0) -> "SeededRng":
        step = (str(stage), int(sample_index), int(operator_index))
        return SeededRng(self.master_seed, self.stream_path + (step,))

    def spawn_key(self) -> tuple[int, ...]:
        key = []
        for stage, sample_index, operator_index in self.stream_path:
            if sample_index < 0 or operator_index < 0:
                raise ParameterError("stream indices must be non-negative")
            key.extend(_label_words(stage))
            key.extend((sample_index, operator_index))
        return tuple(key)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=self.spawn_key())
        return np.random.Generator(np.random.Philox(seq))


def derive_rng(master_seed: int, stage: str, sample_index: int = 0,
               operator_index: int = 0) -> np.random.Generator:
    """Counter-based generator that is a pure function of its four arguments."""
    return SeededRng(master_seed).child(stage, sample_index, operator_index).generator()


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, a SeededRng or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededRng):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return np.random.Generator(np.random.Philox(int(rng)))
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")
